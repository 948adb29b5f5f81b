#pragma once

#include "fbapomdp/agent.hpp"
#include "fbapomdp/belief.hpp"
#include "fbapomdp/core.hpp"
#include "fbapomdp/domain.hpp"
#include "fbapomdp/domains.hpp"
#include "fbapomdp/errors.hpp"
#include "fbapomdp/experiment.hpp"
#include "fbapomdp/factored.hpp"
#include "fbapomdp/models.hpp"
#include "fbapomdp/overlay.hpp"
#include "fbapomdp/planner.hpp"
#include "fbapomdp/prior.hpp"
#include "fbapomdp/reinvigoration.hpp"
#include "fbapomdp/tabular.hpp"
#include "fbapomdp/topology.hpp"
