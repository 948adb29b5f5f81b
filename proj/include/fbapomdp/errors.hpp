#pragma once

#include <stdexcept>
#include <string>

namespace fbapomdp {

// Argument outside an operation's domain (bad index, zero horizon, ...).
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A Dirichlet row with no mass, so its expectation is undefined.
struct DegeneratePrior : std::domain_error {
    using std::domain_error::domain_error;
};

// Prior counts unusable for scoring (negative entries or empty rows).
struct InvalidPrior : std::domain_error {
    using std::domain_error::domain_error;
};

// Counts, topology and spaces that do not describe the same network.
struct ModelInconsistency : std::logic_error {
    using std::logic_error::logic_error;
};

struct EmptyBelief : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every particle assigned zero likelihood to the observation.
struct BeliefCollapse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RejectionTimeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The observed history has zero probability under the model being smoothed.
struct InfeasibleHistory : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fbapomdp
