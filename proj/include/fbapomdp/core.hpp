#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "fbapomdp/errors.hpp"

namespace fbapomdp {

using Rng = std::mt19937_64;
using StateIndex = std::size_t;
using ObservationIndex = std::size_t;
using ActionId = std::size_t;

// Feature values of one state or observation; small enough to stay on the stack.
using ValueVector = boost::container::small_vector<std::size_t, 16>;

/// Uniform double in [0, 1) built from the top 53 bits of one draw, so that
/// sequences are identical across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Draws an index proportionally to nonnegative `weights`. Returns
/// `weights.size()` when the total is not positive.
inline std::size_t sample_weighted(std::span<const double> weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return weights.size();
    double u = uniform01(rng) * total;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return last_positive;
}

struct Feature {
    std::string name;
    std::size_t arity = 2;
};

/// Product space of discrete features with a little-endian mixed-radix flat
/// index: feature 0 varies fastest.
class FactoredSpace {
public:
    FactoredSpace() = default;

    explicit FactoredSpace(std::vector<Feature> features) : features_(std::move(features)) {
        if (features_.empty()) throw InvalidArgument("FactoredSpace: at least one feature required");
        strides_.reserve(features_.size());
        std::size_t stride = 1;
        for (const auto& f : features_) {
            if (f.arity < 2)
                throw InvalidArgument("FactoredSpace: feature '" + f.name + "' has arity < 2");
            strides_.push_back(stride);
            if (stride > std::numeric_limits<std::uint32_t>::max() / f.arity)
                throw InvalidArgument("FactoredSpace: space too large");
            stride *= f.arity;
        }
        size_ = stride;
    }

    std::size_t size() const { return size_; }
    std::size_t num_features() const { return features_.size(); }
    const Feature& feature(std::size_t i) const { return features_.at(i); }
    const std::vector<Feature>& features() const { return features_; }
    std::size_t arity(std::size_t i) const { return features_[i].arity; }
    std::size_t stride(std::size_t i) const { return strides_[i]; }

    std::size_t value(std::size_t index, std::size_t feature) const {
        return (index / strides_[feature]) % features_[feature].arity;
    }

    std::size_t index(std::span<const std::size_t> values) const {
        if (values.size() != features_.size())
            throw InvalidArgument("FactoredSpace::index: wrong number of feature values");
        std::size_t idx = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] >= features_[i].arity)
                throw InvalidArgument("FactoredSpace::index: value out of range for '" +
                                      features_[i].name + "'");
            idx += values[i] * strides_[i];
        }
        return idx;
    }

    std::size_t index(const ValueVector& values) const { return index({values.data(), values.size()}); }
    std::size_t encode(const ValueVector& values) const { return encode({values.data(), values.size()}); }

    ValueVector values(std::size_t index) const {
        ValueVector out(features_.size());
        decode(index, out);
        return out;
    }

    void decode(std::size_t index, ValueVector& out) const {
        out.resize(features_.size());
        for (std::size_t i = 0; i < features_.size(); ++i) {
            out[i] = index % features_[i].arity;
            index /= features_[i].arity;
        }
    }

    std::size_t encode(std::span<const std::size_t> values) const {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < values.size(); ++i) idx += values[i] * strides_[i];
        return idx;
    }

    std::size_t with_value(std::size_t index, std::size_t feature, std::size_t v) const {
        return index - value(index, feature) * strides_[feature] + v * strides_[feature];
    }

    std::size_t feature_index(const std::string& name) const {
        for (std::size_t i = 0; i < features_.size(); ++i)
            if (features_[i].name == name) return i;
        throw InvalidArgument("FactoredSpace: no feature named '" + name + "'");
    }

    friend bool operator==(const FactoredSpace& a, const FactoredSpace& b) {
        if (a.features_.size() != b.features_.size()) return false;
        for (std::size_t i = 0; i < a.features_.size(); ++i)
            if (a.features_[i].arity != b.features_[i].arity) return false;
        return true;
    }

private:
    std::vector<Feature> features_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

/// Sum of discount^t * rewards[t].
inline double discounted_return(std::span<const double> rewards, double discount) {
    if (!(discount > 0.0 && discount < 1.0))
        throw InvalidArgument("discounted_return: discount must lie in (0, 1)");
    double total = 0.0;
    double factor = 1.0;
    for (double r : rewards) {
        total += factor * r;
        factor *= discount;
    }
    return total;
}

/// Action-observation record of real interaction, one entry per executed
/// step. Observations are flat indices into the observation space.
struct History {
    std::vector<ActionId> actions;
    std::vector<ObservationIndex> observations;
    std::vector<double> step_log_likelihoods;

    std::size_t size() const { return actions.size(); }
};

/// A history annotated with hidden states s_0..s_T, where step t moves
/// states[t] to states[t+1] under actions[t] and emits observations[t].
struct Trajectory {
    std::vector<StateIndex> states;
    std::vector<ActionId> actions;
    std::vector<ObservationIndex> observations;

    std::size_t length() const { return actions.size(); }

    void validate() const {
        if (actions.size() != observations.size() || states.size() != actions.size() + 1)
            throw InvalidArgument("Trajectory: need T+1 states for T actions and observations");
    }
};

}  // namespace fbapomdp
