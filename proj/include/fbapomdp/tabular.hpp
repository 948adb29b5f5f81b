#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "fbapomdp/core.hpp"
#include "fbapomdp/overlay.hpp"

namespace fbapomdp {

/// Dirichlet counts chi over the flat table (s, a) -> (s', o).
///
/// Logically every (s, a) row is dense with |S|*|Omega| entries. Physically
/// the prior is stored once in compressed rows and shared between copies,
/// while observed increments live in a small sorted per-copy delta. Copying
/// a belief particle therefore costs O(number of updates), not O(table).
class TabularCounts {
public:
    static constexpr std::size_t kMaxRowLength = 1'000'000;

    using RowEntries = std::vector<std::pair<std::size_t, double>>;
    /// Fills the nonzero prior entries (column = s' * |Omega| + o) of row (s, a).
    using RowBuilder = std::function<void(StateIndex, ActionId, RowEntries&)>;

    TabularCounts() = default;

    TabularCounts(std::size_t num_states, std::size_t num_actions, std::size_t num_observations,
                  const RowBuilder& build) {
        if (num_states == 0 || num_actions == 0 || num_observations == 0)
            throw InvalidArgument("TabularCounts: empty dimension");
        if (num_states > kMaxRowLength / num_observations)
            throw InvalidArgument("TabularCounts: row length |S|*|Omega| exceeds 1e6 entries");
        auto p = std::make_shared<Prior>();
        p->num_states = num_states;
        p->num_actions = num_actions;
        p->num_observations = num_observations;
        p->row_length = num_states * num_observations;
        const std::size_t rows = num_states * num_actions;
        p->row_offsets.reserve(rows + 1);
        p->totals.reserve(rows);
        p->row_offsets.push_back(0);
        RowEntries entries;
        for (StateIndex s = 0; s < num_states; ++s) {
            for (ActionId a = 0; a < num_actions; ++a) {
                entries.clear();
                build(s, a, entries);
                std::sort(entries.begin(), entries.end());
                double total = 0.0;
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    const auto [col, value] = entries[i];
                    if (col >= p->row_length) throw InvalidArgument("TabularCounts: column out of range");
                    if (value < 0.0 || !std::isfinite(value))
                        throw InvalidArgument("TabularCounts: counts must be finite and nonnegative");
                    if (value == 0.0) continue;
                    if (!p->cols.empty() && p->cols.size() > p->row_offsets.back() && p->cols.back() == col) {
                        p->values.back() += value;
                    } else {
                        p->cols.push_back(col);
                        p->values.push_back(value);
                    }
                    total += value;
                }
                p->row_offsets.push_back(p->cols.size());
                p->totals.push_back(total);
            }
        }
        prior_ = std::move(p);
    }

    /// Dense constructor: `dense` is indexed [((s*A + a)*|S| + s')*|Omega| + o].
    static TabularCounts from_dense(std::size_t num_states, std::size_t num_actions, std::size_t num_observations,
                                    const std::vector<double>& dense) {
        const std::size_t row_length = num_states * num_observations;
        if (dense.size() != num_states * num_actions * row_length)
            throw InvalidArgument("TabularCounts::from_dense: wrong table size");
        return TabularCounts(num_states, num_actions, num_observations, [&](StateIndex s, ActionId a, RowEntries& e) {
            const std::size_t base = (s * num_actions + a) * row_length;
            for (std::size_t col = 0; col < row_length; ++col)
                if (dense[base + col] != 0.0) e.emplace_back(col, dense[base + col]);
        });
    }

    std::size_t num_states() const { return prior_->num_states; }
    std::size_t num_actions() const { return prior_->num_actions; }
    std::size_t num_observations() const { return prior_->num_observations; }
    std::size_t row_length() const { return prior_->row_length; }
    std::size_t num_updates() const { return delta_.size(); }

    std::uint64_t row_key(StateIndex s, ActionId a) const { return s * prior_->num_actions + a; }
    std::size_t column(StateIndex next, ObservationIndex o) const { return next * prior_->num_observations + o; }

    double count(StateIndex s, ActionId a, StateIndex next, ObservationIndex o) const {
        check(s, a, next, o);
        const std::uint64_t row = row_key(s, a);
        const std::size_t col = column(next, o);
        double c = 0.0;
        const auto b = prior_->cols.begin() + static_cast<std::ptrdiff_t>(prior_->row_offsets[row]);
        const auto e = prior_->cols.begin() + static_cast<std::ptrdiff_t>(prior_->row_offsets[row + 1]);
        if (auto it = std::lower_bound(b, e, col); it != e && *it == col)
            c += prior_->values[static_cast<std::size_t>(it - prior_->cols.begin())];
        const std::uint64_t key = row * prior_->row_length + col;
        auto it = std::lower_bound(delta_.begin(), delta_.end(), key,
                                   [](const auto& entry, std::uint64_t k) { return entry.first < k; });
        if (it != delta_.end() && it->first == key) c += it->second;
        return c;
    }

    double row_total(StateIndex s, ActionId a) const {
        const std::uint64_t row = row_key(s, a);
        double t = prior_->totals.at(row);
        for_each_delta(row, [&](std::size_t, double v) { t += v; });
        return t;
    }

    void increment(StateIndex s, ActionId a, StateIndex next, ObservationIndex o, double amount = 1.0) {
        check(s, a, next, o);
        const std::uint64_t key = row_key(s, a) * prior_->row_length + column(next, o);
        auto it = std::lower_bound(delta_.begin(), delta_.end(), key,
                                   [](const auto& entry, std::uint64_t k) { return entry.first < k; });
        if (it != delta_.end() && it->first == key)
            it->second += amount;
        else
            delta_.insert(it, {key, amount});
    }

    /// Visits (column, count) pairs whose sum is the row total. A column may
    /// be visited more than once (prior part and update part).
    template <class F>
    void for_each_in_row(StateIndex s, ActionId a, F&& f) const {
        const std::uint64_t row = row_key(s, a);
        for (std::size_t i = prior_->row_offsets[row]; i < prior_->row_offsets[row + 1]; ++i)
            f(prior_->cols[i], prior_->values[i]);
        for_each_delta(row, f);
    }

    friend bool operator==(const TabularCounts& a, const TabularCounts& b) {
        return a.prior_ == b.prior_ && a.delta_ == b.delta_;
    }

    void check(StateIndex s, ActionId a, StateIndex next, ObservationIndex o) const {
        if (s >= prior_->num_states || next >= prior_->num_states || a >= prior_->num_actions ||
            o >= prior_->num_observations)
            throw InvalidArgument("TabularCounts: index out of range");
    }

private:
    struct Prior {
        std::size_t num_states = 0;
        std::size_t num_actions = 0;
        std::size_t num_observations = 0;
        std::size_t row_length = 0;
        std::vector<std::size_t> row_offsets;
        std::vector<std::size_t> cols;
        std::vector<double> values;
        std::vector<double> totals;
    };

    template <class F>
    void for_each_delta(std::uint64_t row, F&& f) const {
        const std::uint64_t lo = row * prior_->row_length;
        const std::uint64_t hi = lo + prior_->row_length;
        auto it = std::lower_bound(delta_.begin(), delta_.end(), lo,
                                   [](const auto& entry, std::uint64_t k) { return entry.first < k; });
        for (; it != delta_.end() && it->first < hi; ++it) f(static_cast<std::size_t>(it->first - lo), it->second);
    }

    std::shared_ptr<const Prior> prior_;
    std::vector<std::pair<std::uint64_t, double>> delta_;
};

/// P_chi(s', o | s, a) = chi[s,a][s',o] / sum over the row.
inline double expected_prob(const TabularCounts& counts, StateIndex s, ActionId a, StateIndex next,
                            ObservationIndex o) {
    const double c = counts.count(s, a, next, o);
    const double t = counts.row_total(s, a);
    if (!(t > 0.0)) throw DegeneratePrior("expected_prob: row (s, a) has zero mass");
    return c / t;
}

/// chi + delta_{sa}^{s'o}.
inline TabularCounts update_counts(const TabularCounts& counts, StateIndex s, ActionId a, StateIndex next,
                                   ObservationIndex o) {
    TabularCounts out = counts;
    out.increment(s, a, next, o);
    return out;
}

/// Samples a joint (s', o) column from row (s, a), including any simulation
/// increments held in `overlay`.
inline std::size_t sample_tabular_column(const TabularCounts& counts, const CountOverlay* overlay, StateIndex s,
                                         ActionId a, Rng& rng) {
    const std::uint64_t key = counts.row_key(s, a);
    double total = counts.row_total(s, a);
    const bool overlaid = overlay != nullptr && overlay->touches(key);
    if (overlaid) total += overlay->row_total(key);
    if (!(total > 0.0)) throw DegeneratePrior("row (s, a) has zero mass");
    double u = uniform01(rng) * total;
    std::size_t chosen = counts.row_length();
    std::size_t last = counts.row_length();
    auto visit = [&](std::size_t col, double c) {
        if (chosen != counts.row_length() || c <= 0.0) return;
        last = col;
        if (u < c)
            chosen = col;
        else
            u -= c;
    };
    counts.for_each_in_row(s, a, visit);
    if (overlaid) overlay->for_each_in_row(key, visit);
    return chosen != counts.row_length() ? chosen : last;
}

struct TabularStep {
    StateIndex next_state = 0;
    TabularCounts counts;
    ObservationIndex observation = 0;
};

/// Samples (s', o) ~ P_chi(. | s, a), then returns chi + delta_{sa}^{s'o}.
inline TabularStep ba_pomcp_step(StateIndex s, const TabularCounts& counts, ActionId a, Rng& rng) {
    counts.check(s, a, 0, 0);
    const std::size_t col = sample_tabular_column(counts, nullptr, s, a, rng);
    const StateIndex next = col / counts.num_observations();
    const ObservationIndex o = col % counts.num_observations();
    return {next, update_counts(counts, s, a, next, o), o};
}

}  // namespace fbapomdp
