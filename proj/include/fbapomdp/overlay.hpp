#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fbapomdp {

/// Increments applied on top of immutable counts during one simulated
/// future. Rows are identified by an integer key chosen by the count table
/// that owns them. Cleared at the end of each simulation.
class CountOverlay {
public:
    void clear() { entries_.clear(); }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    void add(std::uint64_t row, std::size_t value, double amount = 1.0) {
        for (auto& e : entries_) {
            if (e.row == row && e.value == value) {
                e.amount += amount;
                return;
            }
        }
        entries_.push_back({row, value, amount});
    }

    double cell(std::uint64_t row, std::size_t value) const {
        for (const auto& e : entries_)
            if (e.row == row && e.value == value) return e.amount;
        return 0.0;
    }

    double row_total(std::uint64_t row) const {
        double t = 0.0;
        for (const auto& e : entries_)
            if (e.row == row) t += e.amount;
        return t;
    }

    bool touches(std::uint64_t row) const {
        for (const auto& e : entries_)
            if (e.row == row) return true;
        return false;
    }

    template <class F>
    void for_each_in_row(std::uint64_t row, F&& f) const {
        for (const auto& e : entries_)
            if (e.row == row) f(e.value, e.amount);
    }

private:
    struct Entry {
        std::uint64_t row;
        std::size_t value;
        double amount;
    };
    std::vector<Entry> entries_;
};

}  // namespace fbapomdp
