#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "bidesp/core.hpp"

namespace bidesp {

// Multiset of D_m - V_m values, kept sorted. Union merges; difference
// removes exactly one occurrence per element and requires the left side to
// be a superset (violations indicate a propagation bug and abort loudly).
class DnMultiset {
public:
    DnMultiset() = default;
    explicit DnMultiset(double single) : values_{single} {}

    static DnMultiset single(double v) { return DnMultiset(v); }

    bool empty() const { return values_.empty(); }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }

    double min() const {
        if (values_.empty())
            throw ContractViolation("DnMultiset::min on empty multiset");
        return values_.front();
    }

    void clear() { values_.clear(); }

    void insert(double v) {
        values_.insert(std::upper_bound(values_.begin(), values_.end(), v), v);
    }

    DnMultiset united(const DnMultiset& other) const {
        DnMultiset out;
        out.values_.resize(values_.size() + other.values_.size());
        std::merge(values_.begin(), values_.end(), other.values_.begin(),
                   other.values_.end(), out.values_.begin());
        return out;
    }

    // this minus other, one occurrence per element; other must be a subset.
    DnMultiset subtracted(const DnMultiset& other) const {
        DnMultiset out;
        out.values_.reserve(values_.size());
        std::size_t j = 0;
        for (double v : values_) {
            if (j < other.values_.size() && other.values_[j] == v) {
                ++j;
                continue;
            }
            out.values_.push_back(v);
        }
        if (j != other.values_.size())
            throw ContractViolation(
                "DnMultiset::subtracted: right side is not a subset");
        return out;
    }

    bool operator==(const DnMultiset& o) const { return values_ == o.values_; }

private:
    std::vector<double> values_;
};

} // namespace bidesp
