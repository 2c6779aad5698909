#pragma once

#include <algorithm>
#include <optional>
#include <span>

#include "donverify/money.hpp"

namespace donverify {

/// Index of the interval containing `amount` for boundaries b_0..b_m, where
/// interval j is [b_j, b_{j+1}) and the last one is closed. A two-element list
/// with equal ends is the single point interval [b_0, b_0]. nullopt when the
/// amount lies outside [b_0, b_m] or fewer than two boundaries are given.
inline std::optional<std::size_t> find_region(std::span<const Money> boundaries, Money amount) {
    if (boundaries.size() < 2) return std::nullopt;
    if (amount < boundaries.front() || amount > boundaries.back()) return std::nullopt;
    const std::size_t intervals = boundaries.size() - 1;
    // First boundary strictly greater than amount closes the interval.
    auto it = std::upper_bound(boundaries.begin(), boundaries.end(), amount);
    auto idx = static_cast<std::size_t>(it - boundaries.begin());
    if (idx == 0) return std::nullopt;
    return std::min(idx - 1, intervals - 1);
}

}  // namespace donverify
