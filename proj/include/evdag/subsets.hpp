#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evdag {

// Calls fn(subset) for every size-k subset of items in lexicographic order of
// positions (items are expected ascending, so this is lexicographic in value).
// Stops early and returns true as soon as fn returns true.
template <class Fn>
bool for_each_subset(std::span<const int> items, std::size_t k, Fn&& fn) {
    const std::size_t n = items.size();
    if (k > n) return false;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    std::vector<int> subset(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) subset[i] = items[idx[i]];
        if (fn(static_cast<const std::vector<int>&>(subset))) return true;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
        if (i == 0) return false;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// Sizes lo..hi ascending, lexicographic within a size.
template <class Fn>
bool for_each_subset_upto(std::span<const int> items, std::size_t lo, std::size_t hi, Fn&& fn) {
    for (std::size_t k = lo; k <= hi && k <= items.size(); ++k)
        if (for_each_subset(items, k, fn)) return true;
    return false;
}

}  // namespace evdag
