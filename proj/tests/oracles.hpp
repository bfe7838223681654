#pragma once

// Independent references for retrieval and labeling. None of these call into
// the library code they check.

#include "formulafind/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

using formulafind::Code;

// Tries every subsequence of `a`, longest first.
inline std::size_t brute_force_lcs(const std::vector<Code>& a, const std::vector<Code>& b) {
    std::size_t best = 0;
    const std::size_t n = a.size();
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
        if (bits <= best) continue;
        std::size_t j = 0;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (!(mask & (1u << i))) continue;
            while (j < b.size() && b[j] != a[i]) ++j;
            if (j == b.size()) ok = false;
            else ++j;
        }
        if (ok) best = bits;
    }
    return best;
}

// Kahan-summed in long double.
inline long double precise_distance(std::span<const float> a, std::span<const float> b) {
    long double sum = 0, carry = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
        const long double y = d * d - carry;
        const long double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return std::sqrt(sum);
}

// Counts open markers directly; deliberately ignores pairing.
inline std::size_t counted_depth(const std::vector<Code>& codes) {
    namespace c = formulafind::codes;
    std::size_t open = 0, best = 0;
    for (Code code : codes) {
        if (code == c::kSupStart || code == c::kSubStart || code == c::kGroupStart) {
            ++open;
        } else if (code == c::kSupEnd || code == c::kSubEnd || code == c::kGroupEnd) {
            --open;
        } else {
            best = std::max(best, open);
        }
    }
    return best;
}

} // namespace oracle
