#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "freematrix/errors.hpp"

namespace freematrix {

/// A pairing of a subset of [p] (1-based). Positions not covered by a pair
/// are listed in `unpaired`; a perfect pairing has none.
struct PairPartition {
    int ground_size = 0;
    std::vector<std::pair<int, int>> pairs;  // each with first < second
    std::vector<int> unpaired;               // sorted

    /// A pairing crosses iff it contains {i,j},{k,l} with i < k < j < l.
    bool is_crossing() const {
        for (std::size_t a = 0; a < pairs.size(); ++a)
            for (std::size_t b = a + 1; b < pairs.size(); ++b) {
                auto [i, j] = pairs[a];
                auto [k, l] = pairs[b];
                if (k < i) {
                    std::swap(i, k);
                    std::swap(j, l);
                }
                if (i < k && k < j && j < l) return true;
            }
        return false;
    }
};

struct PairingOptions {
    bool noncrossing_only = false;
    bool allow_partial = false;
};

inline constexpr int kMaxPairingGroundSize = 20;

namespace detail {

/// Recursive enumeration in lexicographic order: the smallest open position
/// is paired with each larger partner in turn (optionally left unpaired
/// first). For noncrossing enumeration a candidate pair is rejected as soon
/// as it crosses an already placed pair; every crossing involves the later
/// of the two pairs, so the incremental check is complete.
template <typename Visitor>
bool enumerate_pairings_impl(int p, const PairingOptions& opt, std::vector<int>& state,
                             PairPartition& current, const Visitor& visit) {
    int r = 0;
    while (r < p && state[r] != 0) ++r;
    if (r == p) {
        current.unpaired.clear();
        for (int i = 0; i < p; ++i)
            if (state[i] == 2) current.unpaired.push_back(i + 1);
        return visit(static_cast<const PairPartition&>(current));
    }
    if (opt.allow_partial) {
        state[r] = 2;
        bool go = enumerate_pairings_impl(p, opt, state, current, visit);
        state[r] = 0;
        if (!go) return false;
    }
    state[r] = 1;
    for (int s = r + 1; s < p; ++s) {
        if (state[s] != 0) continue;
        if (opt.noncrossing_only) {
            bool crosses = false;
            for (auto [a, b] : current.pairs)  // a < r + 1 always holds here
                if (r + 1 < b && b < s + 1) {
                    crosses = true;
                    break;
                }
            if (crosses) continue;
        }
        state[s] = 1;
        current.pairs.emplace_back(r + 1, s + 1);
        bool go = enumerate_pairings_impl(p, opt, state, current, visit);
        current.pairs.pop_back();
        state[s] = 0;
        if (!go) return false;
    }
    state[r] = 0;
    return true;
}

}  // namespace detail

/// Streams all pairings of [p] in deterministic lexicographic order to the
/// visitor, which returns false to stop early. Perfect pairings require even
/// p unless allow_partial is set.
template <typename Visitor>
void for_each_pairing(int p, const PairingOptions& opt, const Visitor& visit) {
    if (p < 0 || p > kMaxPairingGroundSize)
        throw SizeLimitExceeded("pairing ground set size " + std::to_string(p) +
                                " exceeds limit " + std::to_string(kMaxPairingGroundSize));
    if (!opt.allow_partial && p % 2 != 0)
        throw SizeLimitExceeded("perfect pairings need an even ground set; got " +
                                std::to_string(p));
    if (p == 0) {
        PairPartition empty;
        visit(empty);
        return;
    }
    std::vector<int> state(p, 0);  // 0 open, 1 paired, 2 unpaired
    PairPartition current;
    current.ground_size = p;
    detail::enumerate_pairings_impl(p, opt, state, current, visit);
}

/// Materialized variant for small p.
inline std::vector<PairPartition> enumerate_pairings(int p, bool noncrossing_only = false,
                                                     bool allow_partial = false) {
    std::vector<PairPartition> out;
    for_each_pairing(p, PairingOptions{noncrossing_only, allow_partial},
                     [&](const PairPartition& pp) {
                         out.push_back(pp);
                         return true;
                     });
    return out;
}

inline std::uint64_t count_pairings(int p, bool noncrossing_only) {
    std::uint64_t count = 0;
    for_each_pairing(p, PairingOptions{noncrossing_only, false}, [&](const PairPartition&) {
        ++count;
        return true;
    });
    return count;
}

inline std::uint64_t catalan(int k) {
    std::uint64_t c = 1;
    for (int i = 0; i < k; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
    return c;
}

inline std::uint64_t double_factorial_odd(int p) {  // (p-1)!! for even p
    std::uint64_t r = 1;
    for (int k = p - 1; k >= 1; k -= 2) r *= static_cast<std::uint64_t>(k);
    return r;
}

/// Word of semicircular colors (k_1, ..., k_p).
using Word = std::vector<int>;

/// tau(s_{k_1} ... s_{k_p}): the number of noncrossing pairings of [p] whose
/// pairs carry matching colors. Zero for odd p.
inline std::uint64_t tau_monomial(const Word& word) {
    const int p = static_cast<int>(word.size());
    if (p % 2 != 0) return 0;
    std::uint64_t count = 0;
    for_each_pairing(p, PairingOptions{/*noncrossing_only=*/true, false},
                     [&](const PairPartition& pp) {
                         for (auto [r, s] : pp.pairs)
                             if (word[r - 1] != word[s - 1]) return true;
                         ++count;
                         return true;
                     });
    return count;
}

}  // namespace freematrix
