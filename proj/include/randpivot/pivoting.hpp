#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "matrix.hpp"

namespace randpivot {

/// Counter-based deterministic generator (splitmix64 output function).
/// Identical seed gives an identical stream on every platform.
class RngState {
public:
    explicit RngState(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound); consumes exactly one word.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("RngState: zero bound");
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    /// Standard normal via Box-Muller; consumes exactly two words.
    double next_gaussian() {
        const double u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

/// Uniform draw from the size-k subsets of {0,...,n-1}, returned sorted.
/// Partial Fisher-Yates over an index array; consumes exactly k words, so the
/// stream position after a draw depends only on (n, k).
inline PivotSet sample_uniform_subset(RngState& rng, std::size_t n, std::size_t k) {
    if (k < 2 || k > n)
        throw std::invalid_argument("sample_uniform_subset: need 2 <= k <= n");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return PivotSet(std::move(idx));
}

enum class PivotVariant { random_k, greedy_offdiag, greedy_gamma, row_cyclic, column_cyclic };

/// Strategy producing the next pivot set. Each value owns its cursor/RNG
/// state; distinct values can run concurrently.
class PivotRule {
public:
    static PivotRule random_k(std::size_t k, std::uint64_t seed) {
        if (k < 2) throw std::invalid_argument("PivotRule: k must be at least 2");
        PivotRule r(PivotVariant::random_k, seed);
        r.k_ = k;
        return r;
    }
    static PivotRule greedy_offdiag() { return PivotRule(PivotVariant::greedy_offdiag, 0); }
    static PivotRule greedy_gamma() { return PivotRule(PivotVariant::greedy_gamma, 0); }
    static PivotRule row_cyclic() { return PivotRule(PivotVariant::row_cyclic, 0); }
    static PivotRule column_cyclic() { return PivotRule(PivotVariant::column_cyclic, 0); }

    /// Grammar: "random:k=K", "greedy-offdiag", "greedy-gamma",
    /// "row-cyclic", "column-cyclic".
    static PivotRule parse(const std::string& spec, std::uint64_t seed) {
        if (spec == "greedy-offdiag") return greedy_offdiag();
        if (spec == "greedy-gamma") return greedy_gamma();
        if (spec == "row-cyclic") return row_cyclic();
        if (spec == "column-cyclic") return column_cyclic();
        if (spec == "random") return random_k(2, seed);
        const std::string prefix = "random:k=";
        if (spec.rfind(prefix, 0) == 0) {
            const std::string tail = spec.substr(prefix.size());
            std::size_t pos = 0;
            unsigned long k = 0;
            try {
                k = std::stoul(tail, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("PivotRule: bad pivot spec '" + spec + "'");
            }
            if (pos != tail.size() || k < 2)
                throw std::invalid_argument("PivotRule: bad pivot spec '" + spec + "'");
            return random_k(k, seed);
        }
        throw std::invalid_argument("PivotRule: unknown pivot spec '" + spec + "'");
    }

    PivotVariant variant() const { return variant_; }
    std::size_t pivot_size() const { return k_; }
    bool needs_matrix() const {
        return variant_ == PivotVariant::greedy_offdiag || variant_ == PivotVariant::greedy_gamma;
    }

    /// Emits the next pivot. Greedy variants require the current symmetric
    /// state (the matrix itself or the Gram of the current columns); random
    /// and cyclic variants ignore it.
    PivotSet next(std::size_t n, const SymmetricMatrix* state = nullptr) {
        if (n < k_) throw std::invalid_argument("PivotRule: pivot size exceeds matrix order");
        switch (variant_) {
            case PivotVariant::random_k:
                return sample_uniform_subset(rng_, n, k_);
            case PivotVariant::greedy_offdiag: {
                require_state(state, n);
                std::size_t bi = 0, bj = 1;
                double best = -1.0;
                for (std::size_t i = 0; i + 1 < n; ++i)
                    for (std::size_t j = i + 1; j < n; ++j)
                        if (std::fabs((*state)(i, j)) > best) {
                            best = std::fabs((*state)(i, j));
                            bi = i;
                            bj = j;
                        }
                return PivotSet::pair(bi, bj);
            }
            case PivotVariant::greedy_gamma: {
                require_state(state, n);
                const SymmetricMatrix inv = spd_inverse(*state);
                std::size_t bi = 0, bj = 1;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i + 1 < n; ++i)
                    for (std::size_t j = i + 1; j < n; ++j) {
                        const double v = (*state)(i, j) * inv(i, j);
                        if (v < best) {
                            best = v;
                            bi = i;
                            bj = j;
                        }
                    }
                return PivotSet::pair(bi, bj);
            }
            case PivotVariant::row_cyclic:
            case PivotVariant::column_cyclic: {
                reset_cursor_if_needed(n);
                const PivotSet out = PivotSet::pair(cursor_i_, cursor_j_);
                advance_cursor(n);
                return out;
            }
        }
        throw std::logic_error("PivotRule: unreachable");
    }

private:
    PivotRule(PivotVariant v, std::uint64_t seed) : variant_(v), rng_(seed) {}

    static void require_state(const SymmetricMatrix* state, std::size_t n) {
        if (state == nullptr || state->order() != n)
            throw std::invalid_argument("PivotRule: greedy rule requires the current matrix");
    }

    void reset_cursor_if_needed(std::size_t n) {
        if (cursor_n_ != n) {
            cursor_n_ = n;
            cursor_i_ = 0;
            cursor_j_ = 1;
        }
    }

    void advance_cursor(std::size_t n) {
        if (variant_ == PivotVariant::row_cyclic) {
            // (0,1),(0,2),...,(0,n-1),(1,2),...,(n-2,n-1), repeating
            if (++cursor_j_ == n) {
                if (++cursor_i_ == n - 1) cursor_i_ = 0;
                cursor_j_ = cursor_i_ + 1;
            }
        } else {
            // (0,1),(0,2),(1,2),(0,3),(1,3),(2,3),..., repeating
            if (++cursor_i_ == cursor_j_) {
                cursor_i_ = 0;
                if (++cursor_j_ == n) cursor_j_ = 1;
            }
        }
    }

    PivotVariant variant_;
    std::size_t k_ = 2;
    RngState rng_;
    std::size_t cursor_n_ = 0;
    std::size_t cursor_i_ = 0;
    std::size_t cursor_j_ = 1;
};

/// Convenience free function matching the strategy interface.
inline PivotSet next_pivot(PivotRule& rule, std::size_t n, const SymmetricMatrix* state = nullptr) {
    return rule.next(n, state);
}

}  // namespace randpivot
