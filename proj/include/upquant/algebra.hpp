#pragma once

// Column-level kernels. Each operation replaces a few output symbols by new
// ones together with a small row-stochastic witness block mapping the new
// symbols back onto the old ones, so that the original channel is recovered
// exactly as (new channel) o (witness). Composing the blocks over a whole
// reduction yields the intermediate-channel witness of the upgrade.

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "upquant/channel.hpp"

namespace upquant {

// Proportionality of columns, cross-multiplied so no division is needed:
// max_i |a[i]*mass(b) - b[i]*mass(a)| <= tol * mass(a) * mass(b).
// Exact (tol = 0) in rational mode.
template <class S>
bool columns_proportional(const SymbolColumn<S>& a, const SymbolColumn<S>& b, double tol = 1e-10) {
    if (a.p() != b.p()) throw error(errc::dimension_mismatch, "proportionality across alphabets");
    const S ma = a.mass(), mb = b.mass();
    if (!(ma > arith<S>::zero()) || !(mb > arith<S>::zero())) return false;
    const S bound = tol_of<S>(tol) * ma * mb;
    for (std::size_t i = 0; i < a.p(); ++i) {
        if (arith<S>::abs(a.e[i] * mb - b.e[i] * ma) > bound) return false;
    }
    return true;
}

template <class S>
struct MergeResult {
    SymbolColumn<S> col; // a + b entrywise
    S weight_a;          // mass(a) / (mass(a) + mass(b)); witness row is (weight_a, weight_b)
    S weight_b;
};

// Merging proportional columns is the lossless reduction: the merged symbol
// carries the summed probabilities and the witness splits it back by mass.
template <class S>
MergeResult<S> merge_proportional(const SymbolColumn<S>& a, const SymbolColumn<S>& b,
                                  double tol = 1e-10) {
    if (!columns_proportional(a, b, tol))
        throw error(errc::not_proportional, "merge of non-proportional columns");
    MergeResult<S> r;
    r.col.e.reserve(a.p());
    for (std::size_t i = 0; i < a.p(); ++i) r.col.e.push_back(a.e[i] + b.e[i]);
    const S total = a.mass() + b.mass();
    r.weight_a = a.mass() / total;
    r.weight_b = b.mass() / total;
    return r;
}

// Splits a column into one singleton per support coordinate. Always a valid
// upgrade: each fragment maps back to the source symbol with probability 1.
template <class S>
std::vector<SymbolColumn<S>> explode(const SymbolColumn<S>& col) {
    std::vector<SymbolColumn<S>> out;
    for (std::size_t i = 0; i < col.p(); ++i) {
        if (col.e[i] > arith<S>::zero()) {
            SymbolColumn<S> f;
            f.e.assign(col.p(), arith<S>::zero());
            f.e[i] = col.e[i];
            out.push_back(std::move(f));
        }
    }
    if (out.empty()) throw error(errc::empty_channel, "explode of a zero-mass column");
    return out;
}

// ---------------------------------------------------------------------------
// proportional_split: the shared 2x2 kernel.
//
// Decomposes mid = s1*v1 + s3*v3 + leftover, where (s1, s3) solve the 2x2
// system exactly on the coordinates of solved_pair and the leftover is the
// componentwise remainder. The matched parts s1*v1 and s3*v3 are meant to be
// absorbed into v1 and v3 (they share those columns' likelihood ratios), so a
// successful split replaces {v1, mid, v3} by {(1+s1)*v1, (1+s3)*v3, leftover}.
//
// witness_rows is the local 3x3 intermediate-channel block over the inputs
// (v1, mid, v3), rows in output order (z1, leftover, z3):
//     [ 1/(1+s1)  s1/(1+s1)  0         ]
//     [ 0         1          0         ]
//     [ 0         s3/(1+s3)  1/(1+s3)  ]
// ---------------------------------------------------------------------------

template <class S>
struct SplitResult {
    S s1;
    S s3;
    SymbolColumn<S> leftover;           // zero on solved_pair by construction
    std::array<std::vector<S>, 3> witness_rows;
};

enum class SplitErrorKind { singular_system, nonnegativity_violated };
enum class SplitPart { s1, s3, leftover };

struct SplitReject {
    SplitErrorKind kind;
    SplitPart part;      // meaningful for nonnegativity_violated
    int coordinate;      // leftover coordinate, or -1 for the s parts
};

template <class S>
using SplitOutcome = std::variant<SplitResult<S>, SplitReject>;

namespace detail {

// Negative values within tol*scale of zero are rounding residue and clamp
// to zero; anything more negative is a genuine constraint violation.
template <class S>
bool clamp_nonneg(S& v, const S& scale, double tol) {
    if (!(v < arith<S>::zero())) return true;
    if constexpr (arith<S>::exact) {
        (void)scale; (void)tol;
        return false;
    } else {
        if (v >= -tol * (scale + std::numeric_limits<double>::min())) {
            v = arith<S>::zero();
            return true;
        }
        return false;
    }
}

} // namespace detail

template <class S>
SplitOutcome<S> proportional_split(const SymbolColumn<S>& mid, const SymbolColumn<S>& v1,
                                   const SymbolColumn<S>& v3, std::pair<int, int> solved_pair,
                                   double negativity_tol = 1e-12) {
    const std::size_t p = mid.p();
    if (v1.p() != p || v3.p() != p)
        throw error(errc::dimension_mismatch, "split columns over different alphabets");
    const int j1 = solved_pair.first, j2 = solved_pair.second;
    if (j1 == j2 || j1 < 0 || j2 < 0 || j1 >= static_cast<int>(p) || j2 >= static_cast<int>(p))
        throw error(errc::invalid_spec, "solved_pair must name two distinct inputs");

    const S zero = arith<S>::zero();
    const S ad = v1.e[j1] * v3.e[j2];
    const S bc = v1.e[j2] * v3.e[j1];
    const S det = ad - bc;
    bool singular;
    if constexpr (arith<S>::exact) {
        singular = (det == zero);
    } else {
        const double scale = std::max(std::abs(ad), std::abs(bc));
        singular = std::abs(det) <= 1e-12 * scale || det == 0.0;
    }
    if (singular) return SplitReject{SplitErrorKind::singular_system, SplitPart::s1, -1};

    S s1 = (mid.e[j1] * v3.e[j2] - mid.e[j2] * v3.e[j1]) / det;
    S s3 = (v1.e[j1] * mid.e[j2] - v1.e[j2] * mid.e[j1]) / det;
    if (!detail::clamp_nonneg(s1, arith<S>::abs(s1) + arith<S>::one(), negativity_tol))
        return SplitReject{SplitErrorKind::nonnegativity_violated, SplitPart::s1, -1};
    if (!detail::clamp_nonneg(s3, arith<S>::abs(s3) + arith<S>::one(), negativity_tol))
        return SplitReject{SplitErrorKind::nonnegativity_violated, SplitPart::s3, -1};

    SplitResult<S> res;
    res.leftover.e.assign(p, zero);
    for (std::size_t i = 0; i < p; ++i) {
        if (static_cast<int>(i) == j1 || static_cast<int>(i) == j2) continue; // exact zero
        S rem = mid.e[i] - s1 * v1.e[i] - s3 * v3.e[i];
        S scale = arith<S>::abs(mid.e[i]) + s1 * arith<S>::abs(v1.e[i]) + s3 * arith<S>::abs(v3.e[i]);
        if (!detail::clamp_nonneg(rem, scale, negativity_tol))
            return SplitReject{SplitErrorKind::nonnegativity_violated, SplitPart::leftover,
                               static_cast<int>(i)};
        res.leftover.e[i] = std::move(rem);
    }

    const S one = arith<S>::one();
    const S q1 = s1 / (one + s1);
    const S q2 = s3 / (one + s3);
    res.witness_rows[0] = {one - q1, q1, zero};
    res.witness_rows[1] = {zero, one, zero};
    res.witness_rows[2] = {zero, q2, one - q2};
    res.s1 = std::move(s1);
    res.s3 = std::move(s3);
    return res;
}

// ---------------------------------------------------------------------------
// odd_fast_path: direct handling of a triple (v1, mid, odd) where the high
// endpoint has one or two zero entries. The zero coordinate pins s1 at once
// (s1 = mid[j]/v1[j]); the residual mid - s1*v1 must then be proportional to
// the odd column for the two-row witness to be consistent, which is checked
// at runtime and reported as absence when it fails. With two zeros, a
// singleton leftover is carved at the second zero coordinate first; if the
// proportionality check fails the two zero coordinates swap roles once.
// ---------------------------------------------------------------------------

template <class S>
struct OddFastPathResult {
    SymbolColumn<S> z1;                        // (1+s1) * v1
    std::optional<SymbolColumn<S>> leftover;   // singleton, two-zero case only
    SymbolColumn<S> z3;                        // (1+s3) * odd
    S s1;
    S s3;
    std::vector<std::vector<S>> witness_rows;  // over inputs (v1, mid, odd)
};

namespace detail {

template <class S>
std::optional<OddFastPathResult<S>> odd_fast_path_at(const SymbolColumn<S>& v1,
                                                     const SymbolColumn<S>& mid,
                                                     const SymbolColumn<S>& odd, int pin,
                                                     int carve, double tol) {
    const std::size_t p = v1.p();
    const S zero = arith<S>::zero();
    const S one = arith<S>::one();

    S s1 = mid.e[pin] / v1.e[pin];
    SymbolColumn<S> r;
    r.e.assign(p, zero);
    for (std::size_t i = 0; i < p; ++i) {
        if (static_cast<int>(i) == pin) continue;
        S rem = mid.e[i] - s1 * v1.e[i];
        S scale = arith<S>::abs(mid.e[i]) + s1 * arith<S>::abs(v1.e[i]);
        if (!clamp_nonneg(rem, scale, tol)) return std::nullopt;
        r.e[i] = std::move(rem);
    }

    std::optional<SymbolColumn<S>> carved;
    if (carve >= 0) {
        SymbolColumn<S> single;
        single.e.assign(p, zero);
        single.e[carve] = r.e[carve];
        r.e[carve] = zero;
        carved = std::move(single);
    }

    // r must now be a scalar multiple of odd (the witness-consistency check).
    if (r.mass() > zero && !columns_proportional(r, odd, tol)) return std::nullopt;
    for (std::size_t i = 0; i < p; ++i)
        if (!(odd.e[i] > zero) && r.e[i] > zero) return std::nullopt;

    S s3 = r.mass() / odd.mass();

    OddFastPathResult<S> out;
    out.z1.e.reserve(p);
    out.z3.e.reserve(p);
    for (std::size_t i = 0; i < p; ++i) {
        out.z1.e.push_back((one + s1) * v1.e[i]);
        out.z3.e.push_back((one + s3) * odd.e[i]);
    }
    const S q1 = s1 / (one + s1);
    const S q2 = s3 / (one + s3);
    if (carved) {
        out.witness_rows = {{one - q1, q1, zero}, {zero, one, zero}, {zero, q2, one - q2}};
        out.leftover = std::move(carved);
    } else {
        out.witness_rows = {{one - q1, q1, zero}, {zero, q2, one - q2}};
    }
    out.s1 = std::move(s1);
    out.s3 = std::move(s3);
    return out;
}

} // namespace detail

template <class S>
std::optional<OddFastPathResult<S>> odd_fast_path(const SymbolColumn<S>& v1,
                                                  const SymbolColumn<S>& mid,
                                                  const SymbolColumn<S>& odd,
                                                  double tol = 1e-10) {
    const std::size_t p = v1.p();
    if (mid.p() != p || odd.p() != p)
        throw error(errc::dimension_mismatch, "fast path columns over different alphabets");
    if (classify_symbol(v1) != SymbolClass::normal || classify_symbol(mid) != SymbolClass::normal)
        return std::nullopt;
    ext_scalar<S> n1 = lr_norm_sq(v1), n2 = lr_norm_sq(mid);
    if (n2 < n1) return std::nullopt;

    std::vector<int> zeros;
    for (std::size_t i = 0; i < p; ++i)
        if (!(odd.e[i] > arith<S>::zero())) zeros.push_back(static_cast<int>(i));
    if (zeros.size() == 1) {
        return detail::odd_fast_path_at(v1, mid, odd, zeros[0], -1, tol);
    }
    if (zeros.size() == 2 && p - zeros.size() >= 2) {
        auto first = detail::odd_fast_path_at(v1, mid, odd, zeros[0], zeros[1], tol);
        if (first) return first;
        return detail::odd_fast_path_at(v1, mid, odd, zeros[1], zeros[0], tol);
    }
    return std::nullopt; // no zeros, or degenerate leftover shape: strata logic owns it
}

// ---------------------------------------------------------------------------
// epsilon_perturb: replaces a column's k zero entries by 1/(k*xi) each and
// removes the same total 1/xi from its largest entry, preserving mass. As
// xi grows the perturbed column's split converges to the direct odd-column
// split; used as a numerical oracle for the odd-endpoint kernels.
// ---------------------------------------------------------------------------
template <class S>
SymbolColumn<S> epsilon_perturb(const SymbolColumn<S>& col, const S& xi) {
    const std::size_t p = col.p();
    const S zero = arith<S>::zero();
    std::vector<std::size_t> zeros;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < p; ++i) {
        if (!(col.e[i] > zero)) zeros.push_back(i);
        if (col.e[i] > col.e[argmax]) argmax = i;
    }
    if (zeros.empty()) throw error(errc::invalid_spec, "epsilon_perturb needs a zero entry");
    if (!(xi > zero)) throw error(errc::invalid_spec, "epsilon_perturb needs xi > 0");
    const S eps = arith<S>::one() / xi;
    if (!(col.e[argmax] > eps))
        throw error(errc::mass_too_small, "largest entry must exceed 1/xi");
    SymbolColumn<S> out = col;
    const S share = eps / S(static_cast<long>(zeros.size()));
    for (std::size_t i : zeros) out.e[i] = share;
    out.e[argmax] -= eps;
    return out;
}

} // namespace upquant
