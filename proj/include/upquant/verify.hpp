#pragma once

// Upgrade verification. check_upgrade_witness re-multiplies the claimed
// factorization W = Q' o P and checks stochasticity; feasibility_oracle
// decides, from scratch and in exact arithmetic, whether ANY witness exists,
// so it can cross-examine the pipeline without sharing any of its code.

#include <cstddef>
#include <utility>
#include <vector>

#include "upquant/channel.hpp"
#include "upquant/rational.hpp"
#include "upquant/reduce.hpp"

namespace upquant {

// (Q' o P)(y|x) = sum_z Q'(z|x) * P(y|z).
template <class S>
Channel<S> compose(const Channel<S>& qp, const IntermediateChannel<S>& ic) {
    if (qp.q() != ic.zsize())
        throw error(errc::dimension_mismatch, "witness has " + std::to_string(ic.zsize()) +
                                                  " rows, channel has " + std::to_string(qp.q()) +
                                                  " outputs");
    Channel<S> out;
    out.p = qp.p;
    const int ys = ic.ysize();
    out.cols.assign(ys, SymbolColumn<S>{});
    for (int y = 0; y < ys; ++y) out.cols[y].e.assign(qp.p, arith<S>::zero());
    for (int z = 0; z < qp.q(); ++z) {
        for (int y = 0; y < ys; ++y) {
            const S& pzy = ic.rows[z][y];
            for (int x = 0; x < qp.p; ++x) out.cols[y].e[x] += qp.cols[z].e[x] * pzy;
        }
    }
    return out;
}

struct VerifyReport {
    bool upgrade_verified = false;
    bool witness_stochastic = false;
    double max_abs_residual = 0.0;
    bool residual_exactly_zero = false; // exact reconstruction (always set in rational mode)
    double max_row_sum_deviation = 0.0;
    double delta_capacity = 0.0; // capacity(Q') - capacity(W)
    double delta_error = 0.0;    // Pe(Q') - Pe(W)
};

template <class S>
VerifyReport check_upgrade_witness(const Channel<S>& w, const Channel<S>& qp,
                                   const IntermediateChannel<S>& ic, double tol = 1e-9) {
    if (w.p != qp.p) throw error(errc::dimension_mismatch, "input alphabets differ");
    if (ic.zsize() != qp.q() || ic.ysize() != w.q())
        throw error(errc::dimension_mismatch, "witness shape does not match the channel pair");

    VerifyReport rep;
    const S stol = tol_of<S>(tol);
    const S zero = arith<S>::zero();
    const S one = arith<S>::one();

    bool stochastic = true;
    S max_dev = zero;
    for (const auto& row : ic.rows) {
        S sum = zero;
        for (const S& v : row) {
            if (v < zero) stochastic = false;
            sum += v;
        }
        S dev = arith<S>::abs(sum - one);
        if (dev > max_dev) max_dev = dev;
        if (dev > stol) stochastic = false;
    }
    rep.witness_stochastic = stochastic;
    rep.max_row_sum_deviation = arith<S>::to_double(max_dev);

    Channel<S> back = compose(qp, ic);
    S max_res = zero;
    for (int y = 0; y < w.q(); ++y) {
        for (int x = 0; x < w.p; ++x) {
            S r = arith<S>::abs(back.at(x, y) - w.at(x, y));
            if (r > max_res) max_res = r;
        }
    }
    rep.max_abs_residual = arith<S>::to_double(max_res);
    rep.residual_exactly_zero = (max_res == zero);
    rep.upgrade_verified = stochastic && !(max_res > stol);

    rep.delta_capacity = symmetric_capacity(qp) - symmetric_capacity(w);
    rep.delta_error = ml_error_probability(qp) - ml_error_probability(w);
    return rep;
}

struct MetricsDelta {
    double delta_capacity;
    double delta_error;
};

template <class S>
MetricsDelta metrics_delta(const Channel<S>& w, const Channel<S>& qp) {
    return {symmetric_capacity(qp) - symmetric_capacity(w),
            ml_error_probability(qp) - ml_error_probability(w)};
}

namespace detail {

// Phase-1 simplex with Bland's rule over exact rationals: minimizes the
// total artificial mass of { A x = b, x >= 0 } and returns that minimum.
// Termination is guaranteed by Bland's rule; everything is exact.
inline rational phase1_infeasibility(std::vector<std::vector<rational>> A,
                                     std::vector<rational> b) {
    const std::size_t m = A.size();
    const std::size_t n = m == 0 ? 0 : A.front().size();
    const rational zero(0), one(1);

    // b must be nonnegative for the artificial start; flip rows as needed.
    for (std::size_t i = 0; i < m; ++i) {
        if (b[i] < zero) {
            for (auto& v : A[i]) v = -v;
            b[i] = -b[i];
        }
    }

    const std::size_t cols = n + m;
    std::vector<std::vector<rational>> T(m, std::vector<rational>(cols + 1, zero));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = one;
        T[i][cols] = b[i];
        basis[i] = n + i;
    }
    // Reduced costs for min(sum of artificials) with the artificial basis.
    std::vector<rational> d(cols, zero);
    rational obj = zero;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) d[j] -= T[i][j];
    for (std::size_t i = 0; i < m; ++i) obj += b[i];

    for (;;) {
        std::size_t enter = cols;
        for (std::size_t j = 0; j < cols; ++j) {
            if (d[j] < zero) { enter = j; break; } // Bland: first improving column
        }
        if (enter == cols) break;

        std::size_t leave = m;
        rational best;
        for (std::size_t i = 0; i < m; ++i) {
            if (T[i][enter] > zero) {
                rational ratio = T[i][cols] / T[i][enter];
                if (leave == m || ratio < best ||
                    (ratio == best && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
        }
        if (leave == m) break; // unbounded below cannot happen here; be safe

        rational piv = T[leave][enter];
        for (auto& v : T[leave]) v /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            rational f = T[i][enter];
            if (f == zero) continue;
            for (std::size_t j = 0; j <= cols; ++j) T[i][j] -= f * T[leave][j];
        }
        rational fd = d[enter];
        if (fd != zero) {
            for (std::size_t j = 0; j < cols; ++j) d[j] -= fd * T[leave][j];
            obj += fd * T[leave][cols]; // entering by t changes the objective by d[enter]*t
        }
        basis[leave] = enter;
    }
    return obj; // minimum total infeasibility
}

} // namespace detail

// Decides whether qp upgrades w at all: is there a row-stochastic P with
// w = qp o P? Solved as exact-rational linear feasibility in the entries of
// P; independent of the reducer. Desk-scale only.
template <class S>
bool feasibility_oracle(const Channel<S>& w, const Channel<S>& qp, double tol = 1e-7) {
    if (w.p != qp.p) throw error(errc::dimension_mismatch, "input alphabets differ");
    if (w.p > 5 || w.q() > 6 || qp.q() > 6)
        throw error(errc::instance_too_large, "oracle bounds are p<=5, |Y|<=6, |Z|<=6");

    const int Y = w.q(), Z = qp.q(), P = w.p;
    const int nvars = Z * Y; // P[z][y] row-major
    std::vector<std::vector<rational>> A;
    std::vector<rational> b;

    auto rx = [](const S& v) {
        if constexpr (arith<S>::exact)
            return v;
        else
            return rational::from_double(v);
    };

    for (int z = 0; z < Z; ++z) { // rows of P are distributions
        std::vector<rational> row(nvars, rational(0));
        for (int y = 0; y < Y; ++y) row[z * Y + y] = rational(1);
        A.push_back(std::move(row));
        b.push_back(rational(1));
    }
    for (int x = 0; x < P; ++x) { // reconstruction equalities
        for (int y = 0; y < Y; ++y) {
            std::vector<rational> row(nvars, rational(0));
            for (int z = 0; z < Z; ++z) row[z * Y + y] = rx(qp.cols[z].e[x]);
            A.push_back(std::move(row));
            b.push_back(rx(w.at(x, y)));
        }
    }

    rational mu = detail::phase1_infeasibility(std::move(A), std::move(b));
    rational bound = arith<S>::exact ? rational(0) : rational::from_double(tol);
    return mu <= bound;
}

} // namespace upquant
