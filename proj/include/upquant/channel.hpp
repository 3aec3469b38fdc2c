#pragma once

// Core value types for discrete memoryless channels, stored column-major:
// a channel X -> Y is a list of output columns, each holding the p
// transition probabilities W(y|x) for its output symbol y.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "upquant/arith.hpp"
#include "upquant/errors.hpp"

namespace upquant {

template <class S>
struct SymbolColumn {
    std::vector<S> e; // length p, entry x is W(y|x)

    std::size_t p() const { return e.size(); }

    S mass() const {
        S m = arith<S>::zero();
        for (const S& v : e) m += v;
        return m;
    }

    std::vector<int> support() const {
        std::vector<int> s;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] > arith<S>::zero()) s.push_back(static_cast<int>(i));
        return s;
    }

    friend bool operator==(const SymbolColumn& a, const SymbolColumn& b) { return a.e == b.e; }
};

template <class S>
SymbolColumn<S> scaled(const SymbolColumn<S>& c, const S& f) {
    SymbolColumn<S> r = c;
    for (S& v : r.e) v *= f;
    return r;
}

template <class S>
struct Channel {
    int p = 0;
    std::vector<SymbolColumn<S>> cols;

    int q() const { return static_cast<int>(cols.size()); }

    const S& at(int x, int y) const { return cols[y].e[x]; }

    // Rows as the file format sees them: row x lists W(y|x) over all y.
    std::vector<S> row(int x) const {
        std::vector<S> r;
        r.reserve(cols.size());
        for (const auto& c : cols) r.push_back(c.e[x]);
        return r;
    }
};

// Likelihood-ratio vector of a column: w_i = e[ref] / e[i], with +inf at
// zero entries. The reference input is 0, or the smallest support index
// when entry 0 vanishes. Zero-mass columns are rejected upstream.
template <class S>
struct LRVector {
    std::vector<ext_scalar<S>> w;
    int reference_input = 0;
};

template <class S>
LRVector<S> lr_vector(const SymbolColumn<S>& col) {
    LRVector<S> lr;
    const std::size_t p = col.p();
    int ref = -1;
    for (std::size_t i = 0; i < p; ++i) {
        if (col.e[i] > arith<S>::zero()) { ref = static_cast<int>(i); break; }
    }
    if (ref < 0) throw error(errc::empty_channel, "likelihood ratios of a zero-mass column");
    lr.reference_input = ref;
    lr.w.reserve(p);
    for (std::size_t i = 0; i < p; ++i) {
        if (col.e[i] > arith<S>::zero())
            lr.w.push_back(ext_scalar<S>::finite(col.e[ref] / col.e[i]));
        else
            lr.w.push_back(ext_scalar<S>::infinity());
    }
    return lr;
}

// Squared Euclidean norm of the LR vector, +inf if any component is.
// Exact in rational mode; the ordering key used throughout the reducer.
template <class S>
ext_scalar<S> lr_norm_sq(const SymbolColumn<S>& col) {
    LRVector<S> lr = lr_vector(col);
    S acc = arith<S>::zero();
    for (const auto& v : lr.w) {
        if (v.inf) return ext_scalar<S>::infinity();
        acc += v.val * v.val;
    }
    return ext_scalar<S>::finite(acc);
}

template <class S>
double lr_norm(const SymbolColumn<S>& col) {
    ext_scalar<S> n2 = lr_norm_sq(col);
    if (n2.inf) return std::numeric_limits<double>::infinity();
    return std::sqrt(arith<S>::to_double(n2.val));
}

enum class SymbolClass { normal, leftover, odd_other };

inline const char* symbol_class_name(SymbolClass c) {
    switch (c) {
    case SymbolClass::normal:    return "normal";
    case SymbolClass::leftover:  return "leftover";
    case SymbolClass::odd_other: return "odd_other";
    }
    return "?";
}

// normal: full support. leftover: support 1, or all but two inputs
// (the shape a split's residue takes). odd_other: anything else.
template <class S>
SymbolClass classify_symbol(const SymbolColumn<S>& col) {
    const std::size_t p = col.p();
    std::size_t sup = col.support().size();
    if (sup == 0) throw error(errc::empty_channel, "classify on a zero-mass column");
    if (sup == p) return SymbolClass::normal;
    if (sup == 1 || p - sup == 2) return SymbolClass::leftover;
    return SymbolClass::odd_other;
}

// Builds a Channel from a raw p x q row-major matrix: checks signs and row
// sums (exact in rational mode, within row_tol otherwise), drops zero-mass
// output columns, and reports the dropped indices when asked.
template <class S>
Channel<S> validate_channel(const std::vector<std::vector<S>>& raw, double row_tol = 1e-9,
                            std::vector<int>* removed_outputs = nullptr) {
    if (raw.empty() || raw.front().empty())
        throw error(errc::empty_channel, "no inputs or no outputs");
    const std::size_t p = raw.size();
    const std::size_t q = raw.front().size();
    if (p < 2) throw error(errc::invalid_spec, "input alphabet needs at least 2 symbols");
    for (std::size_t x = 0; x < p; ++x)
        if (raw[x].size() != q)
            throw error(errc::dimension_mismatch, "row " + std::to_string(x) + " length differs");

    const S zero = arith<S>::zero();
    const S one = arith<S>::one();
    const S tol = tol_of<S>(row_tol);
    for (std::size_t x = 0; x < p; ++x) {
        S sum = zero;
        for (std::size_t y = 0; y < q; ++y) {
            if (raw[x][y] < zero)
                throw error(errc::negative_entry,
                            "W(" + std::to_string(y) + "|" + std::to_string(x) + ") < 0");
            sum += raw[x][y];
        }
        S dev = arith<S>::abs(sum - one);
        if (dev > tol)
            throw error(errc::row_sum_violation, "row " + std::to_string(x) + " sums to " +
                                                     arith<S>::format(sum));
    }

    Channel<S> ch;
    ch.p = static_cast<int>(p);
    for (std::size_t y = 0; y < q; ++y) {
        SymbolColumn<S> c;
        c.e.reserve(p);
        bool any = false;
        for (std::size_t x = 0; x < p; ++x) {
            c.e.push_back(raw[x][y]);
            if (raw[x][y] > zero) any = true;
        }
        if (any)
            ch.cols.push_back(std::move(c));
        else if (removed_outputs)
            removed_outputs->push_back(static_cast<int>(y));
    }
    if (ch.cols.empty()) throw error(errc::empty_channel, "every output column has zero mass");
    return ch;
}

// Mutual information of the channel under the uniform input distribution,
// in bits. Metrics are reported in double regardless of the scalar type.
template <class S>
double symmetric_capacity(const Channel<S>& ch) {
    const double p = static_cast<double>(ch.p);
    double acc = 0.0;
    for (const auto& col : ch.cols) {
        double qy = 0.0;
        for (const S& v : col.e) qy += arith<S>::to_double(v);
        qy /= p;
        if (qy <= 0.0) continue;
        for (const S& v : col.e) {
            double w = arith<S>::to_double(v);
            if (w > 0.0) acc += (w / p) * std::log2(w / qy);
        }
    }
    return acc;
}

// Maximum-likelihood decoding error probability under uniform inputs:
// 1 - (1/p) * sum_y max_x W(y|x).
template <class S>
double ml_error_probability(const Channel<S>& ch) {
    double best = 0.0;
    for (const auto& col : ch.cols) {
        double m = 0.0;
        for (const S& v : col.e) m = std::max(m, arith<S>::to_double(v));
        best += m;
    }
    return 1.0 - best / static_cast<double>(ch.p);
}

} // namespace upquant
