#pragma once

// Text I/O for channels and witnesses plus the seeded generator behind the
// test corpus. The grid format is line oriented: '#' comments and blank lines
// anywhere, a "<rows> <cols>" header, then one line per row with single-space
// separated entries. Float entries are %.17g (lossless round trip), rational
// entries are num/den.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "upquant/arith.hpp"
#include "upquant/channel.hpp"
#include "upquant/errors.hpp"
#include "upquant/rational.hpp"
#include "upquant/reduce.hpp"

namespace upquant {

namespace detail {

inline bool content_line(const std::string& line) {
    std::size_t i = line.find_first_not_of(" \t\r");
    return i != std::string::npos && line[i] != '#';
}

} // namespace detail

template <class S>
std::vector<std::vector<S>> parse_matrix_text(std::istream& in) {
    std::string line;
    long lineno = 0;
    long rows = -1, cols = -1;
    std::vector<std::vector<S>> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (!detail::content_line(line)) continue;
        std::istringstream ls(line);
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (rows < 0) {
            if (!(ls >> rows >> cols) || rows <= 0 || cols <= 0)
                throw error(errc::syntax_error, where + "expected a \"<rows> <cols>\" header");
            std::string rest;
            if (ls >> rest)
                throw error(errc::syntax_error, where + "trailing tokens after the header");
            continue;
        }
        if (static_cast<long>(out.size()) == rows)
            throw error(errc::syntax_error, where + "more rows than the header announced");
        std::vector<S> row;
        row.reserve(static_cast<std::size_t>(cols));
        std::string tok;
        while (ls >> tok) {
            try {
                row.push_back(arith<S>::parse(tok));
            } catch (const error&) {
                throw error(errc::syntax_error, where + "bad entry \"" + tok + "\"");
            }
        }
        if (static_cast<long>(row.size()) != cols)
            throw error(errc::syntax_error, where + "expected " + std::to_string(cols) +
                                                " entries, got " + std::to_string(row.size()));
        out.push_back(std::move(row));
    }
    if (rows < 0) throw error(errc::syntax_error, "empty input, expected a \"<rows> <cols>\" header");
    if (static_cast<long>(out.size()) != rows)
        throw error(errc::syntax_error, "expected " + std::to_string(rows) + " rows, got " +
                                            std::to_string(out.size()));
    return out;
}

template <class S>
void write_matrix_text(std::ostream& os, const std::vector<std::vector<S>>& rows,
                       const std::vector<std::string>& comments = {}) {
    if (rows.empty() || rows.front().empty())
        throw error(errc::empty_channel, "refusing to write an empty grid");
    for (const auto& c : comments) os << "# " << c << "\n";
    os << rows.size() << ' ' << rows.front().size() << "\n";
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) os << ' ';
            os << arith<S>::format(row[j]);
        }
        os << "\n";
    }
}

template <class S>
std::vector<std::vector<S>> channel_rows(const Channel<S>& ch) {
    std::vector<std::vector<S>> rows(ch.p, std::vector<S>(ch.q(), arith<S>::zero()));
    for (int x = 0; x < ch.p; ++x)
        for (int y = 0; y < ch.q(); ++y) rows[x][y] = ch.at(x, y);
    return rows;
}

template <class S>
Channel<S> read_channel_text(std::istream& in, double row_tol = 1e-9,
                             std::vector<int>* removed_outputs = nullptr) {
    return validate_channel(parse_matrix_text<S>(in), row_tol, removed_outputs);
}

template <class S>
void write_channel_text(std::ostream& os, const Channel<S>& ch,
                        const std::vector<std::string>& comments = {}) {
    write_matrix_text(os, channel_rows(ch), comments);
}

template <class S>
IntermediateChannel<S> read_witness_text(std::istream& in) {
    IntermediateChannel<S> ic;
    ic.rows = parse_matrix_text<S>(in);
    return ic;
}

template <class S>
void write_witness_text(std::ostream& os, const IntermediateChannel<S>& ic,
                        const std::vector<std::string>& comments = {}) {
    write_matrix_text(os, ic.rows, comments);
}

enum class GenDist { dirichlet, clustered };

struct GenSpec {
    int p = 3;
    int q = 8;
    GenDist dist = GenDist::dirichlet;
    std::uint64_t seed = 1;
    int centers = 0;      // clustered: number of column clusters, 0 means min(p, q)
    double jitter = 0.25; // clustered: lognormal sigma applied per entry
};

namespace detail {

// All draws go through these explicit transforms so a seed pins the exact
// bit stream regardless of the standard library's distribution internals.
inline double unit_draw(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1p-53; // 53-bit uniform in [0,1)
}

inline double exp_draw(std::mt19937_64& g) {
    return -std::log1p(-unit_draw(g)); // -log(1-u); finite since u < 1
}

inline double normal_draw(std::mt19937_64& g) {
    // Box-Muller, cosine branch only.
    double u1 = unit_draw(g);
    double u2 = unit_draw(g);
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(6.283185307179586 * u2);
}

inline void normalize_or_point_mass(std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    if (sum <= 0.0) { // all-zero draw; vanishing probability but stay total
        v.front() = 1.0;
        sum = 1.0;
    }
    for (double& x : v) x /= sum;
}

} // namespace detail

// Seeded corpus generator. dirichlet: every row is q iid Exp(1) draws
// normalized, a flat Dirichlet sample. clustered: k center columns are drawn
// as normalized Exp(1) profiles over the inputs; column y copies center
// y mod k, takes per-entry multiplicative jitter exp(sigma * N(0,1)) when
// sigma != 0 (draw order: y outer, x inner), and the rows are normalized at
// the end. With sigma = 0 the columns of a cluster come out exactly equal.
inline std::vector<std::vector<double>> gen_random_channel(const GenSpec& spec) {
    if (spec.p < 2 || spec.q < 1)
        throw error(errc::invalid_spec, "generator needs p >= 2 and q >= 1");
    if (spec.centers < 0) throw error(errc::invalid_spec, "centers must be nonnegative");
    std::mt19937_64 rng(spec.seed);
    std::vector<std::vector<double>> rows(spec.p, std::vector<double>(spec.q, 0.0));

    if (spec.dist == GenDist::dirichlet) {
        for (auto& row : rows) {
            for (double& v : row) v = detail::exp_draw(rng);
            detail::normalize_or_point_mass(row);
        }
        return rows;
    }

    int k = spec.centers > 0 ? spec.centers : std::min(spec.p, spec.q);
    if (k > spec.q) k = spec.q;
    std::vector<std::vector<double>> center(k, std::vector<double>(spec.p, 0.0));
    for (auto& c : center) {
        for (double& v : c) v = detail::exp_draw(rng);
        detail::normalize_or_point_mass(c);
    }
    for (int y = 0; y < spec.q; ++y) {
        const auto& c = center[y % k];
        for (int x = 0; x < spec.p; ++x) {
            double v = c[x];
            if (spec.jitter != 0.0) v *= std::exp(spec.jitter * detail::normal_draw(rng));
            rows[x][y] = v;
        }
    }
    for (auto& row : rows) detail::normalize_or_point_mass(row);
    return rows;
}

// Quantizes each row onto the grid n / 2^bits and folds the rounding deficit
// into the row's largest entry, so every row sums to exactly 1.
inline std::vector<std::vector<rational>> rationalize_dyadic(
    const std::vector<std::vector<double>>& rows, int bits = 20) {
    if (bits < 1 || bits > 62) throw error(errc::invalid_spec, "bits must be in [1, 62]");
    const long den = 1L << bits;
    std::vector<std::vector<rational>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<long> num(row.size(), 0);
        long sum = 0;
        std::size_t big = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            long n = std::llround(std::ldexp(row[j], bits));
            if (n < 0) n = 0;
            num[j] = n;
            sum += n;
            if (n > num[big]) big = j;
        }
        num[big] += den - sum;
        if (num[big] < 0)
            throw error(errc::negative_entry, "quantization deficit exceeds the largest entry");
        std::vector<rational> r;
        r.reserve(row.size());
        for (long n : num) r.emplace_back(n, den);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace upquant
