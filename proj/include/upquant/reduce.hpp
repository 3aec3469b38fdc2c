#pragma once

// Output-alphabet reduction. The engine maintains a pool of live output
// symbols, each carrying its column and a witness row over the original
// output alphabet; the invariant
//     sum_z col_z[x] * wrow_z[y] == W(y|x)
// holds after every step (exactly in rational mode), so stacking the live
// rows at the end yields the intermediate channel of the upgrade.
//
// Columns are grouped into strata by exact support set. Strata are processed
// in decreasing support size; a split's leftover lands in the stratum of its
// own support, which is always strictly smaller and therefore still pending.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "upquant/algebra.hpp"
#include "upquant/channel.hpp"

namespace upquant {

enum class ReduceMode { stratified, folded };

// Per-triple attempt sequence. The default tries the canonical split first
// and escalates; explode always succeeds, so a well-formed sequence ends
// with it. strategies = {explode_middle} alone is the degenerate
// explode-everything configuration.
enum class SplitStrategy { canonical_split, alternate_middle, alternate_pair, explode_middle };

struct Tolerances {
    double row_tol = 1e-9;          // row-sum validation slack
    double proportional_tol = 1e-10;
    double negativity_tol = 1e-12;  // split clamp threshold, relative
};

struct ReductionConfig {
    int target_size = 0; // 0 = input alphabet size
    ReduceMode mode = ReduceMode::stratified;
    std::vector<SplitStrategy> strategies = {
        SplitStrategy::canonical_split, SplitStrategy::alternate_middle,
        SplitStrategy::alternate_pair, SplitStrategy::explode_middle};
    Tolerances tol;
};

struct StratumLog {
    std::vector<int> support;
    int initial_count = 0;
    int survivor_count = 0;
    int rounds = 0;
    int dedupe_merges = 0;
    int leftovers_emitted = 0;
    int canonical_splits = 0;
    int alternate_middle_splits = 0;
    int alternate_pair_splits = 0;
    int explodes = 0;
};

struct StepRecord {
    enum class Kind { merge, split, explode_middle };
    Kind kind;
    std::vector<int> support;
    int arity; // symbols merged, or fragments produced; splits are 3
};

struct UpgradeReport {
    int initial_size = 0;
    int final_size = 0;
    bool identity = false;
    ReduceMode mode = ReduceMode::stratified;
    int alternate_middle_total = 0;
    int alternate_pair_total = 0;
    int explode_total = 0;
    int fallback_total = 0; // all escalations past the canonical attempt
    double capacity_before = 0.0;
    double capacity_after = 0.0;
    double error_before = 0.0;
    double error_after = 0.0;
    std::vector<StratumLog> strata;
    std::vector<StepRecord> steps;
};

// Row-stochastic map from the reduced alphabet Z back to the original
// outputs Y: rows[z][y] = P(y|z).
template <class S>
struct IntermediateChannel {
    std::vector<std::vector<S>> rows;

    int zsize() const { return static_cast<int>(rows.size()); }
    int ysize() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }

    static IntermediateChannel identity(int n) {
        IntermediateChannel ic;
        ic.rows.assign(n, {});
        for (int i = 0; i < n; ++i) {
            ic.rows[i].assign(n, arith<S>::zero());
            ic.rows[i][i] = arith<S>::one();
        }
        return ic;
    }
};

template <class S>
struct UpgradeResult {
    Channel<S> channel;
    IntermediateChannel<S> witness;
    UpgradeReport report;
};

// Finite ordering key inside a stratum: squared Euclidean norm of the
// likelihood-ratio vector restricted to the column's support.
template <class S>
S stratum_norm_key(const SymbolColumn<S>& col) {
    int ref = -1;
    for (std::size_t i = 0; i < col.p(); ++i)
        if (col.e[i] > arith<S>::zero()) { ref = static_cast<int>(i); break; }
    if (ref < 0) throw error(errc::empty_channel, "norm key of a zero-mass column");
    S acc = arith<S>::zero();
    for (std::size_t i = 0; i < col.p(); ++i) {
        if (col.e[i] > arith<S>::zero()) {
            S w = col.e[ref] / col.e[i];
            acc += w * w;
        }
    }
    return acc;
}

// Support-set partition of a channel's columns: support -> column indices.
template <class S>
std::map<std::vector<int>, std::vector<int>> partition_strata(const Channel<S>& ch) {
    std::map<std::vector<int>, std::vector<int>> strata;
    for (int y = 0; y < ch.q(); ++y) strata[ch.cols[y].support()].push_back(y);
    return strata;
}

// Ascending restricted-LR-norm permutation; ties broken by lexicographic
// entry comparison, then input position. Stable and total.
template <class S>
std::vector<std::size_t> order_stratum(const std::vector<SymbolColumn<S>>& cols) {
    std::vector<S> keys;
    keys.reserve(cols.size());
    for (const auto& c : cols) keys.push_back(stratum_norm_key(c));
    std::vector<std::size_t> perm(cols.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) return keys[a] < keys[b];
        if (cols[a].e != cols[b].e)
            return std::lexicographical_compare(cols[a].e.begin(), cols[a].e.end(),
                                                cols[b].e.begin(), cols[b].e.end());
        return a < b;
    });
    return perm;
}

namespace detail {

struct SupportSizeDescLex {
    bool operator()(const std::vector<int>& a, const std::vector<int>& b) const {
        if (a.size() != b.size()) return a.size() > b.size();
        return a < b;
    }
};

template <class S>
struct LiveSym {
    SymbolColumn<S> col;
    std::vector<S> wrow;
    S norm_key;        // cached at creation; scaling a column preserves it
    std::uint64_t seq; // creation order, final tie-break
    bool alive = true;
};

template <class S>
class ReduceEngine {
public:
    ReduceEngine(int p, std::size_t q0, const ReductionConfig& cfg, int target,
                 bool route_leftovers, UpgradeReport* report)
        : p_(p), q0_(q0), cfg_(cfg), target_(target), route_leftovers_(route_leftovers),
          report_(report) {}

    std::size_t spawn(SymbolColumn<S> col, std::vector<S> wrow) {
        LiveSym<S> sym;
        sym.norm_key = stratum_norm_key(col);
        sym.col = std::move(col);
        sym.wrow = std::move(wrow);
        sym.seq = pool_.size();
        pool_.push_back(std::move(sym));
        ++live_;
        return pool_.size() - 1;
    }

    void route(std::size_t id) { strata_[pool_[id].col.support()].push_back(id); }

    void run() {
        while (!stopped_ && !strata_.empty()) {
            auto it = strata_.begin();
            std::vector<int> support = it->first;
            std::vector<std::size_t> ids = std::move(it->second);
            strata_.erase(it);
            reduce_stratum_ids(support, ids);
        }
        // A stop request leaves pending strata untouched; their members are
        // still live and simply survive.
        if (stopped_) {
            for (auto& [support, ids] : strata_) {
                sort_ids(ids);
                finished_.insert(finished_.end(), ids.begin(), ids.end());
            }
            strata_.clear();
        }
    }

    bool stopped() const { return stopped_; }
    long live() const { return live_; }
    const std::vector<std::size_t>& finished() const { return finished_; }
    const std::vector<std::size_t>& captured() const { return captured_; }
    const LiveSym<S>& sym(std::size_t id) const { return pool_[id]; }

    // Folded output ordering: finite norms ascending, odd symbols last by
    // (support size desc, support lex, entries lex), creation order last.
    void sort_folded(std::vector<std::size_t>& ids) const {
        std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            const auto& A = pool_[a];
            const auto& B = pool_[b];
            const bool aodd = A.col.support().size() < static_cast<std::size_t>(p_);
            const bool bodd = B.col.support().size() < static_cast<std::size_t>(p_);
            if (aodd != bodd) return bodd;
            if (!aodd) {
                if (A.norm_key != B.norm_key) return A.norm_key < B.norm_key;
            } else {
                auto sa = A.col.support(), sb = B.col.support();
                if (sa.size() != sb.size()) return sa.size() > sb.size();
                if (sa != sb) return sa < sb;
            }
            if (A.col.e != B.col.e)
                return std::lexicographical_compare(A.col.e.begin(), A.col.e.end(),
                                                    B.col.e.begin(), B.col.e.end());
            return A.seq < B.seq;
        });
    }

    std::vector<std::size_t> all_live() const {
        std::vector<std::size_t> ids;
        for (std::size_t i = 0; i < pool_.size(); ++i)
            if (pool_[i].alive) ids.push_back(i);
        return ids;
    }

private:
    bool at_target() const { return target_ > 0 && live_ <= target_; }

    void sort_ids(std::vector<std::size_t>& ids) const {
        std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            const auto& A = pool_[a];
            const auto& B = pool_[b];
            if (A.norm_key != B.norm_key) return A.norm_key < B.norm_key;
            if (A.col.e != B.col.e)
                return std::lexicographical_compare(A.col.e.begin(), A.col.e.end(),
                                                    B.col.e.begin(), B.col.e.end());
            return A.seq < B.seq;
        });
    }

    void record_step(typename StepRecord::Kind kind, const std::vector<int>& support, int arity) {
        if (report_) report_->steps.push_back({kind, support, arity});
    }

    // Weighted merge of proportional symbols; ids must be nonempty.
    std::size_t merge_ids(const std::vector<std::size_t>& ids, const std::vector<int>& support) {
        SymbolColumn<S> col;
        col.e.assign(p_, arith<S>::zero());
        S total = arith<S>::zero();
        for (std::size_t id : ids) {
            for (std::size_t x = 0; x < col.p(); ++x) col.e[x] += pool_[id].col.e[x];
            total += pool_[id].col.mass();
        }
        std::vector<S> wrow(q0_, arith<S>::zero());
        for (std::size_t id : ids) {
            S w = pool_[id].col.mass() / total;
            for (std::size_t y = 0; y < q0_; ++y) wrow[y] += w * pool_[id].wrow[y];
        }
        for (std::size_t id : ids) kill(id);
        record_step(StepRecord::Kind::merge, support, static_cast<int>(ids.size()));
        return spawn(std::move(col), std::move(wrow));
    }

    void kill(std::size_t id) {
        pool_[id].alive = false;
        --live_;
    }

    void emit(std::size_t id) {
        if (route_leftovers_)
            route(id);
        else
            captured_.push_back(id);
    }

    // One split application: lo and hi absorb their matched parts in place
    // (likelihood ratios, hence cached keys, are unchanged); mid dies; a
    // nonzero leftover is spawned and routed.
    void apply_split(std::size_t lo, std::size_t mid, std::size_t hi, SplitResult<S>&& res,
                     const std::vector<int>& support, StratumLog& log) {
        const S one = arith<S>::one();
        auto& L = pool_[lo];
        auto& M = pool_[mid];
        auto& H = pool_[hi];
        const S fl = one + res.s1;
        const S fh = one + res.s3;
        const S ql = res.s1 / fl;
        const S qh = res.s3 / fh;
        const S pl = one - ql;
        const S ph = one - qh;
        for (std::size_t x = 0; x < L.col.p(); ++x) {
            L.col.e[x] *= fl;
            H.col.e[x] *= fh;
        }
        for (std::size_t y = 0; y < q0_; ++y) {
            L.wrow[y] = pl * L.wrow[y] + ql * M.wrow[y];
            H.wrow[y] = qh * M.wrow[y] + ph * H.wrow[y];
        }
        if (res.leftover.mass() > arith<S>::zero()) {
            std::vector<S> lrow = M.wrow; // copy first: spawn may reallocate the pool
            std::size_t id = spawn(std::move(res.leftover), std::move(lrow));
            emit(id);
            ++log.leftovers_emitted;
        }
        kill(mid);
        record_step(StepRecord::Kind::split, support, 3);
    }

    void explode_id(std::size_t id, const std::vector<int>& support, StratumLog& log) {
        auto fragments = explode(pool_[id].col);
        std::vector<S> srow = pool_[id].wrow; // fragments inherit the source's row
        for (auto& f : fragments) {
            std::size_t fid = spawn(std::move(f), srow);
            emit(fid);
        }
        kill(id);
        ++log.explodes;
        if (report_) {
            ++report_->explode_total;
            ++report_->fallback_total;
        }
        record_step(StepRecord::Kind::explode_middle, support, static_cast<int>(fragments.size()));
    }

    // Solved-pair candidates: canonical first (two largest support
    // coordinates), then the rest in descending lexicographic order.
    static std::vector<std::pair<int, int>> pair_candidates(const std::vector<int>& support) {
        std::vector<std::pair<int, int>> ps;
        for (std::size_t a = 0; a + 1 < support.size(); ++a)
            for (std::size_t b = a + 1; b < support.size(); ++b)
                ps.emplace_back(support[a], support[b]);
        std::sort(ps.begin(), ps.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second > y.second;
        });
        return ps;
    }

    // Middle choices in ladder order: the sorted middle, then the high and
    // low elements. Endpoints keep their norm order.
    struct TripleChoice {
        std::size_t mid, lo, hi;
    };
    static std::array<TripleChoice, 3> middle_choices(std::size_t c0, std::size_t c1,
                                                      std::size_t c2) {
        return {{{c1, c0, c2}, {c2, c0, c1}, {c0, c1, c2}}};
    }

    bool try_choice(const TripleChoice& tc, std::pair<int, int> pair,
                    const std::vector<int>& support, StratumLog& log) {
        auto outcome = proportional_split(pool_[tc.mid].col, pool_[tc.lo].col, pool_[tc.hi].col,
                                          pair, cfg_.tol.negativity_tol);
        if (auto* res = std::get_if<SplitResult<S>>(&outcome)) {
            apply_split(tc.lo, tc.mid, tc.hi, std::move(*res), support, log);
            return true;
        }
        return false;
    }

    // Returns the id consumed by the winning strategy, or npos on stop.
    std::size_t reduce_triple(std::size_t c0, std::size_t c1, std::size_t c2,
                              const std::vector<int>& support, StratumLog& log) {
        const auto pairs = pair_candidates(support);
        const auto choices = middle_choices(c0, c1, c2);
        for (SplitStrategy strat : cfg_.strategies) {
            switch (strat) {
            case SplitStrategy::canonical_split:
                if (try_choice(choices[0], pairs[0], support, log)) {
                    ++log.canonical_splits;
                    return choices[0].mid;
                }
                break;
            case SplitStrategy::alternate_middle:
                for (int k = 1; k < 3; ++k) {
                    if (try_choice(choices[k], pairs[0], support, log)) {
                        ++log.alternate_middle_splits;
                        if (report_) {
                            ++report_->alternate_middle_total;
                            ++report_->fallback_total;
                        }
                        return choices[k].mid;
                    }
                }
                break;
            case SplitStrategy::alternate_pair:
                for (std::size_t pi = 1; pi < pairs.size(); ++pi) {
                    for (const auto& tc : choices) {
                        if (try_choice(tc, pairs[pi], support, log)) {
                            ++log.alternate_pair_splits;
                            if (report_) {
                                ++report_->alternate_pair_total;
                                ++report_->fallback_total;
                            }
                            return tc.mid;
                        }
                    }
                }
                break;
            case SplitStrategy::explode_middle:
                explode_id(c1, support, log);
                return c1;
            }
        }
        throw error(errc::invalid_spec, "strategy sequence must end with explode_middle");
    }

    // Greedy proportional grouping in sorted order, then weighted merges.
    // Merges are capped so the live count never drops below the target.
    void dedupe(std::vector<std::size_t>& ids, const std::vector<int>& support, StratumLog& log) {
        sort_ids(ids);
        std::vector<std::vector<std::size_t>> groups;
        for (std::size_t id : ids) {
            bool placed = false;
            for (auto& g : groups) {
                if (columns_proportional(pool_[g.front()].col, pool_[id].col,
                                         cfg_.tol.proportional_tol)) {
                    g.push_back(id);
                    placed = true;
                    break;
                }
            }
            if (!placed) groups.push_back({id});
        }
        ids.clear();
        for (auto& g : groups) {
            long allowed = target_ > 0 ? live_ - target_ : static_cast<long>(g.size());
            long merges = std::min<long>(static_cast<long>(g.size()) - 1, std::max<long>(allowed, 0));
            if (merges <= 0) {
                ids.insert(ids.end(), g.begin(), g.end());
                continue;
            }
            std::vector<std::size_t> head(g.begin(), g.begin() + merges + 1);
            log.dedupe_merges += static_cast<int>(merges);
            ids.push_back(merge_ids(head, support));
            ids.insert(ids.end(), g.begin() + merges + 1, g.end());
        }
        sort_ids(ids);
    }

    void reduce_stratum_ids(const std::vector<int>& support, std::vector<std::size_t> ids) {
        StratumLog log;
        log.support = support;
        log.initial_count = static_cast<int>(ids.size());

        dedupe(ids, support, log);

        // A ladder with no split strategy degenerates to exploding every
        // symbol; the fragments re-merge per input in the singleton strata.
        bool any_split = false;
        for (SplitStrategy s : cfg_.strategies)
            if (s != SplitStrategy::explode_middle) any_split = true;
        if (!any_split && support.size() > 1) {
            for (std::size_t id : ids) explode_id(id, support, log);
            ids.clear();
        }

        // Singleton strata are fully collapsed by the dedupe merge; the
        // split loop below only concerns strata with at least two inputs.
        while (support.size() > 1 && ids.size() > 2) {
            if (at_target()) {
                stopped_ = true;
                break;
            }
            ++log.rounds;
            std::size_t consumed = reduce_triple(ids[0], ids[1], ids[2], support, log);
            ids.erase(std::find(ids.begin(), ids.end(), consumed));
        }

        log.survivor_count = static_cast<int>(ids.size());
        finished_.insert(finished_.end(), ids.begin(), ids.end());
        if (report_) report_->strata.push_back(std::move(log));
        if (at_target()) stopped_ = true;
    }

    int p_;
    std::size_t q0_;
    ReductionConfig cfg_;
    int target_;
    bool route_leftovers_;
    UpgradeReport* report_;
    std::vector<LiveSym<S>> pool_;
    std::map<std::vector<int>, std::vector<std::size_t>, SupportSizeDescLex> strata_;
    std::vector<std::size_t> finished_;
    std::vector<std::size_t> captured_;
    long live_ = 0;
    bool stopped_ = false;
};

inline void check_config(const ReductionConfig& cfg, int p) {
    if (cfg.strategies.empty() || cfg.strategies.back() != SplitStrategy::explode_middle)
        throw error(errc::invalid_spec, "strategy sequence must end with explode_middle");
    if (cfg.target_size != 0 && cfg.target_size < p)
        throw error(errc::invalid_spec, "target_size below the input alphabet size");
}

} // namespace detail

template <class S>
struct StratumResult {
    std::vector<SymbolColumn<S>> survivors;
    std::vector<SymbolColumn<S>> leftovers; // split residues and explode fragments
    std::vector<std::vector<S>> survivor_witness; // rows over the stratum's input columns
    std::vector<std::vector<S>> leftover_witness;
    StratumLog log;
};

// Reduces one support-homogeneous stratum in isolation. Leftovers are
// returned, not cascaded; upgrade_reduce is the driver that routes them.
template <class S>
StratumResult<S> reduce_stratum(const std::vector<SymbolColumn<S>>& cols,
                                const ReductionConfig& cfg = {}) {
    if (cols.empty()) throw error(errc::empty_channel, "empty stratum");
    const int p = static_cast<int>(cols.front().p());
    detail::check_config(cfg, 0);
    const std::vector<int> support = cols.front().support();
    for (const auto& c : cols)
        if (c.support() != support || static_cast<int>(c.p()) != p)
            throw error(errc::invalid_spec, "stratum columns must share one support");

    UpgradeReport scratch;
    detail::ReduceEngine<S> eng(p, cols.size(), cfg, /*target=*/0, /*route=*/false, &scratch);
    for (std::size_t y = 0; y < cols.size(); ++y) {
        std::vector<S> row(cols.size(), arith<S>::zero());
        row[y] = arith<S>::one();
        eng.spawn(cols[y], std::move(row));
    }
    // Single stratum: feed ids directly through the engine's strata map.
    for (std::size_t id = 0; id < cols.size(); ++id) eng.route(id);
    eng.run();

    StratumResult<S> out;
    for (std::size_t id : eng.finished()) {
        out.survivors.push_back(eng.sym(id).col);
        out.survivor_witness.push_back(eng.sym(id).wrow);
    }
    for (std::size_t id : eng.captured()) {
        out.leftovers.push_back(eng.sym(id).col);
        out.leftover_witness.push_back(eng.sym(id).wrow);
    }
    out.log = scratch.strata.empty() ? StratumLog{} : scratch.strata.front();
    return out;
}

// Full reduction: upgraded channel, intermediate-channel witness, report.
template <class S>
UpgradeResult<S> upgrade_reduce(const Channel<S>& ch, const ReductionConfig& cfg = {}) {
    detail::check_config(cfg, ch.p);
    const int target = cfg.target_size == 0 ? ch.p : cfg.target_size;

    UpgradeResult<S> out;
    out.report.mode = cfg.mode;
    out.report.initial_size = ch.q();
    out.report.capacity_before = symmetric_capacity(ch);
    out.report.error_before = ml_error_probability(ch);

    if (ch.q() <= target) {
        out.channel = ch;
        out.witness = IntermediateChannel<S>::identity(ch.q());
        out.report.final_size = ch.q();
        out.report.identity = true;
        out.report.capacity_after = out.report.capacity_before;
        out.report.error_after = out.report.error_before;
        return out;
    }

    detail::ReduceEngine<S> eng(ch.p, static_cast<std::size_t>(ch.q()), cfg, target,
                                /*route=*/true, &out.report);
    for (int y = 0; y < ch.q(); ++y) {
        std::vector<S> row(ch.q(), arith<S>::zero());
        row[y] = arith<S>::one();
        eng.spawn(ch.cols[y], std::move(row));
    }
    for (int y = 0; y < ch.q(); ++y) eng.route(static_cast<std::size_t>(y));
    eng.run();

    std::vector<std::size_t> order = eng.finished();
    if (cfg.mode == ReduceMode::folded) eng.sort_folded(order);

    // Exploding can leave more live symbols than merging reclaims on small
    // alphabets. A result wider than the input is never an improvement, so
    // keep the input channel itself as the (trivial) upgrade instead.
    if (order.size() > static_cast<std::size_t>(ch.q())) {
        out.channel = ch;
        out.witness = IntermediateChannel<S>::identity(ch.q());
        out.report.final_size = ch.q();
        out.report.identity = true;
        out.report.capacity_after = out.report.capacity_before;
        out.report.error_after = out.report.error_before;
        return out;
    }

    out.channel.p = ch.p;
    for (std::size_t id : order) {
        out.channel.cols.push_back(eng.sym(id).col);
        out.witness.rows.push_back(eng.sym(id).wrow);
    }
    out.report.final_size = out.channel.q();
    out.report.capacity_after = symmetric_capacity(out.channel);
    out.report.error_after = ml_error_probability(out.channel);
    return out;
}

} // namespace upquant
