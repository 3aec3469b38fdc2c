// Command line front end: generate, inspect, upgrade, verify and compare
// channels stored in the plain-text grid format.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "upquant/upquant.hpp"

namespace {

using namespace upquant;

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw error(errc::syntax_error, "cannot open " + path);
    return f;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw error(errc::syntax_error, "cannot write " + path);
    return f;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CommonOpts {
    std::string arith = "float";
};

struct UpgradeOpts {
    std::string in, out, witness, report;
    std::string mode = "stratified";
    int target_size = 0;
    double tol = -1.0;
    std::string arith = "float";
};

template <class S>
int do_info(const std::string& file) {
    auto in = open_in(file);
    auto ch = read_channel_text<S>(in);
    int normal = 0, leftover = 0, odd = 0;
    double nmin = std::numeric_limits<double>::infinity(), nmax = 0.0;
    for (const auto& col : ch.cols) {
        switch (classify_symbol(col)) {
        case SymbolClass::normal: ++normal; break;
        case SymbolClass::leftover: ++leftover; break;
        case SymbolClass::odd_other: ++odd; break;
        }
        double n = lr_norm(col);
        nmin = std::min(nmin, n);
        nmax = std::max(nmax, n);
    }
    std::cout << "p: " << ch.p << "\n"
              << "q: " << ch.q() << "\n"
              << "normal: " << normal << "\n"
              << "leftover: " << leftover << "\n"
              << "odd: " << odd << "\n"
              << "capacity: " << fmt(symmetric_capacity(ch)) << "\n"
              << "error_prob: " << fmt(ml_error_probability(ch)) << "\n"
              << "lr_norm_min: " << fmt(nmin) << "\n"
              << "lr_norm_max: " << fmt(nmax) << "\n";
    return 0;
}

template <class S>
int do_upgrade(const UpgradeOpts& o) {
    auto in = open_in(o.in);
    auto ch = read_channel_text<S>(in);
    ReductionConfig cfg;
    cfg.mode = o.mode == "folded" ? ReduceMode::folded : ReduceMode::stratified;
    cfg.target_size = o.target_size;
    if (o.tol >= 0.0) cfg.tol.proportional_tol = o.tol;
    auto res = upgrade_reduce(ch, cfg);

    auto out = open_out(o.out);
    write_channel_text(out, res.channel);
    if (!o.witness.empty()) {
        auto wf = open_out(o.witness);
        write_witness_text(wf, res.witness);
    }
    if (!o.report.empty()) {
        auto rf = open_out(o.report);
        const auto& rp = res.report;
        rf << "initial_size: " << rp.initial_size << "\n"
           << "final_size: " << rp.final_size << "\n"
           << "fallbacks: " << rp.fallback_total << "\n"
           << "capacity_before: " << fmt(rp.capacity_before) << "\n"
           << "capacity_after: " << fmt(rp.capacity_after) << "\n"
           << "error_before: " << fmt(rp.error_before) << "\n"
           << "error_after: " << fmt(rp.error_after) << "\n";
    }
    return 0;
}

template <class S>
int do_verify(const std::string& wfile, const std::string& qfile, const std::string& pfile,
              bool oracle, double tol) {
    auto win = open_in(wfile);
    auto w = read_channel_text<S>(win);
    auto qin = open_in(qfile);
    auto qp = read_channel_text<S>(qin);
    bool ok = true;
    if (!pfile.empty()) {
        auto pin = open_in(pfile);
        auto ic = read_witness_text<S>(pin);
        auto rep = check_upgrade_witness(w, qp, ic, tol);
        std::cout << "witness_stochastic: " << (rep.witness_stochastic ? "yes" : "no") << "\n"
                  << "max_abs_residual: " << fmt(rep.max_abs_residual) << "\n"
                  << "residual_exactly_zero: " << (rep.residual_exactly_zero ? "yes" : "no") << "\n"
                  << "delta_capacity: " << fmt(rep.delta_capacity) << "\n"
                  << "delta_error: " << fmt(rep.delta_error) << "\n"
                  << "verified: " << (rep.upgrade_verified ? "yes" : "no") << "\n";
        ok = ok && rep.upgrade_verified;
    }
    if (oracle) {
        bool feasible = feasibility_oracle(w, qp, tol > 0 ? tol : 1e-7);
        std::cout << "oracle_feasible: " << (feasible ? "yes" : "no") << "\n";
        ok = ok && feasible;
    }
    return ok ? 0 : 2;
}

template <class S>
int do_compare(const std::string& afile, const std::string& bfile) {
    auto ain = open_in(afile);
    auto a = read_channel_text<S>(ain);
    auto bin = open_in(bfile);
    auto b = read_channel_text<S>(bin);
    auto d = metrics_delta(a, b);
    std::cout << "delta_capacity: " << fmt(d.delta_capacity) << "\n"
              << "delta_error: " << fmt(d.delta_error) << "\n";
    return 0;
}

int do_gen(int p, int q, const std::string& dist, std::uint64_t seed, int centers, double jitter,
           const std::string& arith, int bits, const std::string& out) {
    GenSpec gs;
    gs.p = p;
    gs.q = q;
    if (dist == "dirichlet")
        gs.dist = GenDist::dirichlet;
    else if (dist == "clustered")
        gs.dist = GenDist::clustered;
    else
        throw error(errc::invalid_spec, "unknown dist " + dist);
    gs.seed = seed;
    gs.centers = centers;
    gs.jitter = jitter;
    auto rows = gen_random_channel(gs);
    std::vector<std::string> comments = {"seed: " + std::to_string(seed), "dist: " + dist};
    auto f = open_out(out);
    if (arith == "rational")
        write_matrix_text(f, rationalize_dyadic(rows, bits), comments);
    else
        write_matrix_text(f, rows, comments);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"output alphabet reduction with an upgrade witness"};
    app.require_subcommand(1);

    std::string info_file;
    CommonOpts info_opts;
    auto* info = app.add_subcommand("info", "print channel facts");
    info->add_option("FILE", info_file)->required();
    info->add_option("--arith", info_opts.arith)->check(CLI::IsMember({"float", "rational"}));

    UpgradeOpts up;
    auto* upgrade = app.add_subcommand("upgrade", "reduce the output alphabet, upgrading");
    upgrade->add_option("FILE", up.in)->required();
    upgrade->add_option("-o,--output", up.out)->required();
    upgrade->add_option("--witness", up.witness);
    upgrade->add_option("--report", up.report);
    upgrade->add_option("--mode", up.mode)->check(CLI::IsMember({"stratified", "folded"}));
    upgrade->add_option("--target-size", up.target_size);
    upgrade->add_option("--tol", up.tol, "proportionality tolerance override");
    upgrade->add_option("--arith", up.arith)->check(CLI::IsMember({"float", "rational"}));

    std::string v_w, v_q, v_p;
    bool v_oracle = false;
    double v_tol = 1e-9;
    CommonOpts v_opts;
    auto* verify = app.add_subcommand("verify", "check an upgrade claim");
    verify->add_option("W", v_w)->required();
    verify->add_option("Q", v_q)->required();
    verify->add_option("P", v_p);
    verify->add_flag("--oracle", v_oracle, "decide witness existence from scratch");
    verify->add_option("--tol", v_tol);
    verify->add_option("--arith", v_opts.arith)->check(CLI::IsMember({"float", "rational"}));

    int g_p = 3, g_q = 8, g_centers = 0, g_bits = 20;
    std::string g_dist = "dirichlet", g_out, g_arith = "float";
    std::uint64_t g_seed = 1;
    double g_jitter = 0.25;
    auto* gen = app.add_subcommand("gen", "generate a seeded random channel");
    gen->add_option("--p", g_p)->required();
    gen->add_option("--q", g_q)->required();
    gen->add_option("--dist", g_dist)->check(CLI::IsMember({"dirichlet", "clustered"}));
    gen->add_option("--seed", g_seed);
    gen->add_option("--centers", g_centers);
    gen->add_option("--jitter", g_jitter);
    gen->add_option("--bits", g_bits, "dyadic denominator bits for rational output");
    gen->add_option("--arith", g_arith)->check(CLI::IsMember({"float", "rational"}));
    gen->add_option("-o,--output", g_out)->required();

    std::string c_a, c_b;
    CommonOpts c_opts;
    auto* compare = app.add_subcommand("compare", "print capacity and error deltas");
    compare->add_option("A", c_a)->required();
    compare->add_option("B", c_b)->required();
    compare->add_option("--arith", c_opts.arith)->check(CLI::IsMember({"float", "rational"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (info->parsed()) {
            if (info_opts.arith == "rational") return do_info<rational>(info_file);
            return do_info<double>(info_file);
        }
        if (upgrade->parsed()) {
            if (up.arith == "rational") return do_upgrade<rational>(up);
            return do_upgrade<double>(up);
        }
        if (verify->parsed()) {
            if (v_p.empty() && !v_oracle)
                throw error(errc::invalid_spec, "verify needs a witness file or --oracle");
            if (v_opts.arith == "rational") return do_verify<rational>(v_w, v_q, v_p, v_oracle, v_tol);
            return do_verify<double>(v_w, v_q, v_p, v_oracle, v_tol);
        }
        if (gen->parsed())
            return do_gen(g_p, g_q, g_dist, g_seed, g_centers, g_jitter, g_arith, g_bits, g_out);
        if (compare->parsed()) {
            if (c_opts.arith == "rational") return do_compare<rational>(c_a, c_b);
            return do_compare<double>(c_a, c_b);
        }
    } catch (const error& e) {
        std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
