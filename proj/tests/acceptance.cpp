// Acceptance run: one PASS/FAIL line per criterion.
//
// Usage: acceptance [criterion numbers...]   (default: all)
//
// Exit status is nonzero if any criterion fails that is not listed in
// kKnownFailures. Known failures are still printed as FAIL.

#include "ccekit/cce.hpp"
#include "ccekit/cli.hpp"
#include "ccekit/dgp.hpp"
#include "ccekit/matlin.hpp"
#include "ccekit/montecarlo.hpp"
#include "ccekit/selection.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ccekit;
using namespace ccekit::montecarlo;
using selection::CriterionTag;
using selection::PenaltyKind;
namespace fs = std::filesystem;

namespace {

// Monte Carlo sizes.
constexpr int kTableReps = 500;
constexpr int kSweepReps = 500;
constexpr int kErReps = 500;
constexpr int kRateReps = 200;
constexpr std::uint64_t kSeed = 20240601;

// Tolerances.
constexpr double kSaturatedTol = 0.05;
constexpr double kConsistentTol = 0.15;
constexpr double kUnderTol = 0.35;
constexpr double kUnderCap = 3.0;
constexpr double kNearStationaryTol = 0.2;
constexpr double kFlatShareCap = 0.20;
constexpr double kFlatTauMax = 0.4;
constexpr double kShareRise = 0.4;
constexpr double kTimeCorrShift = 0.15;
constexpr double kErTol = 0.1;
constexpr double kErPersistentCap = 2.5;
constexpr double kSlopeTol = 0.3;
constexpr double kOverSlopeTol = 0.4;
constexpr double kCacheTol = 1e-10;
constexpr double kDetIdentityTol = 1e-8;
constexpr double kPenroseTol = 1e-8;
constexpr double kAnnihilatorTol = 1e-10;

// 5: the default factor scaling crosses a 0.20 share near tau = 0.35; the
//    other scalings stay flat but lose the rise at tau = 0.9.
// 9: lemA1 decays at about -(1+tau)/2, faster than its -tau/2 bound.
const std::set<int> kKnownFailures{5, 9};

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

const std::vector<Estimator> kFour = table_estimators();

std::string label(const Estimator& e) { return e.criterion_name() + "/" + e.penalty_name(); }

std::map<std::string, double> avg_g(const CellResult& r) {
    std::map<std::string, double> out;
    for (const auto& s : r.stats) out[label(s.estimator)] = s.avg_g;
    return out;
}

CellResult run_one(Cell cell, std::vector<Estimator> estimators, int reps, int cell_index = 0) {
    ExperimentSpec spec;
    spec.cells = {cell};
    spec.estimators = std::move(estimators);
    spec.reps = reps;
    spec.master_seed = kSeed;
    return run_cell(cell, cell_index, spec);
}

Outcome c1() {
    const auto g = avg_g(run_one({10, 10, 0.0}, kFour, kTableReps));
    Outcome o;
    const double mw = g.at("MW/P1"), dvs = g.at("DVS/P2");
    o.pass = std::abs(mw - 9.0) <= kSaturatedTol && std::abs(dvs - 1.0) <= kSaturatedTol;
    o.detail = "MW/P1=" + fmt(mw) + " (9 +- 0.05), DVS/P2=" + fmt(dvs) + " (1 +- 0.05)";
    return o;
}

Outcome within_all(const CellResult& r, const std::map<std::string, double>& target, double tol, double cap) {
    Outcome o;
    for (const auto& [name, v] : avg_g(r)) {
        const double t = target.at(name);
        const bool ok = std::abs(v - t) <= tol && v < cap;
        o.pass = o.pass && ok;
        o.detail += name + "=" + fmt(v) + (ok ? "" : "(!)") + " ";
    }
    return o;
}

Outcome c2() {
    const std::map<std::string, double> t{{"MW/P1", 4}, {"MW/P2", 4}, {"DVS/P1", 4}, {"DVS/P2", 4}};
    Outcome o = within_all(run_one({100, 100, 0.0}, kFour, kTableReps), t, kConsistentTol, 1e9);
    o.detail += "(4 +- 0.15)";
    return o;
}

Outcome c3() {
    const std::map<std::string, double> t{{"MW/P1", 2.25}, {"MW/P2", 2.04}, {"DVS/P1", 2.17}, {"DVS/P2", 1.86}};
    Outcome o = within_all(run_one({100, 100, 0.9}, kFour, kTableReps), t, kUnderTol, kUnderCap);
    o.detail += "(2.25/2.04/2.17/1.86 +- 0.35, all < 3)";
    return o;
}

Outcome c4() {
    const std::map<std::string, double> t{{"MW/P1", 4}, {"MW/P2", 4}, {"DVS/P1", 4}, {"DVS/P2", 4}};
    Outcome o = within_all(run_one({100, 100, 0.1}, kFour, kTableReps), t, kNearStationaryTol, 1e9);
    o.detail += "(4 +- 0.2)";
    return o;
}

Outcome c5() {
    ExperimentSpec spec;
    spec.reps = kSweepReps;
    spec.master_seed = kSeed;
    spec.estimators = {Estimator::ic(CriterionTag::DVS, PenaltyKind::P1), Estimator::ic(CriterionTag::MW, PenaltyKind::P1)};
    const auto pts = tau_sweep(spec, 100, 100, tau_grid(0.0, 0.05, 0.95),
                               {dgp::ErrorConfig::weak_cs(), dgp::ErrorConfig::weak_time_cs()});
    // share[mode][estimator][tau]
    std::map<dgp::ErrorMode, std::map<std::string, std::map<double, double>>> share;
    for (const auto& p : pts)
        for (const auto& s : p.result.stats) share[p.error_mode][label(s.estimator)][p.tau] = s.share_misselected;

    Outcome o;
    double worst_flat = 0.0, min_rise = 1.0, worst_shift = 0.0;
    for (const auto& [name, by_tau] : share[dgp::ErrorMode::weak_cs]) {
        const auto& wt = share[dgp::ErrorMode::weak_time_cs][name];
        for (const auto& [tau, s] : by_tau) {
            if (tau > kFlatTauMax + 1e-9) continue;
            worst_flat = std::max(worst_flat, s);
            worst_shift = std::max(worst_shift, std::abs(wt.at(tau) - s));
        }
        min_rise = std::min(min_rise, by_tau.at(0.9) - by_tau.at(0.1));
    }
    o.pass = worst_flat < kFlatShareCap && min_rise > kShareRise && worst_shift < kTimeCorrShift;
    o.detail = "max share(tau<=0.4)=" + fmt(worst_flat) + " (< 0.20), min rise 0.1->0.9=" + fmt(min_rise) +
               " (> 0.4), max time-corr shift=" + fmt(worst_shift) + " (< 0.15)";
    return o;
}

Outcome c6() {
    const Estimator er = Estimator::er_count(ErVariant::X);
    const double g0 = run_one({200, 200, 0.0}, {er}, kErReps, 0).stats[0].avg_g;
    const double g9 = run_one({200, 200, 0.9}, {er}, kErReps, 1).stats[0].avg_g;
    Outcome o;
    o.pass = std::abs(g0 - 4.0) <= kErTol && g9 < kErPersistentCap;
    o.detail = "ER_X tau=0: " + fmt(g0) + " (4 +- 0.1), tau=0.9: " + fmt(g9) + " (< 2.5)";
    return o;
}

Outcome c7() {
    const auto r = run_one({100, 100, 0.9},
                           {Estimator::ic(CriterionTag::DVS_adjusted, PenaltyKind::P1),
                            Estimator::ic(CriterionTag::DVS_adjusted, PenaltyKind::P2)},
                           kTableReps);
    Outcome o;
    for (const auto& [name, v] : avg_g(r)) {
        o.pass = o.pass && v < kUnderCap;
        o.detail += name + "=" + fmt(v) + " ";
    }
    o.detail += "(< 3)";
    return o;
}

RateResult rate(RateStatistic s, double tau) {
    RateSpec spec = default_rate_spec(s, tau);
    spec.reps = kRateReps;
    spec.seed = kSeed;
    return rate_check(spec);
}

Outcome c8() {
    Outcome o;
    for (double tau : {0.5, 0.9}) {
        const auto r = rate(RateStatistic::prop1_under, tau);
        const bool ok = std::abs(r.fitted_slope - tau) <= kSlopeTol;
        o.pass = o.pass && ok;
        o.detail += "prop1_under(tau=" + fmt(tau, 1) + ")=" + fmt(r.fitted_slope) + " (" + fmt(tau, 1) + " +- 0.3), ";
    }
    const auto r = rate(RateStatistic::prop1_over, 0.5);
    o.pass = o.pass && std::abs(r.fitted_slope + 1.0) <= kOverSlopeTol;
    o.detail += "prop1_over=" + fmt(r.fitted_slope) + " (-1 +- 0.4)";
    return o;
}

Outcome c9() {
    const double tau = 0.5;
    const auto cor = rate(RateStatistic::corA1, tau);
    const auto lem = rate(RateStatistic::lemA1, tau);
    const double cor_target = -(1.0 + tau) / 2.0, lem_target = -tau / 2.0;
    const bool cor_ok = std::abs(cor.fitted_slope - cor_target) <= kSlopeTol;
    const bool lem_ok = std::abs(lem.fitted_slope - lem_target) <= kSlopeTol;
    Outcome o;
    o.pass = cor_ok && lem_ok;
    o.detail = "corA1=" + fmt(cor.fitted_slope) + " (" + fmt(cor_target, 2) + " +- 0.3)" + (cor_ok ? "" : "(!)") +
               ", lemA1=" + fmt(lem.fitted_slope) + " (" + fmt(lem_target, 2) + " +- 0.3)" + (lem_ok ? "" : "(!)");
    return o;
}

dgp::Panel panel(std::uint64_t seed, int N, int T, double tau) {
    dgp::PanelConfig cfg;
    cfg.N = N;
    cfg.T = T;
    cfg.factor.tau = tau;
    RngStream rng(seed);
    return dgp::generate_panel(cfg, rng);
}

Mat columns_of(const Mat& c, selection::SubsetMask mask) {
    const auto cols = mask.columns();
    Mat out(c.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = c.col(cols[j]);
    return out;
}

Mat naive_q(const dgp::Panel& p, const Mat& c, selection::SubsetMask mask) {
    const Mat m = oracle::annihilator(columns_of(c, mask));
    Mat q = Mat::Zero(p.k(), p.k());
    for (int i = 0; i < p.N(); ++i) q += p.x[i].transpose() * m * p.x[i];
    return q / (static_cast<double>(p.N()) * p.T());
}

Outcome c10() {
    using namespace selection;
    double cache_err = 0.0, det_err = 0.0, penrose_err = 0.0, annih_err = 0.0;
    int monotone_bad = 0;

    // Cache against naive annihilators, every mask, T <= 50.
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        const dgp::Panel p = panel(seed, 25, 20 + 15 * static_cast<int>(seed - 11), 0.3 * (seed - 11));
        const CandidateSet full = cce::cs_averages(p);
        const CandidateSet reg = cce::regressor_candidates(full);
        const cce::CceFit fit = cce::cce_pooled(p, full);
        const MomentCache mw_cache = build_cache(p, full, &fit);
        const MomentCache dvs_cache = build_cache(p, reg);
        for (std::uint32_t bits = 1; bits < (1U << 9); ++bits) {
            const SubsetMask mask{bits};
            const Mat m = oracle::annihilator(columns_of(full.c, mask));
            double s = 0.0;
            for (const Vec& nu : fit.residuals) s += nu.dot(m * nu);
            const double ref_mw = std::log(s / (static_cast<double>(p.N()) * p.T()));
            const auto mw = objective(mw_cache, CriterionKind::mw(), mask);
            cache_err = std::max(cache_err, mw ? std::abs(*mw - ref_mw) / std::max(1.0, std::abs(ref_mw)) : 1.0);
            if (bits < (1U << 8)) {
                const double ref = std::log(oracle::det_gauss(naive_q(p, reg.c, mask)));
                const auto dvs = objective(dvs_cache, CriterionKind::dvs(), mask);
                cache_err = std::max(cache_err, dvs ? std::abs(*dvs - ref) / std::max(1.0, std::abs(ref)) : 1.0);
            }
        }
        // Determinant identity for V(M) - V(M0).
        const SubsetMask m0 = SubsetMask::first(4);
        const Mat q0_inv = oracle::inverse_gj(naive_q(p, reg.c, m0));
        for (std::uint32_t bits = 1; bits < 256; bits += 5) {
            const SubsetMask m{bits};
            const Mat inner = Mat::Identity(p.k(), p.k()) + (naive_q(p, reg.c, m) - naive_q(p, reg.c, m0)) * q0_inv;
            const double ref = std::log(oracle::det_gauss(inner));
            const double got = objective_difference(dvs_cache, CriterionKind::dvs(), m, m0);
            det_err = std::max(det_err, std::abs(got - ref) / std::max(1.0, std::abs(ref)));
        }
    }

    // Penrose conditions and annihilator properties on random rank-deficient input.
    RngStream rng(14);
    for (int rep = 0; rep < 50; ++rep) {
        const int rows = 6 + rep % 5, cols = 3 + rep % 4, r = 1 + rep % cols;
        Mat left(rows, r), right(r, cols);
        for (Eigen::Index i = 0; i < left.size(); ++i) left.data()[i] = rng.normal();
        for (Eigen::Index i = 0; i < right.size(); ++i) right.data()[i] = rng.normal();
        const Mat a = left * right;
        const Mat pa = matlin::pinv(a);
        penrose_err = std::max({penrose_err, oracle::max_abs(a * pa * a - a), oracle::max_abs(pa * a * pa - pa),
                                oracle::max_abs((a * pa).transpose() - a * pa),
                                oracle::max_abs((pa * a).transpose() - pa * a)});
        const Mat m = matlin::annihilator(a);
        annih_err = std::max({annih_err, oracle::max_abs(m * m - m), oracle::max_abs(m * a)});
    }

    // Nested-subset monotonicity over 100 random instances.
    RngStream pick(15);
    for (int inst = 0; inst < 100; ++inst) {
        const int N = 8 + static_cast<int>(pick.uniform() * 15);
        const int T = 12 + static_cast<int>(pick.uniform() * 25);
        const dgp::Panel p = panel(2000 + inst, N, T, pick.uniform() * 0.95);
        const CandidateSet full = cce::cs_averages(p);
        const cce::CceFit fit = cce::cce_pooled(p, full);
        const auto mw = objective_table(build_cache(p, full, &fit), CriterionKind::mw());
        const auto dvs = objective_table(build_cache(p, cce::regressor_candidates(full)), CriterionKind::dvs());
        bool ok = true;
        for (std::uint32_t bits = 1; bits < (1U << 9); ++bits)
            for (int j = 0; j < 9; ++j) {
                const std::uint32_t sup = bits | (1U << j);
                if (sup == bits) continue;
                if (mw[bits - 1] && mw[sup - 1]) ok = ok && *mw[sup - 1] <= *mw[bits - 1] + 1e-10;
                if (sup < 256 && dvs[bits - 1] && dvs[sup - 1]) ok = ok && *dvs[sup - 1] <= *dvs[bits - 1] + 1e-10;
            }
        monotone_bad += ok ? 0 : 1;
    }

    char buf[256];
    std::snprintf(buf, sizeof buf, "cache %.1e, det identity %.1e, Penrose %.1e, annihilator %.1e, nested violations %d/100",
                  cache_err, det_err, penrose_err, annih_err, monotone_bad);
    Outcome o;
    o.pass = cache_err <= kCacheTol && det_err <= kDetIdentityTol && penrose_err <= kPenroseTol &&
             annih_err <= kAnnihilatorTol && monotone_bad == 0;
    o.detail = buf;
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome c11() {
    const fs::path dir = fs::temp_directory_path() / "ccekit_acceptance_threads";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << R"({"schema_version": 1, "reps": 60, "seed": 20240601,
                   "cells": [{"N": 30, "T": 30, "tau": 0.0}, {"N": 50, "T": 40, "tau": 0.5},
                             {"N": 100, "T": 100, "tau": 0.9}]})";
    }
    std::vector<std::string> files;
    Outcome o;
    for (const char* threads : {"1", "4", "8"}) {
        const std::string out = (dir / (std::string("t") + threads)).string();
        std::vector<std::string> args{"ccekit", "table", "--config", (dir / "cfg.json").string(), "--out", out,
                                      "--threads", threads};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        if (cli::run(static_cast<int>(argv.size()), argv.data()) != 0) o.pass = false;
        files.push_back(slurp(fs::path(out) / "table.csv"));
    }
    o.pass = o.pass && !files[0].empty() && files[0] == files[1] && files[0] == files[2];
    o.detail = "table.csv " + std::string(o.pass ? "identical" : "differs") + " across 1/4/8 threads (" +
               std::to_string(files[0].size()) + " bytes)";
    fs::remove_all(dir);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    using Fn = Outcome (*)();
    const std::vector<std::pair<std::string, Fn>> criteria{
        {"saturated cell (10,10,0)", c1},          {"consistent cell (100,100,0)", c2},
        {"under-selection cell (100,100,0.9)", c3}, {"near-stationary cell (100,100,0.1)", c4},
        {"tau sweep shape", c5},                    {"eigenvalue ratio (200,200)", c6},
        {"adjusted DVS (100,100,0.9)", c7},         {"selection-gap rates", c8},
        {"average-error rates", c9},                {"oracle equivalences", c10},
        {"thread reproducibility", c11},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!wanted.empty() && !wanted.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool known = !o.pass && kKnownFailures.count(id);
        if (!o.pass && !known) ++unexpected;
        std::printf("criterion %2d %s: %s: %s [%.1fs]%s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str(), secs, known ? " (known)" : "");
        std::fflush(stdout);
    }
    return unexpected == 0 ? 0 : 1;
}
