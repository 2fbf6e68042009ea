#pragma once

#include "ccekit/montecarlo.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ccekit::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_runtime = 3 };

struct Overrides {
    std::optional<int> reps;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

struct SweepConfig {
    int N = 100;
    int T = 100;
    double tau_start = 0.0;
    double tau_step = 0.05;
    double tau_end = 1.0;
    std::vector<dgp::ErrorConfig> error_configs{dgp::ErrorConfig::weak_cs(), dgp::ErrorConfig::weak_time_cs()};
    std::vector<montecarlo::Estimator> estimators{
        montecarlo::Estimator::ic(selection::CriterionTag::MW, selection::PenaltyKind::P1),
        montecarlo::Estimator::ic(selection::CriterionTag::DVS, selection::PenaltyKind::P1)};
};

struct RateConfig {
    std::vector<montecarlo::RateStatistic> statistics{montecarlo::RateStatistic::prop1_under,
                                                      montecarlo::RateStatistic::prop1_over,
                                                      montecarlo::RateStatistic::lemA1,
                                                      montecarlo::RateStatistic::corA1,
                                                      montecarlo::RateStatistic::lemA2,
                                                      montecarlo::RateStatistic::corA2};
    std::vector<double> taus{0.5};
    int N_fixed = 200;
    std::vector<int> T_grid{100, 200, 400, 800};
    int reps = 200;
    dgp::InnovationScale innovation_scale = dgp::InnovationScale::unit;

    /// One RateSpec per (statistic, tau), with the given master seed.
    std::vector<montecarlo::RateSpec> specs(std::uint64_t seed, int threads) const;
};

/// Parsed and validated experiment configuration.
struct RunConfig {
    montecarlo::ExperimentSpec spec;
    SweepConfig sweep;
    RateConfig rate;
    /// FNV-1a of the canonical JSON dump of the input document.
    std::string config_hash;
};

/// Parses a JSON config. Unknown keys and invalid values raise ConfigError
/// with the offending line number.
RunConfig parse_config(const std::string& text, const Overrides& overrides = {});

RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

std::uint64_t fnv1a(const std::string& s);

struct Provenance {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    int reps = 0;
};

/// Shortest round-trip decimal form, always with '.' as separator.
std::string format_double(double v);
/// Fixed notation with `digits` decimals.
std::string format_fixed(double v, int digits);

std::string table_csv(const std::vector<montecarlo::ReportRow>& rows, const Provenance& prov);
std::string sweep_csv(const std::vector<montecarlo::SweepPoint>& points, const Provenance& prov);
std::string rate_csv(const std::vector<montecarlo::RateResult>& results, const Provenance& prov);

/// Standalone SVG line chart of misselection share against tau, one polyline
/// per (criterion, penalty, error mode) series.
std::string sweep_svg(const std::vector<montecarlo::SweepPoint>& points);

int cmd_table(const RunConfig& cfg, const std::filesystem::path& out_dir);
int cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir, bool svg);
int cmd_rate(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Full command line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace ccekit::cli
