#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "galam/process.hpp"
#include "galam/room_config.hpp"

/// Desk-scale reproductions of the model's threshold and consensus-time
/// behaviour. Every sweep point gets its own derived seed, so results depend
/// only on (config, seed, trial count) and never on scheduling.
namespace galam::experiments {

struct SweepRow {
  double axis_value = 0.0;
  std::int64_t n = 0;
  std::string config_digest;
  process::ConsensusStats stats;
  /// Experiment-specific measurement (see SweepResult::measure_name), NaN if none.
  double measure = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  std::string experiment;
  std::string axis_name;
  std::vector<double> axis;  // strictly increasing
  std::vector<SweepRow> rows;
  std::uint64_t seed = 0;
  VariantSpec variant{};
  std::string config_digest;
  std::string measure_name;
  std::map<std::string, double> summary;  // e.g. empirical_threshold, model_threshold
  std::vector<std::string> warnings;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ssr = 0.0;  ///< residual sum of squares
  double r_squared = 0.0;
  std::vector<double> residuals;
};

/// Ordinary least squares y ~ slope * x + intercept. Needs >= 2 distinct x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingFit {
  LinearFit loglog;  ///< rounds_mean vs ln ln n
  LinearFit log;     ///< rounds_mean vs ln n
  std::string better;  ///< "loglog" or "log", by smaller residual sum of squares
};

/// Sweeps the start fraction P_+(0) over p_grid at about n seats (config is
/// rescaled to n), running `trials` trials from floor(p n) per point.
/// summary["empirical_threshold"] is the 50% crossing of the win frequency
/// by linear interpolation; summary["model_threshold"] is the variant's
/// unstable fixed point when it is unique.
SweepResult threshold_scan(const RoomConfig& config, const VariantSpec& variant, const std::vector<double>& p_grid,
                           std::int64_t n, std::int64_t trials, std::uint64_t seed, int workers = 1);

using ConfigFamily = std::function<RoomConfig(std::int64_t n)>;

/// All rooms of one size, about n seats.
ConfigFamily uniform_family(int room_size);

struct ScalingResult {
  SweepResult sweep;
  ScalingFit fit;
};

/// Mean consensus rounds per n from start fraction P_+(0) = start_fraction,
/// fitted against ln ln n and ln n. Needs >= 3 distinct n values.
ScalingResult consensus_scaling(const ConfigFamily& family, const std::vector<std::int64_t>& n_list,
                                double start_fraction, std::int64_t trials, std::uint64_t seed, int workers = 1);

struct ConcentrationResult {
  double fraction = 0.0;  ///< draws with v/n strictly inside (1 +- delta) E
  double expectation = 0.0;
  std::int64_t n = 0;
  std::int64_t u = 0;
  std::int64_t trials = 0;
};

/// Fraction of one-round draws from u = round(p n) with v/n inside
/// ((1 - delta) E, (1 + delta) E), E = expected_positive(config, u/n).
ConcentrationResult concentration_check(const RoomConfig& config, double p, std::int64_t n, std::int64_t trials,
                                        double delta, std::uint64_t seed, int workers = 1);

enum class TightnessKind { loglog, log };
TightnessKind tightness_kind_from_string(const std::string& name);
std::string to_string(TightnessKind kind);

struct TightnessParams {
  int room_size = 3;              ///< loglog probe only; the log probe uses rooms of size 2
  double epsilon_prime = 0.1;     ///< loglog probe: P_-(0)
  std::int64_t n = 1'000'000;
  std::int64_t trials = 1000;
};

/// loglog: all rooms of size i >= 3 from P_-(0) = epsilon_prime; measure is
/// the fraction of trials that still have a negative seat at round
/// floor(log_i(log_2 n) / 2).
/// log: rooms of size 2 from P_-(0) = n^(-1/2); measure is the fraction of
/// trials with n_- < n^(5/6) at round floor(log_2 n / 6);
/// summary["fraction_at_or_above"] holds the complement.
SweepResult tightness_probe(TightnessKind kind, const TightnessParams& params, std::uint64_t seed, int workers = 1);

/// Thresholds alpha_i for even i = 4, 6, ..., max_even_size (<= 16). Throws
/// std::logic_error if the sequence is not strictly decreasing inside (0.5, 1).
std::vector<std::pair<int, double>> threshold_monotonicity(int max_even_size);

void to_json(nlohmann::json& j, const SweepResult& s);
void to_json(nlohmann::json& j, const LinearFit& f);
void to_json(nlohmann::json& j, const ScalingFit& f);
void to_json(nlohmann::json& j, const ConcentrationResult& c);

/// Metadata as "# key=value" lines, then a header and one row per axis value.
void write_sweep_csv(std::ostream& out, const SweepResult& s);
void write_scaling_fit_csv(std::ostream& out, const ScalingResult& r);

/// <experiment>-<config digest>-<seed>.<extension>
std::string file_name(const SweepResult& s, const std::string& extension);

}  // namespace galam::experiments
