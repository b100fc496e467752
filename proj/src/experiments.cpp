#include "galam/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "galam/csv.hpp"
#include "galam/errors.hpp"
#include "galam/model.hpp"

namespace galam::experiments {
namespace {

using process::ConsensusStats;
using process::TrialConfig;

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

double win_frequency(const ConsensusStats& s) { return s.freq_S_plus + s.freq_victory_positives; }

RoomConfig at_size(const RoomConfig& config, std::int64_t n) {
  return config.n() == n ? config : config.rescaled(n);
}

// 50% crossing of the win frequency along the axis, NaN when there is none.
double fifty_percent_crossing(const std::vector<double>& x, const std::vector<double>& w) {
  for (std::size_t j = 1; j < x.size(); ++j) {
    if (w[j - 1] < 0.5 && w[j] >= 0.5) return x[j - 1] + (0.5 - w[j - 1]) * (x[j] - x[j - 1]) / (w[j] - w[j - 1]);
  }
  return std::nan("");
}

}  // namespace

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("line fit needs at least two points");
  const auto m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw UsageError("line fit needs at least two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    fit.residuals.push_back(r);
    fit.ssr += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - fit.ssr / syy : 1.0;
  return fit;
}

SweepResult threshold_scan(const RoomConfig& config, const VariantSpec& variant, const std::vector<double>& p_grid,
                           std::int64_t n, std::int64_t trials, std::uint64_t seed, int workers) {
  variant.validate();
  if (p_grid.empty()) throw UsageError("threshold scan needs a non-empty p grid");
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (!(p_grid[i] > 0.0 && p_grid[i] < 1.0)) throw UsageError("p grid values must lie in (0, 1)");
    if (i > 0 && !(p_grid[i] > p_grid[i - 1])) throw UsageError("p grid must be strictly increasing");
  }
  if (trials < 100) throw UsageError("threshold scan needs at least 100 trials per point");

  const RoomConfig scaled = at_size(config, n);
  SweepResult out;
  out.experiment = "scan";
  out.axis_name = "p";
  out.axis = p_grid;
  out.seed = seed;
  out.variant = variant;
  out.config_digest = scaled.digest();
  out.measure_name = "win_frequency";

  std::vector<double> wins;
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    TrialConfig tc{scaled, variant};
    tc.initial_positive = static_cast<std::int64_t>(std::floor(p_grid[i] * static_cast<double>(scaled.n())));
    tc.seed = process::stream_seed(seed, i);
    SweepRow row{p_grid[i], scaled.n(), scaled.digest(), process::run_ensemble(tc, trials, workers)};
    row.measure = win_frequency(row.stats);
    wins.push_back(row.measure);
    out.rows.push_back(std::move(row));
  }

  out.summary["empirical_threshold"] = fifty_percent_crossing(p_grid, wins);
  if (std::isnan(out.summary["empirical_threshold"])) out.warnings.push_back("win frequency never crosses 0.5 on the grid");

  double lo = 0.0, hi = 1.0;
  if (variant.kind == VariantKind::inflexible) {
    lo = variant.a;
    hi = 1.0 - variant.b;
  }
  double model_alpha = std::nan("");
  if (lo < hi) {
    const auto g = model::expectation_map(scaled, variant);
    const auto ups = model::upcrossings(g, model::find_fixed_points_of(g, lo, hi));
    if (ups.size() == 1) model_alpha = ups.front();
  }
  out.summary["model_threshold"] = model_alpha;
  if (std::isnan(model_alpha)) out.warnings.push_back("model has no unique threshold for this configuration");
  return out;
}

ConfigFamily uniform_family(int room_size) {
  return [room_size](std::int64_t n) { return RoomConfig::uniform(room_size, std::max<std::int64_t>(1, n / room_size)); };
}

ScalingResult consensus_scaling(const ConfigFamily& family, const std::vector<std::int64_t>& n_list,
                                double start_fraction, std::int64_t trials, std::uint64_t seed, int workers) {
  std::vector<std::int64_t> ns = n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 3) throw UsageError("insufficient points: consensus scaling needs at least 3 distinct n values");
  if (!(start_fraction >= 0.0 && start_fraction <= 1.0)) throw DomainError("start fraction must lie in [0, 1]");
  if (trials < 1) throw UsageError("trials must be at least 1");

  ScalingResult result;
  SweepResult& out = result.sweep;
  out.experiment = "scaling";
  out.axis_name = "n";
  out.seed = seed;
  out.measure_name = "start_positive";
  if (static_cast<double>(ns.back()) < 1000.0 * static_cast<double>(ns.front())) {
    out.warnings.push_back("n values span fewer than 3 decades");
  }

  std::vector<double> x_loglog, x_log, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const RoomConfig config = family(ns[i]);
    if (out.config_digest.empty()) out.config_digest = config.digest();
    TrialConfig tc{config};
    tc.initial_positive = static_cast<std::int64_t>(std::floor(start_fraction * static_cast<double>(config.n())));
    tc.seed = process::stream_seed(seed, i);
    SweepRow row{static_cast<double>(config.n()), config.n(), config.digest(), process::run_ensemble(tc, trials, workers)};
    row.measure = static_cast<double>(tc.initial_positive);
    if (!out.axis.empty() && !(row.axis_value > out.axis.back())) {
      throw UsageError("configuration family must produce strictly increasing n");
    }
    if (!std::isfinite(row.stats.rounds_mean)) throw NumericError("no trial absorbed at n=" + std::to_string(config.n()));
    const double nn = static_cast<double>(config.n());
    x_log.push_back(std::log(nn));
    x_loglog.push_back(std::log(std::log(nn)));
    y.push_back(row.stats.rounds_mean);
    out.axis.push_back(row.axis_value);
    out.rows.push_back(std::move(row));
  }
  result.fit.loglog = fit_line(x_loglog, y);
  result.fit.log = fit_line(x_log, y);
  result.fit.better = result.fit.loglog.ssr <= result.fit.log.ssr ? "loglog" : "log";
  out.summary["start_fraction"] = start_fraction;
  out.summary["ssr_loglog"] = result.fit.loglog.ssr;
  out.summary["ssr_log"] = result.fit.log.ssr;
  return result;
}

ConcentrationResult concentration_check(const RoomConfig& config, double p, std::int64_t n, std::int64_t trials,
                                        double delta, std::uint64_t seed, int workers) {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
  if (n < 1000) throw UsageError("concentration check needs n >= 1000");
  if (trials < 1) throw UsageError("trials must be at least 1");
  if (workers < 1) throw UsageError("workers must be at least 1");

  const RoomConfig scaled = at_size(config, n);
  ConcentrationResult r;
  r.n = scaled.n();
  r.u = std::llround(p * static_cast<double>(r.n));
  r.trials = trials;
  r.expectation = model::expected_positive(scaled, static_cast<double>(r.u) / static_cast<double>(r.n));
  const double lo = (1.0 - delta) * r.expectation;
  const double hi = (1.0 + delta) * r.expectation;

  std::int64_t inside = 0;
#pragma omp parallel for num_threads(workers) reduction(+ : inside) schedule(static)
  for (std::int64_t i = 0; i < trials; ++i) {
    process::Engine rng(process::stream_seed(seed, static_cast<std::uint64_t>(i)));
    const double frac = static_cast<double>(process::sample_round(scaled, r.u, rng)) / static_cast<double>(r.n);
    if (frac > lo && frac < hi) ++inside;
  }
  r.fraction = static_cast<double>(inside) / static_cast<double>(trials);
  return r;
}

TightnessKind tightness_kind_from_string(const std::string& name) {
  if (name == "loglog") return TightnessKind::loglog;
  if (name == "log") return TightnessKind::log;
  throw UsageError("unknown tightness probe kind '" + name + "' (expected loglog or log)");
}

std::string to_string(TightnessKind kind) { return kind == TightnessKind::loglog ? "loglog" : "log"; }

SweepResult tightness_probe(TightnessKind kind, const TightnessParams& params, std::uint64_t seed, int workers) {
  if (params.trials < 1) throw UsageError("trials must be at least 1");
  if (params.n < 4) throw UsageError("tightness probe needs n >= 4");
  const int size = kind == TightnessKind::log ? 2 : params.room_size;
  if (kind == TightnessKind::loglog && size < 3) throw UsageError("loglog probe needs rooms of size >= 3");
  if (kind == TightnessKind::loglog && !(params.epsilon_prime > 0.0 && params.epsilon_prime < 1.0)) {
    throw DomainError("epsilon_prime must lie in (0, 1)");
  }

  const RoomConfig config = uniform_family(size)(params.n);
  const std::int64_t n = config.n();
  const double nd = static_cast<double>(n);

  std::int64_t negatives0 = 0;
  std::int64_t check_round = 0;
  if (kind == TightnessKind::loglog) {
    negatives0 = std::llround(params.epsilon_prime * nd);
    check_round = static_cast<std::int64_t>(std::floor(std::log(std::log2(nd)) / std::log(size) / 2.0));
  } else {
    negatives0 = std::llround(std::sqrt(nd));
    check_round = static_cast<std::int64_t>(std::floor(std::log2(nd) / 6.0));
  }
  negatives0 = std::clamp<std::int64_t>(negatives0, 1, n - 1);

  TrialConfig tc{config};
  tc.initial_positive = n - negatives0;
  tc.seed = seed;
  tc.record_trajectory = true;
  const auto results = process::run_trials(tc, params.trials, workers);

  const double cutoff = std::pow(nd, 5.0 / 6.0);
  std::int64_t hits = 0;
  for (const auto& r : results) {
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(check_round), r.trajectory.size() - 1);
    const std::int64_t negatives = n - r.trajectory[idx];
    if (kind == TightnessKind::loglog ? negatives > 0 : static_cast<double>(negatives) < cutoff) ++hits;
  }

  SweepResult out;
  out.experiment = "tightness-" + to_string(kind);
  out.axis_name = "n";
  out.axis = {nd};
  out.seed = seed;
  out.config_digest = config.digest();
  out.measure_name = kind == TightnessKind::loglog ? "fraction_with_negative" : "fraction_below_n_5_6";
  SweepRow row{nd, n, config.digest(), process::summarize(results)};
  row.measure = static_cast<double>(hits) / static_cast<double>(params.trials);
  out.summary["check_round"] = static_cast<double>(check_round);
  out.summary["initial_negatives"] = static_cast<double>(negatives0);
  if (kind == TightnessKind::log) {
    out.summary["cutoff_n_5_6"] = cutoff;
    out.summary["fraction_at_or_above"] = 1.0 - row.measure;
  } else {
    out.summary["epsilon_prime"] = params.epsilon_prime;
  }
  out.rows.push_back(std::move(row));
  if (n < 10'000) out.warnings.push_back("asymptotic regime not reached at n=" + std::to_string(n));
  if (check_round == 0) out.warnings.push_back("check round is 0; the probe is vacuous at this n");
  return out;
}

std::vector<std::pair<int, double>> threshold_monotonicity(int max_even_size) {
  if (max_even_size < 4 || max_even_size > 16 || max_even_size % 2 != 0) {
    throw UsageError("max even size must be an even number in [4, 16]");
  }
  std::vector<std::pair<int, double>> table;
  for (int i = 4; i <= max_even_size; i += 2) {
    const double alpha = model::threshold(RoomConfig::uniform(i, 1));
    if (!(alpha > 0.5 && alpha < 1.0)) {
      throw std::logic_error("threshold of size " + std::to_string(i) + " outside (0.5, 1)");
    }
    if (!table.empty() && !(alpha < table.back().second)) {
      throw std::logic_error("thresholds not strictly decreasing at size " + std::to_string(i));
    }
    table.emplace_back(i, alpha);
  }
  return table;
}

void to_json(nlohmann::json& j, const SweepResult& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows) {
    nlohmann::json row = r.stats;
    row[s.axis_name] = r.axis_value;
    row["n"] = r.n;
    row["config_digest"] = r.config_digest;
    if (!s.measure_name.empty()) row[s.measure_name] = number_or_null(r.measure);
    rows.push_back(std::move(row));
  }
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [k, v] : s.summary) summary[k] = number_or_null(v);
  j = nlohmann::json{{"experiment", s.experiment}, {"axis_name", s.axis_name},   {"axis", s.axis},
                     {"rows", rows},               {"seed", s.seed},             {"variant", s.variant},
                     {"config_digest", s.config_digest}, {"measure_name", s.measure_name},
                     {"summary", summary},         {"warnings", s.warnings}};
}

void to_json(nlohmann::json& j, const LinearFit& f) {
  j = nlohmann::json{{"slope", f.slope}, {"intercept", f.intercept}, {"ssr", f.ssr},
                     {"r_squared", f.r_squared}, {"residuals", f.residuals}};
}

void to_json(nlohmann::json& j, const ScalingFit& f) {
  j = nlohmann::json{{"loglog", f.loglog}, {"log", f.log}, {"better", f.better}};
}

void to_json(nlohmann::json& j, const ConcentrationResult& c) {
  j = nlohmann::json{{"fraction", c.fraction}, {"expectation", c.expectation}, {"n", c.n}, {"u", c.u}, {"trials", c.trials}};
}

void write_sweep_csv(std::ostream& out, const SweepResult& s) {
  using csv::format_double;
  csv::write_meta(out, "experiment", s.experiment);
  csv::write_meta(out, "seed", std::to_string(s.seed));
  csv::write_meta(out, "variant", nlohmann::json(s.variant).dump());
  csv::write_meta(out, "config_digest", s.config_digest);
  for (const auto& [k, v] : s.summary) csv::write_meta(out, k, format_double(v));
  for (const auto& w : s.warnings) csv::write_meta(out, "warning", w);
  out << s.axis_name
      << ",n,config_digest,trials,absorbed,freq_S_plus,freq_S_minus,freq_victory_positives,"
         "freq_victory_negatives,freq_timeout,rounds_mean,rounds_p50,rounds_p95,rounds_max";
  if (!s.measure_name.empty()) out << ',' << s.measure_name;
  out << '\n';
  for (const auto& r : s.rows) {
    const auto& st = r.stats;
    out << format_double(r.axis_value) << ',' << r.n << ',' << r.config_digest << ',' << st.trials << ','
        << st.absorbed << ',' << format_double(st.freq_S_plus) << ',' << format_double(st.freq_S_minus) << ','
        << format_double(st.freq_victory_positives) << ',' << format_double(st.freq_victory_negatives) << ','
        << format_double(st.freq_timeout) << ',' << format_double(st.rounds_mean) << ','
        << format_double(st.rounds_p50) << ',' << format_double(st.rounds_p95) << ','
        << format_double(st.rounds_max);
    if (!s.measure_name.empty()) out << ',' << format_double(r.measure);
    out << '\n';
  }
}

void write_scaling_fit_csv(std::ostream& out, const ScalingResult& r) {
  using csv::format_double;
  csv::write_meta(out, "experiment", "scaling-fit");
  csv::write_meta(out, "seed", std::to_string(r.sweep.seed));
  csv::write_meta(out, "better", r.fit.better);
  for (const auto& [name, fit] : {std::pair{"loglog", &r.fit.loglog}, std::pair{"log", &r.fit.log}}) {
    csv::write_meta(out, std::string(name) + "_slope", format_double(fit->slope));
    csv::write_meta(out, std::string(name) + "_intercept", format_double(fit->intercept));
    csv::write_meta(out, std::string(name) + "_ssr", format_double(fit->ssr));
    csv::write_meta(out, std::string(name) + "_r_squared", format_double(fit->r_squared));
  }
  out << "n,rounds_mean,ln_ln_n,residual_loglog,ln_n,residual_log\n";
  for (std::size_t i = 0; i < r.sweep.rows.size(); ++i) {
    const auto& row = r.sweep.rows[i];
    const double nn = static_cast<double>(row.n);
    out << row.n << ',' << format_double(row.stats.rounds_mean) << ',' << format_double(std::log(std::log(nn)))
        << ',' << format_double(r.fit.loglog.residuals[i]) << ',' << format_double(std::log(nn)) << ','
        << format_double(r.fit.log.residuals[i]) << '\n';
  }
}

std::string file_name(const SweepResult& s, const std::string& extension) {
  return s.experiment + "-" + s.config_digest + "-" + std::to_string(s.seed) + "." + extension;
}

}  // namespace galam::experiments
