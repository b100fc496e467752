#include "galam/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "galam/csv.hpp"
#include "galam/errors.hpp"
#include "galam/exact.hpp"
#include "galam/experiments.hpp"
#include "galam/model.hpp"
#include "galam/process.hpp"

namespace galam::cli {
namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string rooms;
  std::string trial;
  std::string output;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  int workers = 1;

  // fixed-point
  double grid = model::kDefaultGridResolution;
  double tolerance = model::kDefaultRootTolerance;

  // simulate / ensemble
  std::optional<std::int64_t> start;
  std::string variant = "standard";
  double k = 0.0, a = 0.0, b = 0.0;
  double victory_margin = 0.0;
  std::int64_t max_rounds = 0;
  bool trajectory = false;
  std::int64_t trials = 1000;

  // exact
  bool matrix = false;
  std::int64_t max_n = exact::kDefaultMaxN;

  // scan / concentration / tightness
  std::int64_t n = 10'000;
  std::vector<double> p_grid;
  double p = 0.5;
  double delta = 0.05;
  std::string kind = "loglog";
  int room_size = 3;
  double epsilon_prime = 0.1;

  // scaling
  std::vector<std::int64_t> n_list{1'000, 10'000, 100'000, 1'000'000};
  double start_fraction = 0.7;

  // monotonicity
  int max_even_size = 16;
};

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("GALAM_SEED")) {
    try {
      std::size_t used = 0;
      const std::string text(env);
      const auto value = std::stoull(text, &used);
      if (used == text.size()) return value;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("GALAM_SEED is not an unsigned integer: '") + env + "'");
  }
  return kDefaultSeed;
}

Format resolve_format(const Options& o) { return o.format == "csv" ? Format::csv : Format::json; }

VariantSpec resolve_variant(const Options& o) {
  VariantSpec v{variant_kind_from_string(o.variant), o.k, o.a, o.b};
  v.validate();
  return v;
}

RoomConfig require_rooms(const Options& o, std::ostream& err) {
  if (o.rooms.empty()) throw UsageError("--rooms is required");
  return load_room_config(o.rooms, err);
}

nlohmann::json read_json_source(const std::string& source) {
  const auto first = source.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && source[first] == '{') return nlohmann::json::parse(source);
  std::ifstream in(source);
  if (!in) throw DomainError("cannot read configuration file '" + source + "'");
  return nlohmann::json::parse(in);
}

process::TrialConfig build_trial(const Options& o, std::ostream& err) {
  if (!o.trial.empty()) {
    auto tc = process::trial_config_from_json(read_json_source(o.trial));
    if (o.seed) tc.seed = *o.seed;
    return tc;
  }
  process::TrialConfig tc{require_rooms(o, err)};
  if (!o.start) throw UsageError("--start is required");
  tc.variant = resolve_variant(o);
  tc.initial_positive = *o.start;
  tc.seed = resolve_seed(o);
  tc.max_rounds = o.max_rounds;
  tc.record_trajectory = o.trajectory;
  tc.victory_margin = o.victory_margin;
  tc.validate();
  return tc;
}

void add_common(CLI::App* cmd, Options& o, bool seeded) {
  cmd->add_option("--output,-o", o.output, "Output file (default stdout)");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  if (seeded) {
    cmd->add_option("--seed", o.seed, "Master seed (default GALAM_SEED or a fixed constant)");
    cmd->add_option("--workers", o.workers, "OpenMP worker threads")->check(CLI::PositiveNumber);
  }
}

void add_rooms(CLI::App* cmd, Options& o) {
  cmd->add_option("--rooms,--config", o.rooms, "Room configuration: inline JSON or a JSON file");
}

void add_variant(CLI::App* cmd, Options& o) {
  cmd->add_option("--variant", o.variant, "standard | tie_break | inflexible");
  cmd->add_option("--k", o.k, "Tie-break probability");
  cmd->add_option("--a", o.a, "Positive inflexible seat probability");
  cmd->add_option("--b", o.b, "Negative inflexible seat probability");
}

void add_trial(CLI::App* cmd, Options& o) {
  add_rooms(cmd, o);
  add_variant(cmd, o);
  cmd->add_option("--trial", o.trial, "Trial configuration JSON (inline or file); replaces the other trial flags");
  cmd->add_option("--start", o.start, "Initial number of positive seats");
  cmd->add_option("--max-rounds", o.max_rounds, "Round cap (default 64*ceil(log2(n+2)))");
  cmd->add_option("--victory-margin", o.victory_margin, "Inflexible variant: widen the stopping band");
  cmd->add_flag("--trajectory", o.trajectory, "Record n_+(t)");
}

int run_fixed_point(const Options& o, std::ostream& out, std::ostream& err) {
  const RoomConfig config = require_rooms(o, err);
  const VariantSpec variant = resolve_variant(o);
  // inflexible maps are defined on [a, 1 - b] only
  const double lo = variant.kind == VariantKind::inflexible ? variant.a : 0.0;
  const double hi = variant.kind == VariantKind::inflexible ? 1.0 - variant.b : 1.0;
  if (!(lo < hi)) throw DomainError("inflexible shares leave no interval for fixed points");
  const auto report = model::find_fixed_points_of(model::expectation_map(config, variant), lo, hi, o.grid, o.tolerance);
  write_output(report, [&](std::ostream& s) {
    csv::write_meta(s, "unique", report.unique ? "true" : "false");
    csv::write_meta(s, "grid_resolution", csv::format_double(report.grid_resolution));
    csv::write_meta(s, "tolerance", csv::format_double(report.tolerance));
    s << "root,bracket_lo,bracket_hi\n";
    for (std::size_t i = 0; i < report.roots.size(); ++i) {
      s << csv::format_double(report.roots[i]) << ',' << csv::format_double(report.brackets[i].first) << ','
        << csv::format_double(report.brackets[i].second) << '\n';
    }
  }, resolve_format(o), o.output, out);
  return kOk;
}

int run_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto tc = build_trial(o, err);
  const auto result = process::run_trial(tc);
  write_output(result, [&](std::ostream& s) {
    if (tc.record_trajectory) {
      process::write_trajectories_csv(s, std::span(&result, 1));
    } else {
      s << "outcome,rounds,final_positive\n"
        << process::to_string(result.outcome) << ',' << result.rounds << ',' << result.final_positive << '\n';
    }
  }, resolve_format(o), o.output, out);
  return kOk;
}

int run_ensemble(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.trials < 1) throw UsageError("--trials must be at least 1");
  const auto tc = build_trial(o, err);
  const auto results = process::run_trials(tc, o.trials, o.workers);
  const auto stats = process::summarize(results);
  nlohmann::json doc = stats;
  if (tc.record_trajectory) doc["results"] = results;
  write_output(doc, [&](std::ostream& s) {
    if (tc.record_trajectory) {
      process::write_trajectories_csv(s, results);
    } else {
      process::write_stats_csv(s, stats);
    }
  }, resolve_format(o), o.output, out);
  return kOk;
}

int run_exact(const Options& o, std::ostream& out, std::ostream& err) {
  const RoomConfig config = require_rooms(o, err);
  if (o.start && (*o.start < 0 || *o.start > config.n())) {
    throw DomainError("start " + std::to_string(*o.start) + " exceeds n=" + std::to_string(config.n()));
  }
  const auto m = exact::transition_matrix(config, o.max_n);
  if (o.matrix) {
    write_output(m, [&](std::ostream& s) { exact::write_matrix_csv(s, m); }, resolve_format(o), o.output, out);
    return kOk;
  }
  const auto report = exact::absorption_report(m);
  if (o.start) {
    const auto u = static_cast<std::size_t>(*o.start);
    const nlohmann::json doc{{"n", config.n()},
                             {"start", *o.start},
                             {"prob_S_plus", report.prob_S_plus[u]},
                             {"expected_time", report.expected_time[u]}};
    write_output(doc, [&](std::ostream& s) {
      s << "n,start,prob_S_plus,expected_time\n"
        << config.n() << ',' << *o.start << ',' << csv::format_double(report.prob_S_plus[u]) << ','
        << csv::format_double(report.expected_time[u]) << '\n';
    }, resolve_format(o), o.output, out);
    return kOk;
  }
  nlohmann::json doc = report;
  doc["n"] = config.n();
  write_output(doc, [&](std::ostream& s) { exact::write_absorption_csv(s, config, report); }, resolve_format(o),
               o.output, out);
  return kOk;
}

int run_scan(const Options& o, std::ostream& out, std::ostream& err) {
  const RoomConfig config = require_rooms(o, err);
  std::vector<double> grid = o.p_grid;
  if (grid.empty()) {
    for (int i = 6; i <= 18; ++i) grid.push_back(i * 0.05);  // 0.30 .. 0.90
  }
  const auto sweep =
      experiments::threshold_scan(config, resolve_variant(o), grid, o.n, o.trials, resolve_seed(o), o.workers);
  write_output(sweep, [&](std::ostream& s) { experiments::write_sweep_csv(s, sweep); }, resolve_format(o), o.output,
               out);
  return kOk;
}

int run_scaling(const Options& o, std::ostream& out, std::ostream& err) {
  experiments::ConfigFamily family;
  if (!o.rooms.empty()) {
    const RoomConfig shape = require_rooms(o, err);
    family = [shape](std::int64_t n) { return shape.rescaled(n); };
  } else {
    family = experiments::uniform_family(o.room_size);
  }
  const auto result =
      experiments::consensus_scaling(family, o.n_list, o.start_fraction, o.trials, resolve_seed(o), o.workers);
  const nlohmann::json doc{{"sweep", result.sweep}, {"fit", result.fit}};
  write_output(doc, [&](std::ostream& s) {
    experiments::write_scaling_fit_csv(s, result);
    s << '\n';
    experiments::write_sweep_csv(s, result.sweep);
  }, resolve_format(o), o.output, out);
  return kOk;
}

int run_tightness(const Options& o, std::ostream& out, std::ostream&) {
  experiments::TightnessParams params;
  params.room_size = o.room_size;
  params.epsilon_prime = o.epsilon_prime;
  params.n = o.n;
  params.trials = o.trials;
  const auto sweep = experiments::tightness_probe(experiments::tightness_kind_from_string(o.kind), params,
                                                  resolve_seed(o), o.workers);
  write_output(sweep, [&](std::ostream& s) { experiments::write_sweep_csv(s, sweep); }, resolve_format(o), o.output,
               out);
  return kOk;
}

int run_concentration(const Options& o, std::ostream& out, std::ostream& err) {
  const RoomConfig config = require_rooms(o, err);
  const auto r = experiments::concentration_check(config, o.p, o.n, o.trials, o.delta, resolve_seed(o), o.workers);
  write_output(r, [&](std::ostream& s) {
    s << "n,u,trials,expectation,fraction\n"
      << r.n << ',' << r.u << ',' << r.trials << ',' << csv::format_double(r.expectation) << ','
      << csv::format_double(r.fraction) << '\n';
  }, resolve_format(o), o.output, out);
  return kOk;
}

int run_monotonicity(const Options& o, std::ostream& out, std::ostream&) {
  const auto table = experiments::threshold_monotonicity(o.max_even_size);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [size, alpha] : table) rows.push_back({{"size", size}, {"alpha", alpha}});
  write_output(nlohmann::json{{"thresholds", rows}}, [&](std::ostream& s) {
    s << "size,alpha\n";
    for (const auto& [size, alpha] : table) s << size << ',' << csv::format_double(alpha) << '\n';
  }, resolve_format(o), o.output, out);
  return kOk;
}

}  // namespace

RoomConfig load_room_config(const std::string& source, std::ostream& diag) {
  const nlohmann::json j = read_json_source(source);
  RoomConfig config = room_config_from_json(j);
  if (j.is_object() && j.contains("fractions")) {
    diag << "note: achieved n=" << config.n();
    for (const auto& [size, a] : config.fractions()) diag << " a_" << size << '=' << csv::format_double(a);
    diag << '\n';
  }
  return config;
}

void write_output(const nlohmann::json& doc, const std::function<void(std::ostream&)>& write_csv, Format format,
                  const std::string& path, std::ostream& out) {
  auto emit = [&](std::ostream& s) {
    if (format == Format::json) {
      s << doc.dump() << '\n';
    } else {
      write_csv(s);
    }
  };
  if (path.empty() || path == "-") {
    emit(out);
    out.flush();
    if (!out) throw IoError("failed to write output");
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open output file '" + path + "'");
  emit(file);
  file.close();
  if (!file) throw IoError("failed to write output file '" + path + "'");
}

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Galam majority-rule opinion dynamics: fixed points, simulation, exact chains, experiments",
               "galam"};
  app.require_subcommand(1);
  Options o;

  auto* fixed = app.add_subcommand("fixed-point", "Fixed points of f(p) = E[P_+^p] in (0, 1)");
  add_rooms(fixed, o);
  add_common(fixed, o, false);
  add_variant(fixed, o);
  fixed->add_option("--grid", o.grid, "Scan resolution (<= 1e-3)");
  fixed->add_option("--tol", o.tolerance, "Bisection width");

  auto* simulate = app.add_subcommand("simulate", "Run one trial to absorption");
  add_trial(simulate, o);
  add_common(simulate, o, true);

  auto* ensemble = app.add_subcommand("ensemble", "Run independent trials and aggregate");
  add_trial(ensemble, o);
  add_common(ensemble, o, true);
  ensemble->add_option("--trials", o.trials, "Number of trials");

  auto* exact_cmd = app.add_subcommand("exact", "Exact chain: absorption probabilities and times");
  add_rooms(exact_cmd, o);
  add_common(exact_cmd, o, false);
  exact_cmd->add_option("--start", o.start, "Report a single starting state");
  exact_cmd->add_flag("--matrix", o.matrix, "Emit the transition matrix instead");
  exact_cmd->add_option("--max-n", o.max_n, "Size cap for the dense chain");

  auto* scan = app.add_subcommand("scan", "Threshold scan over the initial positive fraction");
  add_rooms(scan, o);
  add_variant(scan, o);
  add_common(scan, o, true);
  scan->add_option("--n", o.n, "Approximate number of seats");
  scan->add_option("--p-grid", o.p_grid, "Start fractions (comma separated)")->delimiter(',');
  scan->add_option("--trials", o.trials, "Trials per point");

  auto* scaling = app.add_subcommand("scaling", "Consensus-time scaling over n");
  add_rooms(scaling, o);
  add_common(scaling, o, true);
  scaling->add_option("--room-size", o.room_size, "Uniform room size when --rooms is absent");
  scaling->add_option("--n-list", o.n_list, "Values of n (comma separated)")->delimiter(',');
  scaling->add_option("--start-fraction", o.start_fraction, "Initial positive fraction P_+(0)");
  scaling->add_option("--trials", o.trials, "Trials per n");

  auto* tightness = app.add_subcommand("tightness", "Lower-bound tightness probes");
  add_common(tightness, o, true);
  tightness->add_option("--kind", o.kind, "loglog | log");
  tightness->add_option("--room-size", o.room_size, "Room size for the loglog probe");
  tightness->add_option("--epsilon-prime", o.epsilon_prime, "Initial negative fraction for the loglog probe");
  tightness->add_option("--n", o.n, "Approximate number of seats");
  tightness->add_option("--trials", o.trials, "Number of trials");

  auto* concentration = app.add_subcommand("concentration", "One-round concentration around the expectation");
  add_rooms(concentration, o);
  add_common(concentration, o, true);
  concentration->add_option("--p", o.p, "Positive seat probability");
  concentration->add_option("--n", o.n, "Approximate number of seats");
  concentration->add_option("--delta", o.delta, "Relative band half-width");
  concentration->add_option("--trials", o.trials, "Number of draws");

  auto* monotonicity = app.add_subcommand("monotonicity", "Even-size thresholds alpha_4 > alpha_6 > ...");
  add_common(monotonicity, o, false);
  monotonicity->add_option("--max-even-size", o.max_even_size, "Largest even room size (<= 16)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*fixed) return run_fixed_point(o, out, err);
    if (*simulate) return run_simulate(o, out, err);
    if (*ensemble) return run_ensemble(o, out, err);
    if (*exact_cmd) return run_exact(o, out, err);
    if (*scan) return run_scan(o, out, err);
    if (*scaling) return run_scaling(o, out, err);
    if (*tightness) return run_tightness(o, out, err);
    if (*concentration) return run_concentration(o, out, err);
    if (*monotonicity) return run_monotonicity(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  }
  err << "error: no subcommand\n";
  return kUsage;
}

}  // namespace galam::cli
