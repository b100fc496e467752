// Acceptance checks: one named criterion per invocation, one PASS/FAIL line each.
// Usage: galam_acceptance <criterion>|all

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "galam/exact.hpp"
#include "galam/experiments.hpp"
#include "galam/model.hpp"
#include "galam/process.hpp"
#include "support/stats.hpp"

using namespace galam;
using Rooms = std::map<int, std::int64_t>;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << (ok ? "" : "FAILED ") << what;
  }
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

const std::vector<RoomConfig>& suite() {
  static const std::vector<RoomConfig> configs = {
      RoomConfig(Rooms{{2, 1}}),         RoomConfig(Rooms{{2, 6}}),         RoomConfig(Rooms{{3, 1}}),
      RoomConfig(Rooms{{3, 4}}),         RoomConfig(Rooms{{4, 3}}),         RoomConfig(Rooms{{5, 2}}),
      RoomConfig(Rooms{{2, 1}, {3, 1}}), RoomConfig(Rooms{{2, 1}, {3, 2}}), RoomConfig(Rooms{{2, 2}, {4, 2}}),
      RoomConfig(Rooms{{3, 1}, {4, 1}, {5, 1}}), RoomConfig(Rooms{{2, 1}, {5, 2}}),
      RoomConfig(Rooms{{2, 1}, {3, 2}, {4, 1}}),
  };
  return configs;
}

Verdict fixed_point_goldens() {
  Verdict v;
  const double a3 = model::threshold(RoomConfig::uniform(3, 1));
  const double a5 = model::threshold(RoomConfig::uniform(5, 1));
  const double a4 = model::threshold(RoomConfig::uniform(4, 1));
  const double a6 = model::threshold(RoomConfig::uniform(6, 1));
  v.require(std::fabs(a3 - 0.5) <= 1e-10, "alpha_3=" + fmt(a3, 17));
  v.require(std::fabs(a5 - 0.5) <= 1e-10, "alpha_5=" + fmt(a5, 17));
  v.require(std::fabs(a4 - (1.0 + std::sqrt(13.0)) / 6.0) <= 1e-10, "alpha_4=" + fmt(a4, 17));
  v.require(a6 >= 0.64 && a6 <= 0.66 && std::fabs(a6 - 0.65287106587582720682) <= 1e-10, "alpha_6=" + fmt(a6, 17));
  return v;
}

Verdict oracle_equivalence() {
  Verdict v;
  double worst = 0.0;
  int rows = 0;
  for (const auto& c : suite()) {
    for (std::int64_t u = 0; u <= c.n(); ++u) {
      const auto dp = exact::transition_row(c, u);
      const auto bf = exact::brute_force_row(c, u);
      for (std::size_t k = 0; k < dp.size(); ++k) worst = std::max(worst, std::fabs(dp[k] - bf[k]));
      ++rows;
    }
  }
  v.require(worst <= 1e-12, std::to_string(suite().size()) + " configs, " + std::to_string(rows) +
                                " rows, max entry difference " + fmt(worst, 3));
  return v;
}

Verdict mean_identity() {
  Verdict v;
  double worst = 0.0;
  for (const auto& c : suite()) {
    const auto m = exact::transition_matrix(c);
    for (std::int64_t u = 0; u <= c.n(); ++u) {
      double mean = 0.0;
      for (std::int64_t k = 0; k <= c.n(); ++k) mean += static_cast<double>(k) * m.at(u, k);
      const double p = static_cast<double>(u) / static_cast<double>(c.n());
      worst = std::max(worst, std::fabs(mean - static_cast<double>(c.n()) * model::expected_positive(c, p)));
    }
  }
  v.require(worst <= 1e-9, "max deviation " + fmt(worst, 3));
  return v;
}

Verdict exact_vs_monte_carlo() {
  Verdict v;
  const RoomConfig c(Rooms{{3, 4}});
  const double exact = exact::absorption_probabilities(exact::transition_matrix(c))[7];
  process::TrialConfig tc{c};
  tc.initial_positive = 7;
  tc.seed = 20240601;
  const std::int64_t trials = 100000;
  const auto stats = process::run_ensemble(tc, trials, 1);
  const double se = galam::testing::binomial_se(exact, static_cast<double>(trials));
  const double z = (stats.freq_S_plus - exact) / se;
  v.require(std::fabs(z) <= 3.0, "exact " + fmt(exact, 10) + ", Monte Carlo " + fmt(stats.freq_S_plus, 6) +
                                     " over 1e5 trials, z=" + fmt(z, 3));
  return v;
}

Verdict threshold_behavior() {
  Verdict v;
  process::TrialConfig tc{RoomConfig::uniform(5, 2000)};
  tc.seed = 20240601;
  tc.initial_positive = 6000;
  const auto up = process::run_ensemble(tc, 1000, 1);
  tc.initial_positive = 4000;
  const auto down = process::run_ensemble(tc, 1000, 1);
  v.require(up.freq_S_plus >= 0.99, "start 0.6n: freq_S_plus=" + fmt(up.freq_S_plus));
  v.require(down.freq_S_minus >= 0.99, "start 0.4n: freq_S_minus=" + fmt(down.freq_S_minus));
  return v;
}

Verdict even_threshold_monotonicity() {
  Verdict v;
  const auto table = experiments::threshold_monotonicity(16);
  double min_gap = 1.0;
  bool bounded = true;
  std::string chain;
  for (std::size_t k = 0; k < table.size(); ++k) {
    bounded = bounded && table[k].second > 0.5 && table[k].second < 1.0;
    if (k > 0) min_gap = std::min(min_gap, table[k - 1].second - table[k].second);
    chain += (k ? " > " : "") + fmt(table[k].second, 6);
  }
  v.require(table.size() == 7 && bounded && min_gap >= 1e-4, chain + ", smallest gap " + fmt(min_gap, 4));
  return v;
}

Verdict odd_size_order() {
  Verdict v;
  int checked = 0, violations = 0;
  for (int i = 3; i <= 13; i += 2) {
    for (int k = 1; k <= 99; ++k) {
      if (k == 50) continue;
      const double p = k / 100.0;
      const double small = model::f_single(i, p), large = model::f_single(i + 2, p);
      const bool ok = k > 50 ? small < large : small > large;
      ++checked;
      if (!ok) ++violations;
    }
  }
  v.require(violations == 0, std::to_string(checked) + " grid points, " + std::to_string(violations) + " violations");
  return v;
}

Verdict consensus_scaling() {
  Verdict v;
  const std::vector<std::int64_t> n_list{1000, 10000, 100000, 1000000};

  std::vector<std::string> winners;
  double worst_step = 0.0;
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    const auto r = experiments::consensus_scaling(experiments::uniform_family(5), n_list, 0.7, 1000,
                                                  20240601 + rep, 1);
    winners.push_back(r.fit.better);
    for (std::size_t k = 1; k < r.sweep.rows.size(); ++k) {
      worst_step = std::max(worst_step,
                            r.sweep.rows[k].stats.rounds_mean - r.sweep.rows[k - 1].stats.rounds_mean);
    }
    if (rep == 0) {
      std::string means;
      for (const auto& row : r.sweep.rows) means += (means.empty() ? "" : ",") + fmt(row.stats.rounds_mean, 4);
      v.detail << "size 5 rounds_mean " << means;
    }
  }
  const auto loglog_wins = std::count(winners.begin(), winners.end(), "loglog");
  v.require(worst_step <= 2.0, "largest increase per decade " + fmt(worst_step, 3));
  v.require(loglog_wins >= 2, "loglog preferred in " + std::to_string(loglog_wins) + "/3 repetitions");

  const auto two = experiments::consensus_scaling(experiments::uniform_family(2), n_list, 0.9, 1000, 20240601, 1);
  std::string means;
  for (const auto& row : two.sweep.rows) means += (means.empty() ? "" : ",") + fmt(row.stats.rounds_mean, 4);
  v.require(two.fit.log.r_squared >= 0.95,
            "size 2 rounds_mean " + means + ", R^2 vs ln n " + fmt(two.fit.log.r_squared, 4) + " (vs ln ln n " +
                fmt(two.fit.loglog.r_squared, 4) + ")");
  return v;
}

Verdict tightness() {
  Verdict v;
  experiments::TightnessParams loglog;
  loglog.room_size = 3;
  loglog.epsilon_prime = 0.1;
  loglog.n = 1000000;
  loglog.trials = 1000;
  const auto a = experiments::tightness_probe(experiments::TightnessKind::loglog, loglog, 20240601, 1);
  v.require(a.rows.at(0).measure >= 0.95, "size 3: fraction with a negative seat at the check round " +
                                              fmt(a.rows.at(0).measure) + " (need >= 0.95)");

  experiments::TightnessParams log;
  log.n = 1000000;
  log.trials = 1000;
  const auto b = experiments::tightness_probe(experiments::TightnessKind::log, log, 20240601, 1);
  v.require(b.rows.at(0).measure <= 0.05, "size 2: fraction with n_- < n^(5/6) " + fmt(b.rows.at(0).measure) +
                                              " (need <= 0.05)");
  return v;
}

Verdict concentration() {
  Verdict v;
  const auto five = experiments::concentration_check(RoomConfig::uniform(5, 1), 0.6, 100000, 10000, 0.05, 20240601, 1);
  const auto two = experiments::concentration_check(RoomConfig::uniform(2, 1), 0.5, 100000, 10000, 0.05, 20240601, 1);
  v.require(five.fraction >= 0.999, "size 5 p=0.6: " + fmt(five.fraction));
  v.require(two.fraction >= 0.999, "size 2 p=0.5: " + fmt(two.fraction));
  return v;
}

Verdict variant_reductions() {
  Verdict v;
  // one pooled chi-square per sampler over all rows of the suite
  for (const auto& variant : {VariantSpec::tie_break(0.0), VariantSpec::inflexible(0.0, 0.0)}) {
    double statistic = 0.0;
    int dof = 0;
    bool impossible = false;
    std::uint64_t stream = 0;
    for (const auto& c : suite()) {
      const auto m = exact::transition_matrix(c);
      for (std::int64_t u = 1; u < c.n(); ++u) {
        process::Engine rng(process::stream_seed(20240601, stream++));
        std::vector<std::int64_t> counts(static_cast<std::size_t>(c.n()) + 1, 0);
        for (int d = 0; d < 100000; ++d) ++counts[static_cast<std::size_t>(process::sample_round(c, variant, u, rng))];
        const std::vector<double> row(m.row(u).begin(), m.row(u).end());
        const auto chi = galam::testing::chi_square(counts, row);
        statistic += chi.statistic;
        dof += chi.dof;
        impossible = impossible || chi.impossible;
      }
    }
    const double pvalue = impossible ? 0.0 : galam::testing::chi_square_tail(statistic, dof);
    v.require(pvalue > 1e-3, to_string(variant.kind) + " reduction chi2=" + fmt(statistic, 5) + " dof=" +
                                 std::to_string(dof) + " p=" + fmt(pvalue, 3));
  }

  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(0.4 + 0.02 * k);
  const auto scan = experiments::threshold_scan(RoomConfig::uniform(4, 1), VariantSpec::tie_break(0.5), grid, 10000,
                                                1000, 20240601, 1);
  const double crossing = scan.summary.at("empirical_threshold");
  v.require(std::fabs(crossing - 0.5) <= 0.02, "tie-break k=0.5 size 4 crossing " + fmt(crossing, 5));
  return v;
}

Verdict determinism() {
  Verdict v;
  process::TrialConfig tc{RoomConfig(Rooms{{3, 2000}, {4, 500}, {5, 200}})};
  tc.initial_positive = 5200;
  tc.seed = 20240601;
  tc.record_trajectory = true;
  std::vector<std::string> outputs;
  for (int workers : {1, 2, 4, 8}) {
    const auto results = process::run_trials(tc, 500, workers);
    std::ostringstream csv;
    process::write_trajectories_csv(csv, results);
    process::write_stats_csv(csv, process::summarize(results));
    outputs.push_back(csv.str());
  }
  const bool same = std::all_of(outputs.begin(), outputs.end(), [&](const auto& s) { return s == outputs.front(); });

  std::vector<std::string> sweeps;
  for (int workers : {1, 3}) {
    const auto s = experiments::threshold_scan(RoomConfig::uniform(3, 1), VariantSpec::standard(), {0.45, 0.5, 0.55},
                                               3000, 200, 20240601, workers);
    std::ostringstream csv;
    experiments::write_sweep_csv(csv, s);
    sweeps.push_back(csv.str());
  }
  v.require(same, "trajectory and stats CSV identical for 1, 2, 4 and 8 workers (" +
                      std::to_string(outputs.front().size()) + " bytes)");
  v.require(sweeps[0] == sweeps[1], "sweep CSV identical for 1 and 3 workers");
  return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> list = {
      {"fixed_point_goldens", fixed_point_goldens},
      {"oracle_equivalence", oracle_equivalence},
      {"mean_identity", mean_identity},
      {"exact_vs_monte_carlo", exact_vs_monte_carlo},
      {"threshold_behavior", threshold_behavior},
      {"even_threshold_monotonicity", even_threshold_monotonicity},
      {"odd_size_order", odd_size_order},
      {"consensus_scaling", consensus_scaling},
      {"tightness", tightness},
      {"concentration", concentration},
      {"variant_reductions", variant_reductions},
      {"determinism", determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <criterion>|all|list\n", argv[0]);
    return 2;
  }
  const std::string wanted = argv[1];
  if (wanted == "list") {
    for (const auto& [name, fn] : criteria()) std::printf("%s\n", name.c_str());
    return 0;
  }
  bool any = false, all_pass = true;
  for (const auto& [name, fn] : criteria()) {
    if (wanted != "all" && wanted != name) continue;
    any = true;
    Verdict verdict;
    try {
      verdict = fn();
    } catch (const std::exception& e) {
      verdict.require(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %s: %s\n", verdict.pass ? "PASS" : "FAIL", name.c_str(), verdict.detail.str().c_str());
    std::fflush(stdout);
    all_pass = all_pass && verdict.pass;
  }
  if (!any) {
    std::fprintf(stderr, "unknown criterion '%s'\n", wanted.c_str());
    return 2;
  }
  return all_pass ? 0 : 1;
}
