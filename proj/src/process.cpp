#include "galam/process.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "galam/csv.hpp"
#include "galam/detail/compensated_sum.hpp"
#include "galam/errors.hpp"
#include "galam/model.hpp"

namespace galam::process {
namespace {

void check_count(const RoomConfig& config, std::int64_t u) {
  if (u < 0 || u > config.n()) {
    throw DomainError("positive-seat count " + std::to_string(u) + " outside [0, n=" +
                      std::to_string(config.n()) + "]");
  }
}

double seat_probability(const RoomConfig& config, std::int64_t u) {
  return static_cast<double>(u) / static_cast<double>(config.n());
}

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

// ratio = x / y as a probability, 0 when y == 0.
double ratio(double x, double y) { return y > 0.0 ? clamp_unit(x / y) : 0.0; }

struct InflexibleSplit {
  double positive_inflexible;  // P(inflexible | positive seat)
  double negative_inflexible;  // P(inflexible | negative seat)
};

InflexibleSplit inflexible_split(const RoomConfig& config, std::int64_t u, double a, double b) {
  VariantSpec::inflexible(a, b);
  check_count(config, u);
  const double n = static_cast<double>(config.n());
  const auto lo = static_cast<std::int64_t>(std::floor(a * n));
  const auto hi = config.n() - static_cast<std::int64_t>(std::floor(b * n));
  if (u < lo || u > hi) {
    throw DomainError("positive-seat count " + std::to_string(u) + " outside the inflexible band [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const double p = seat_probability(config, u);
  return {ratio(a, p), ratio(b, 1.0 - p)};
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(seed ^ splitmix64(index)); }

std::int64_t draw_binomial(std::int64_t trials, double p, Engine& rng) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  return std::binomial_distribution<std::int64_t>(trials, p)(rng);
}

std::int64_t sample_round(const RoomConfig& config, std::int64_t u, Engine& rng) {
  check_count(config, u);
  const double p = seat_probability(config, u);
  std::int64_t v = 0;
  for (const auto& [size, count] : config.rooms()) {
    v += size * draw_binomial(count, model::f_single(size, p), rng);
  }
  return v;
}

std::int64_t sample_round_matching(const RoomConfig& config, std::int64_t n_plus, Engine& rng) {
  check_count(config, n_plus);
  std::int64_t seats_left = config.n();
  std::int64_t positives_left = n_plus;
  std::int64_t v = 0;
  for (const auto& [size, count] : config.rooms()) {
    for (std::int64_t room = 0; room < count; ++room) {
      int positives = 0;
      for (int seat = 0; seat < size; ++seat) {
        if (positives_left > 0 &&
            std::uniform_int_distribution<std::int64_t>(0, seats_left - 1)(rng) < positives_left) {
          ++positives;
          --positives_left;
        }
        --seats_left;
      }
      if (positives > size / 2) v += size;
    }
  }
  return v;
}

std::int64_t sample_round_tiebreak(const RoomConfig& config, std::int64_t u, double k, Engine& rng) {
  VariantSpec::tie_break(k);
  check_count(config, u);
  const double p = seat_probability(config, u);
  std::int64_t v = 0;
  for (const auto& [size, count] : config.rooms()) {
    const double win = model::f_single(size, p);
    const double tie = model::tie_single(size, p);
    const std::int64_t won = draw_binomial(count, win, rng);
    const std::int64_t tied = tie > 0.0 ? draw_binomial(count - won, ratio(tie, 1.0 - win), rng) : 0;
    v += size * won + draw_binomial(size * tied, k, rng);
  }
  return v;
}

std::int64_t sample_round_inflexible(const RoomConfig& config, std::int64_t u, double a, double b,
                                     Engine& rng) {
  const InflexibleSplit split = inflexible_split(config, u, a, b);
  const double p = seat_probability(config, u);
  std::int64_t v = 0;
  for (const auto& [size, count] : config.rooms()) {
    // pmf of the positive-seat count in one room, and its running lower sums
    std::array<double, kMaxRoomSize + 1> pmf{};
    std::array<double, kMaxRoomSize + 1> below{};
    detail::CompensatedSum running;
    for (int k = 0; k <= size; ++k) {
      pmf[k] = model::binomial(size, k) * std::pow(p, k) * std::pow(1.0 - p, size - k);
      running += pmf[k];
      below[k] = running.value();
    }
    // multinomial room counts by conditional binomials, from k = size down
    std::int64_t rooms_left = count;
    for (int k = size; k >= 0 && rooms_left > 0; --k) {
      const std::int64_t rooms = k == 0 ? rooms_left : draw_binomial(rooms_left, ratio(pmf[k], below[k]), rng);
      rooms_left -= rooms;
      if (rooms == 0) continue;
      if (k > size / 2) {
        v += size * rooms - draw_binomial(rooms * (size - k), split.negative_inflexible, rng);
      } else {
        v += draw_binomial(rooms * k, split.positive_inflexible, rng);
      }
    }
  }
  return v;
}

std::int64_t sample_round(const RoomConfig& config, const VariantSpec& variant, std::int64_t u,
                          Engine& rng) {
  switch (variant.kind) {
    case VariantKind::standard:
      return sample_round(config, u, rng);
    case VariantKind::tie_break:
      return sample_round_tiebreak(config, u, variant.k, rng);
    case VariantKind::inflexible:
      return sample_round_inflexible(config, u, variant.a, variant.b, rng);
  }
  return sample_round(config, u, rng);
}

namespace reference {

std::int64_t sample_round_rooms(const RoomConfig& config, const VariantSpec& variant, std::int64_t u,
                                Engine& rng) {
  variant.validate();
  check_count(config, u);
  InflexibleSplit split{0.0, 0.0};
  if (variant.kind == VariantKind::inflexible) split = inflexible_split(config, u, variant.a, variant.b);
  const double p = seat_probability(config, u);

  std::int64_t v = 0;
  for (const auto& [size, count] : config.rooms()) {
    for (std::int64_t room = 0; room < count; ++room) {
      const std::int64_t positives = draw_binomial(size, p, rng);
      const bool won = positives > size / 2;
      const bool tied = 2 * positives == size;
      switch (variant.kind) {
        case VariantKind::standard:
          v += won ? size : 0;
          break;
        case VariantKind::tie_break:
          v += won ? size : (tied ? draw_binomial(size, variant.k, rng) : 0);
          break;
        case VariantKind::inflexible:
          v += won ? size - draw_binomial(size - positives, split.negative_inflexible, rng)
                   : draw_binomial(positives, split.positive_inflexible, rng);
          break;
      }
    }
  }
  return v;
}

}  // namespace reference

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::S_plus:
      return "S_plus";
    case Outcome::S_minus:
      return "S_minus";
    case Outcome::timeout:
      return "timeout";
    case Outcome::victory_positives:
      return "victory_positives";
    case Outcome::victory_negatives:
      return "victory_negatives";
  }
  return "timeout";
}

Outcome outcome_from_string(const std::string& name) {
  for (Outcome o : {Outcome::S_plus, Outcome::S_minus, Outcome::timeout, Outcome::victory_positives,
                    Outcome::victory_negatives}) {
    if (to_string(o) == name) return o;
  }
  throw DomainError("unknown outcome '" + name + "'");
}

std::int64_t default_max_rounds(std::int64_t n) {
  return 64 * static_cast<std::int64_t>(std::ceil(std::log2(static_cast<double>(n) + 2.0)));
}

VictoryBand victory_band(std::int64_t n, double a, double b) {
  // the epsilon keeps exact products such as 0.1 * 1e5 from rounding up
  auto ceil_seats = [n](double x) {
    return static_cast<std::int64_t>(std::ceil(x * static_cast<double>(n) - 1e-9));
  };
  return {std::max<std::int64_t>(0, ceil_seats(a)), n - std::max<std::int64_t>(0, ceil_seats(b))};
}

std::optional<Outcome> stopping_outcome(std::int64_t n, const VariantSpec& variant, std::int64_t n_plus,
                                        double victory_margin) {
  if (n_plus == 0) return Outcome::S_minus;
  if (n_plus == n) return Outcome::S_plus;
  if (variant.kind == VariantKind::inflexible) {
    const VictoryBand band = victory_band(n, variant.a + victory_margin, variant.b + victory_margin);
    if (n_plus <= band.negatives_win_at) return Outcome::victory_negatives;
    if (n_plus >= band.positives_win_at) return Outcome::victory_positives;
  }
  return std::nullopt;
}

void TrialConfig::validate() const {
  variant.validate();
  if (initial_positive < 0 || initial_positive > config.n()) {
    throw DomainError("start " + std::to_string(initial_positive) + (initial_positive < 0 ? " is negative" : " exceeds n=" + std::to_string(config.n())));
  }
  if (max_rounds < 0) throw DomainError("max_rounds must be at least 1");
  if (!(victory_margin >= 0.0 && victory_margin <= 1.0)) throw DomainError("victory_margin must lie in [0, 1]");
  if (variant.kind == VariantKind::inflexible) {
    const VictoryBand band = victory_band(config.n(), variant.a, variant.b);
    if (initial_positive < band.negatives_win_at || initial_positive > band.positives_win_at) {
      throw DomainError("start must lie in [ceil(a n), n - ceil(b n)] = [" + std::to_string(band.negatives_win_at) +
                        ", " + std::to_string(band.positives_win_at) + "]");
    }
  }
}

std::int64_t TrialConfig::effective_max_rounds() const {
  return max_rounds > 0 ? max_rounds : default_max_rounds(config.n());
}

namespace {

TrialResult run_trial_unchecked(const TrialConfig& tc, std::uint64_t seed) {
  Engine rng(seed);
  const std::int64_t n = tc.config.n();
  const std::int64_t cap = tc.effective_max_rounds();
  TrialResult result;
  std::int64_t x = tc.initial_positive;
  if (tc.record_trajectory) result.trajectory.push_back(x);
  for (std::int64_t t = 0;; ++t) {
    if (auto stop = stopping_outcome(n, tc.variant, x, tc.victory_margin)) {
      result.outcome = *stop;
      result.rounds = t;
      break;
    }
    if (t == cap) {
      result.outcome = Outcome::timeout;
      result.rounds = t;
      break;
    }
    x = sample_round(tc.config, tc.variant, x, rng);
    if (tc.record_trajectory) result.trajectory.push_back(x);
  }
  result.final_positive = x;
  return result;
}

}  // namespace

TrialResult run_trial(const TrialConfig& tc) {
  tc.validate();
  return run_trial_unchecked(tc, tc.seed);
}

std::vector<TrialResult> run_trials(const TrialConfig& tc, std::int64_t trials, int workers) {
  tc.validate();
  if (trials < 1) throw UsageError("trials must be at least 1");
  if (workers < 1) throw UsageError("workers must be at least 1");
  std::vector<TrialResult> results(static_cast<std::size_t>(trials));
#pragma omp parallel for num_threads(workers) schedule(dynamic, 16)
  for (std::int64_t i = 0; i < trials; ++i) {
    results[static_cast<std::size_t>(i)] = run_trial_unchecked(tc, stream_seed(tc.seed, static_cast<std::uint64_t>(i)));
  }
  return results;
}

std::vector<TrialResult> run_trials_serial(const TrialConfig& tc, std::int64_t trials) {
  tc.validate();
  if (trials < 1) throw UsageError("trials must be at least 1");
  std::vector<TrialResult> results;
  results.reserve(static_cast<std::size_t>(trials));
  for (std::int64_t i = 0; i < trials; ++i) {
    results.push_back(run_trial_unchecked(tc, stream_seed(tc.seed, static_cast<std::uint64_t>(i))));
  }
  return results;
}

ConsensusStats summarize(std::span<const TrialResult> results) {
  ConsensusStats s;
  s.trials = static_cast<std::int64_t>(results.size());
  std::int64_t plus = 0, minus = 0, vpos = 0, vneg = 0, timeouts = 0;
  std::vector<std::int64_t> rounds;
  rounds.reserve(results.size());
  for (const auto& r : results) {
    switch (r.outcome) {
      case Outcome::S_plus: ++plus; break;
      case Outcome::S_minus: ++minus; break;
      case Outcome::victory_positives: ++vpos; break;
      case Outcome::victory_negatives: ++vneg; break;
      case Outcome::timeout: ++timeouts; break;
    }
    if (r.outcome != Outcome::timeout) rounds.push_back(r.rounds);
  }
  if (s.trials == 0) return s;
  const auto total = static_cast<double>(s.trials);
  s.freq_S_plus = plus / total;
  s.freq_S_minus = minus / total;
  s.freq_victory_positives = vpos / total;
  s.freq_victory_negatives = vneg / total;
  s.freq_timeout = timeouts / total;
  s.absorbed = static_cast<std::int64_t>(rounds.size());
  if (rounds.empty()) {
    s.rounds_mean = s.rounds_p50 = s.rounds_p95 = s.rounds_max = std::nan("");
    return s;
  }
  std::sort(rounds.begin(), rounds.end());
  std::int64_t sum = 0;
  for (auto r : rounds) sum += r;
  const auto m = rounds.size();
  auto nearest_rank = [&](double q) {
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m)));
    return static_cast<double>(rounds[std::clamp<std::size_t>(rank, 1, m) - 1]);
  };
  s.rounds_mean = static_cast<double>(sum) / static_cast<double>(m);
  s.rounds_p50 = nearest_rank(0.50);
  s.rounds_p95 = nearest_rank(0.95);
  s.rounds_max = static_cast<double>(rounds.back());
  return s;
}

ConsensusStats run_ensemble(const TrialConfig& tc, std::int64_t trials, int workers) {
  const auto results = run_trials(tc, trials, workers);
  return summarize(results);
}

ConsensusStats run_ensemble_serial(const TrialConfig& tc, std::int64_t trials) {
  const auto results = run_trials_serial(tc, trials);
  return summarize(results);
}

void to_json(nlohmann::json& j, const TrialConfig& tc) {
  j = nlohmann::json{{"rooms", nlohmann::json(tc.config).at("rooms")},
                     {"variant", tc.variant},
                     {"initial_positive", tc.initial_positive},
                     {"seed", tc.seed},
                     {"max_rounds", tc.effective_max_rounds()},
                     {"record_trajectory", tc.record_trajectory}};
  if (tc.victory_margin != 0.0) j["victory_margin"] = tc.victory_margin;
}

TrialConfig trial_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("trial configuration must be a JSON object");
  TrialConfig tc{room_config_from_json(j.contains("config") ? j.at("config") : j)};
  if (j.contains("variant")) tc.variant = variant_from_json(j.at("variant"));
  if (!j.contains("initial_positive") || !j.at("initial_positive").is_number_integer()) {
    throw DomainError("trial configuration needs an integer \"initial_positive\"");
  }
  tc.initial_positive = j.at("initial_positive").get<std::int64_t>();
  tc.seed = j.value("seed", std::uint64_t{0});
  tc.max_rounds = j.value("max_rounds", std::int64_t{0});
  tc.record_trajectory = j.value("record_trajectory", false);
  tc.victory_margin = j.value("victory_margin", 0.0);
  tc.validate();
  return tc;
}

void to_json(nlohmann::json& j, const TrialResult& result) {
  j = nlohmann::json{{"outcome", to_string(result.outcome)},
                     {"rounds", result.rounds},
                     {"final_positive", result.final_positive}};
  if (!result.trajectory.empty()) j["trajectory"] = result.trajectory;
}

void to_json(nlohmann::json& j, const ConsensusStats& s) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"trials", s.trials},
                     {"absorbed", s.absorbed},
                     {"freq_S_plus", s.freq_S_plus},
                     {"freq_S_minus", s.freq_S_minus},
                     {"freq_victory_positives", s.freq_victory_positives},
                     {"freq_victory_negatives", s.freq_victory_negatives},
                     {"freq_timeout", s.freq_timeout},
                     {"rounds_mean", num(s.rounds_mean)},
                     {"rounds_p50", num(s.rounds_p50)},
                     {"rounds_p95", num(s.rounds_p95)},
                     {"rounds_max", num(s.rounds_max)}};
}

void write_trajectories_csv(std::ostream& out, std::span<const TrialResult> results) {
  out << "trial_id,t,n_plus\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& traj = results[i].trajectory;
    for (std::size_t t = 0; t < traj.size(); ++t) out << i << ',' << t << ',' << traj[t] << '\n';
  }
}

void write_stats_csv(std::ostream& out, const ConsensusStats& s) {
  using csv::format_double;
  out << "trials,absorbed,freq_S_plus,freq_S_minus,freq_victory_positives,freq_victory_negatives,"
         "freq_timeout,rounds_mean,rounds_p50,rounds_p95,rounds_max\n";
  out << s.trials << ',' << s.absorbed << ',' << format_double(s.freq_S_plus) << ','
      << format_double(s.freq_S_minus) << ',' << format_double(s.freq_victory_positives) << ','
      << format_double(s.freq_victory_negatives) << ',' << format_double(s.freq_timeout) << ','
      << format_double(s.rounds_mean) << ',' << format_double(s.rounds_p50) << ','
      << format_double(s.rounds_p95) << ',' << format_double(s.rounds_max) << '\n';
}

}  // namespace galam::process
