#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "galam/room_config.hpp"

/// Stochastic simulation of the Galam process: one-round samplers for the
/// standard model and its variants, a trial runner to absorption, and
/// OpenMP-parallel ensembles whose results do not depend on the number of
/// worker threads.
namespace galam::process {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `index` derived from a master seed:
///   stream_seed(seed, i) = splitmix64(seed ^ splitmix64(i)).
/// Ensemble trial i and sweep point i use stream_seed(seed, i).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

/// Binomial(trials, p) draw with exact handling of p <= 0 and p >= 1.
std::int64_t draw_binomial(std::int64_t trials, double p, Engine& rng);

/// One Galam round from u positive seats: every seat is positive with
/// probability u/n, each room adopts its strict majority (ties negative).
/// Returns the number of positive seats afterwards. Throws DomainError when
/// u is outside [0, n].
std::int64_t sample_round(const RoomConfig& config, std::int64_t u, Engine& rng);

/// Room-wise majority round: exactly n_plus positive individuals are placed
/// on seats by a uniform random permutation, then rooms resolve by majority.
std::int64_t sample_round_matching(const RoomConfig& config, std::int64_t n_plus, Engine& rng);

/// Tie-break variant: the seats of an exactly tied room each turn positive
/// independently with probability k.
std::int64_t sample_round_tiebreak(const RoomConfig& config, std::int64_t u, double k, Engine& rng);

/// Inflexible variant: each seat is positive inflexible, positive floater,
/// negative inflexible or negative floater with probabilities
/// a, u/n - a, b, 1 - u/n - b. Rooms resolve by majority; inflexible seats
/// keep their opinion. Valid for floor(a n) <= u <= n - floor(b n).
std::int64_t sample_round_inflexible(const RoomConfig& config, std::int64_t u, double a, double b,
                                     Engine& rng);

/// Dispatches on the variant kind.
std::int64_t sample_round(const RoomConfig& config, const VariantSpec& variant, std::int64_t u,
                          Engine& rng);

namespace reference {
/// Serial per-room sampler: one Binomial(size, u/n) draw per room followed by
/// the variant's room rule. Same distribution as the aggregated samplers
/// above, O(number of rooms) per round. Kept for testing and benchmarking.
std::int64_t sample_round_rooms(const RoomConfig& config, const VariantSpec& variant, std::int64_t u,
                                Engine& rng);
}  // namespace reference

enum class Outcome { S_plus, S_minus, timeout, victory_positives, victory_negatives };

std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& name);

/// 64 * ceil(log2(n + 2)).
std::int64_t default_max_rounds(std::int64_t n);

struct TrialConfig {
  RoomConfig config;
  VariantSpec variant{};
  std::int64_t initial_positive = 0;
  std::uint64_t seed = 0;
  std::int64_t max_rounds = 0;  ///< 0 selects default_max_rounds(n)
  bool record_trajectory = false;
  /// Inflexible variant only: widens the stopping band to
  /// n_+ <= ceil((a + margin) n) and n_- <= ceil((b + margin) n).
  double victory_margin = 0.0;

  /// Throws DomainError when the start count or variant is invalid.
  void validate() const;
  std::int64_t effective_max_rounds() const;

  friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

/// Inflexible stopping band: ceil(a n) and n - ceil(b n).
struct VictoryBand {
  std::int64_t negatives_win_at;  ///< n_+ <= this declares victory_negatives
  std::int64_t positives_win_at;  ///< n_+ >= this declares victory_positives
};
VictoryBand victory_band(std::int64_t n, double a, double b);

/// Outcome if n_plus is a stopping state for the variant, else nullopt.
std::optional<Outcome> stopping_outcome(std::int64_t n, const VariantSpec& variant, std::int64_t n_plus,
                                        double victory_margin = 0.0);

struct TrialResult {
  Outcome outcome = Outcome::timeout;
  std::int64_t rounds = 0;
  std::int64_t final_positive = 0;
  std::vector<std::int64_t> trajectory;  ///< n_+(0), n_+(1), ... when recorded

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Iterates the variant's sampler from initial_positive until a stopping
/// state or max_rounds. Deterministic in tc.seed.
TrialResult run_trial(const TrialConfig& tc);

struct ConsensusStats {
  std::int64_t trials = 0;
  std::int64_t absorbed = 0;  ///< non-timeout trials, the population of the round statistics
  double freq_S_plus = 0.0;
  double freq_S_minus = 0.0;
  double freq_victory_positives = 0.0;
  double freq_victory_negatives = 0.0;
  double freq_timeout = 0.0;
  double rounds_mean = 0.0;
  double rounds_p50 = 0.0;
  double rounds_p95 = 0.0;
  double rounds_max = 0.0;

  friend bool operator==(const ConsensusStats&, const ConsensusStats&) = default;
};

/// Order-independent aggregate; percentiles are nearest-rank.
ConsensusStats summarize(std::span<const TrialResult> results);

/// `trials` independent trials, trial i seeded with stream_seed(tc.seed, i),
/// spread over `workers` OpenMP threads. Output is identical for any
/// worker count.
std::vector<TrialResult> run_trials(const TrialConfig& tc, std::int64_t trials, int workers);
ConsensusStats run_ensemble(const TrialConfig& tc, std::int64_t trials, int workers);

/// Single-threaded references for run_trials / run_ensemble.
std::vector<TrialResult> run_trials_serial(const TrialConfig& tc, std::int64_t trials);
ConsensusStats run_ensemble_serial(const TrialConfig& tc, std::int64_t trials);

void to_json(nlohmann::json& j, const TrialConfig& tc);
TrialConfig trial_config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const TrialResult& result);
void to_json(nlohmann::json& j, const ConsensusStats& stats);

/// trial_id,t,n_plus rows.
void write_trajectories_csv(std::ostream& out, std::span<const TrialResult> results);
/// Header line plus one data row.
void write_stats_csv(std::ostream& out, const ConsensusStats& stats);

}  // namespace galam::process
