#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "galam/room_config.hpp"

/// Exact finite-n analysis of the Galam chain on states {0, ..., n}:
/// transition rows, absorption probabilities and expected absorption times.
/// This module is the oracle the stochastic code is tested against.
namespace galam::exact {

inline constexpr std::int64_t kDefaultMaxN = 2048;
inline constexpr std::int64_t kBruteForceMaxN = 16;

/// Distribution of the next positive-seat count given u positives. Computed
/// by convolving the per-room outcomes {0 w.p. 1 - f_i(u/n), i w.p. f_i(u/n)}
/// over cumulative seat counts, O(rooms * n).
std::vector<double> transition_row(const RoomConfig& config, std::int64_t u);

/// Same distribution by enumerating all 2^n seat assignments. n <= 16.
std::vector<double> brute_force_row(const RoomConfig& config, std::int64_t u);

/// Dense row-stochastic matrix, row u = distribution of v.
class TransitionMatrix {
 public:
  TransitionMatrix(RoomConfig config, std::vector<double> entries);

  std::int64_t n() const { return config_.n(); }
  const RoomConfig& config() const { return config_; }
  std::span<const double> row(std::int64_t u) const;
  double at(std::int64_t u, std::int64_t v) const { return row(u)[static_cast<std::size_t>(v)]; }

 private:
  RoomConfig config_;
  std::vector<double> entries_;  // (n+1) x (n+1), row-major
};

/// All rows, computed in parallel over u. Throws ResourceError if n > max_n.
TransitionMatrix transition_matrix(const RoomConfig& config, std::int64_t max_n = kDefaultMaxN);
/// Single-threaded reference for transition_matrix.
TransitionMatrix transition_matrix_serial(const RoomConfig& config, std::int64_t max_n = kDefaultMaxN);

/// P(absorb in S_+ | start u) for every u. Solves x = P x with x_0 = 0,
/// x_n = 1 by partial-pivoting LU on the transient block.
std::vector<double> absorption_probabilities(const TransitionMatrix& m);

/// Expected rounds to absorption: t = 1 + P t on transient states, 0 at 0 and n.
std::vector<double> expected_absorption_time(const TransitionMatrix& m);

struct AbsorptionReport {
  std::vector<double> prob_S_plus;
  std::vector<double> expected_time;
};

/// Both vectors from one factorization.
AbsorptionReport absorption_report(const TransitionMatrix& m);

void to_json(nlohmann::json& j, const TransitionMatrix& m);
void to_json(nlohmann::json& j, const AbsorptionReport& r);

/// "# n=..." and "# rooms=..." header, a column header "u,0,1,...,n", then one
/// row per u.
void write_matrix_csv(std::ostream& out, const TransitionMatrix& m);
/// "u,prob_S_plus,expected_time" rows.
void write_absorption_csv(std::ostream& out, const RoomConfig& config, const AbsorptionReport& r);

}  // namespace galam::exact
