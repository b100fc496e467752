#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "galam/room_config.hpp"

/// Deterministic mathematics of the Galam process: expectation polynomials,
/// their derivatives, fixed points and thresholds, drift iterators, and the
/// expectation formulas of the tie-break and inflexible variants.
///
/// Everything here is a pure function of its arguments.
namespace galam::model {

/// Exact C(i, j) for 0 <= j <= i <= kMaxRoomSize (0 outside that range).
double binomial(int i, int j);

/// Probability that a room of `size` seats ends positive when every seat is
/// positive independently with probability p (strict majority, ties negative):
///   f_i(p) = sum_{j > floor(i/2)} C(i,j) p^j (1-p)^(i-j).
double f_single(int size, double p);

/// Probability that a room of `size` is exactly tied (0 for odd sizes).
double tie_single(int size, double p);

/// d f_i / dp = (floor(i/2)+1) C(i, floor(i/2)+1) p^floor(i/2) (1-p)^(i-floor(i/2)-1).
double f_prime_single(int size, double p);

/// f(p) = E[P_+^p] = sum_i a_i f_i(p). Exactly 0 at p = 0 and 1 at p = 1.
double expected_positive(const RoomConfig& config, double p);

/// E[P_-^p] with p the negative seat probability:
///   sum_i a_i sum_{j >= ceil(i/2)} C(i,j) p^j (1-p)^(i-j).
double expected_negative(const RoomConfig& config, double p);

/// h(p) = f(p) - p.
double h(const RoomConfig& config, double p);

/// f'(p) = sum_i a_i f_i'(p).
double f_prime(const RoomConfig& config, double p);

struct FixedPointReport {
  std::vector<double> roots;                         // strictly increasing
  std::vector<std::pair<double, double>> brackets;  // one per root
  bool unique = false;
  double grid_resolution = 0.0;
  double tolerance = 0.0;
};

inline constexpr double kDefaultGridResolution = 1e-4;
inline constexpr double kDefaultRootTolerance = 1e-12;

/// Scans h on the interior grid {k * grid_resolution}, brackets every sign
/// change (grid points where h is exactly zero are roots with a degenerate
/// bracket) and bisects each bracket down to `tolerance` width.
///
/// Throws std::invalid_argument when grid_resolution > 1e-3 or tolerance is
/// below 10 machine epsilons. Tangential roots (no sign change) are not
/// reported; an all-size-2 configuration yields an empty report.
FixedPointReport find_fixed_points(const RoomConfig& config,
                                   double grid_resolution = kDefaultGridResolution,
                                   double tolerance = kDefaultRootTolerance);

/// Same scan-and-bisect for the fixed points of an arbitrary map g on the
/// open interval (lo, hi); used for the variant expectation maps.
FixedPointReport find_fixed_points_of(const std::function<double(double)>& g, double lo, double hi,
                                      double grid_resolution = kDefaultGridResolution,
                                      double tolerance = kDefaultRootTolerance);

/// Roots of the report at which g(p) - p changes sign from negative to
/// positive (unstable fixed points, i.e. thresholds).
std::vector<double> upcrossings(const std::function<double(double)>& g, const FixedPointReport& report);

/// True when h < 0 on grid points of (0, alpha) and h > 0 on grid points of
/// (alpha, 1), skipping points within `tolerance` of alpha.
bool sign_pattern_holds(const RoomConfig& config, double alpha,
                        double grid_resolution = kDefaultGridResolution,
                        double tolerance = 1e-9);

/// Raised by threshold() when h has zero or several interior roots.
class NoUniqueThreshold : public std::runtime_error {
 public:
  explicit NoUniqueThreshold(FixedPointReport report);
  const FixedPointReport& report() const { return report_; }

 private:
  FixedPointReport report_;
};

/// The unique fixed point alpha of f in (0,1): starting below it the process
/// goes to S_-, above it to S_+. Throws NoUniqueThreshold otherwise.
double threshold(const RoomConfig& config,
                 double grid_resolution = kDefaultGridResolution,
                 double tolerance = kDefaultRootTolerance);

/// Tie-break variant: a tied room's seats each turn positive with probability k.
///   sum_i a_i f_i(p) + k sum_m a_2m C(2m,m) p^m (1-p)^m
double expected_positive_tiebreak(const RoomConfig& config, double p, double k);

/// Inflexible variant (Galam-Jacobs) with positive/negative inflexible seat
/// probabilities a and b. Domain: a + b <= 1 and a <= p <= 1 - b.
double expected_positive_inflexible(const RoomConfig& config, double p, double a, double b);

/// p -> expected positive share for the variant's round rule.
std::function<double(double)> expectation_map(const RoomConfig& config, const VariantSpec& variant);

enum class DriftDirection { lower, upper };

/// Power-law drift Q(p) = K p^ell iterated as Q^t = (1 -/+ delta) Q(Q^(t-1)).
struct DriftSpec {
  double K = 1.0;
  double ell = 1.0;
  double delta = 0.0;
  DriftDirection direction = DriftDirection::lower;

  void validate() const;
};

struct DriftValue {
  double value = 0.0;
  bool clamped = false;  ///< iterate left [0, 1] (overflow or underflow) and was clamped
};

/// Recursive iterate Q^t(b) (lower) or R^t(b) (upper).
DriftValue drift_iterate(const DriftSpec& spec, double b, int t);

/// (K (1 -/+ delta))^(sum_{j<t} ell^j) * b^(ell^t), equal to the unclamped
/// iterate for a power law.
double drift_closed_form(const DriftSpec& spec, double b, int t);

void to_json(nlohmann::json& j, const FixedPointReport& report);
FixedPointReport fixed_point_report_from_json(const nlohmann::json& j);

}  // namespace galam::model
