#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

namespace galam {

/// Largest supported room size; binomial coefficients up to this order are
/// tabulated exactly.
inline constexpr int kMaxRoomSize = 64;

/// Multiset of room sizes {size -> count}. Counts are the source of truth;
/// the seat fractions a_i = i * r_i / n are always derived from them.
///
/// Invariants: every size is in [2, kMaxRoomSize], every stored count is
/// positive (zero counts are dropped on construction) and n >= 2.
class RoomConfig {
 public:
  /// Throws DomainError on size < 2, size > kMaxRoomSize, negative counts or
  /// an empty configuration.
  explicit RoomConfig(const std::map<int, std::int64_t>& room_counts);

  /// Uniform configuration: `count` rooms of `size` seats.
  static RoomConfig uniform(int size, std::int64_t count);

  /// Builds the configuration closest to the target seat fractions at `n`
  /// seats by largest-remainder rounding of room counts. The achieved n can
  /// differ from the request by less than the largest room size.
  static RoomConfig from_fractions(const std::map<int, double>& fractions, std::int64_t n);

  const std::map<int, std::int64_t>& rooms() const { return rooms_; }
  std::int64_t n() const { return n_; }
  int max_size() const { return rooms_.rbegin()->first; }
  std::int64_t room_count() const;

  /// i * r_i, the number of seats in rooms of size i (0 if absent).
  std::int64_t seats_in(int size) const;
  /// a_i = i * r_i / n.
  double fraction(int size) const;
  std::map<int, double> fractions() const;

  bool has_size(int size) const { return rooms_.count(size) != 0; }
  bool all_even() const;

  /// Same seat fractions rescaled to about `n` seats.
  RoomConfig rescaled(std::int64_t n) const;

  /// Short stable identifier such as "3x100-4x25", used in file names.
  std::string digest() const;

  friend bool operator==(const RoomConfig&, const RoomConfig&) = default;

 private:
  std::map<int, std::int64_t> rooms_;
  std::int64_t n_ = 0;
};

/// Which dynamics drive a round.
enum class VariantKind { standard, tie_break, inflexible };

struct VariantSpec {
  VariantKind kind = VariantKind::standard;
  double k = 0.0;  ///< tie_break: probability a seat of a tied room turns positive
  double a = 0.0;  ///< inflexible: positive inflexible seat probability
  double b = 0.0;  ///< inflexible: negative inflexible seat probability

  static VariantSpec standard() { return {}; }
  static VariantSpec tie_break(double k);
  static VariantSpec inflexible(double a, double b);

  /// Throws DomainError unless k, a, b are in [0, 1] and a + b <= 1.
  void validate() const;

  friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

std::string to_string(VariantKind kind);
VariantKind variant_kind_from_string(const std::string& name);

// JSON: {"rooms": {"<size>": <count>, ...}}
void to_json(nlohmann::json& j, const RoomConfig& config);
/// Accepts {"rooms": {...}}, {"fractions": {...}, "n": N}, or a bare
/// {"<size>": <count>} map.
RoomConfig room_config_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const VariantSpec& variant);
VariantSpec variant_from_json(const nlohmann::json& j);

}  // namespace galam
