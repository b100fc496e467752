#include "galam/room_config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "galam/errors.hpp"

namespace galam {
namespace {

int parse_size_key(const std::string& key) {
  std::size_t used = 0;
  int size = 0;
  try {
    size = std::stoi(key, &used);
  } catch (const std::exception&) {
    throw DomainError("room size key '" + key + "' is not an integer");
  }
  if (used != key.size()) throw DomainError("room size key '" + key + "' is not an integer");
  return size;
}

}  // namespace

RoomConfig::RoomConfig(const std::map<int, std::int64_t>& room_counts) {
  for (const auto& [size, count] : room_counts) {
    if (size == 1) throw DomainError("room size 1 forbidden (rooms need at least two seats)");
    if (size < 2) throw DomainError("room size " + std::to_string(size) + " is invalid");
    if (size > kMaxRoomSize) {
      throw DomainError("room size " + std::to_string(size) + " exceeds the supported maximum " +
                        std::to_string(kMaxRoomSize));
    }
    if (count < 0) throw DomainError("negative count for room size " + std::to_string(size));
    if (count == 0) continue;
    rooms_.emplace(size, count);
    n_ += static_cast<std::int64_t>(size) * count;
  }
  if (rooms_.empty()) throw DomainError("configuration has no seats");
}

RoomConfig RoomConfig::uniform(int size, std::int64_t count) { return RoomConfig({{size, count}}); }

RoomConfig RoomConfig::from_fractions(const std::map<int, double>& fractions, std::int64_t n) {
  if (n < 2) throw DomainError("target n must be at least 2");
  double total = 0.0;
  for (const auto& [size, a] : fractions) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("seat fractions must be finite and nonnegative");
    if (size < 2) throw DomainError(size == 1 ? "room size 1 forbidden (rooms need at least two seats)"
                                              : "room size " + std::to_string(size) + " is invalid");
    total += a;
  }
  if (!(total > 0.0)) throw DomainError("seat fractions sum to zero");

  struct Quota {
    int size;
    double remainder;
  };
  std::map<int, std::int64_t> counts;
  std::vector<Quota> quotas;
  std::int64_t used = 0;
  for (const auto& [size, a] : fractions) {
    const double rooms = (a / total) * static_cast<double>(n) / size;
    const auto whole = static_cast<std::int64_t>(std::floor(rooms));
    counts[size] = whole;
    used += whole * size;
    quotas.push_back({size, rooms - static_cast<double>(whole)});
  }
  std::stable_sort(quotas.begin(), quotas.end(),
                   [](const Quota& x, const Quota& y) { return x.remainder > y.remainder; });
  std::int64_t left = n - used;
  for (const auto& q : quotas) {
    if (q.remainder > 0.0 && q.size <= left) {
      ++counts[q.size];
      left -= q.size;
    }
  }
  return RoomConfig(counts);
}

std::int64_t RoomConfig::room_count() const {
  std::int64_t total = 0;
  for (const auto& [size, count] : rooms_) total += count;
  return total;
}

std::int64_t RoomConfig::seats_in(int size) const {
  auto it = rooms_.find(size);
  return it == rooms_.end() ? 0 : static_cast<std::int64_t>(size) * it->second;
}

double RoomConfig::fraction(int size) const {
  return static_cast<double>(seats_in(size)) / static_cast<double>(n_);
}

std::map<int, double> RoomConfig::fractions() const {
  std::map<int, double> out;
  for (const auto& [size, count] : rooms_) out[size] = fraction(size);
  return out;
}

bool RoomConfig::all_even() const {
  return std::all_of(rooms_.begin(), rooms_.end(), [](const auto& kv) { return kv.first % 2 == 0; });
}

RoomConfig RoomConfig::rescaled(std::int64_t n) const { return from_fractions(fractions(), n); }

std::string RoomConfig::digest() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [size, count] : rooms_) {
    if (!first) out << '-';
    out << size << 'x' << count;
    first = false;
  }
  return out.str();
}

VariantSpec VariantSpec::tie_break(double k) {
  VariantSpec v{VariantKind::tie_break, k, 0.0, 0.0};
  v.validate();
  return v;
}

VariantSpec VariantSpec::inflexible(double a, double b) {
  VariantSpec v{VariantKind::inflexible, 0.0, a, b};
  v.validate();
  return v;
}

void VariantSpec::validate() const {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(k)) throw DomainError("tie-break probability k must lie in [0, 1]");
  if (!unit(a) || !unit(b)) throw DomainError("inflexible probabilities a, b must lie in [0, 1]");
  if (a + b > 1.0) throw DomainError("inflexible probabilities must satisfy a + b <= 1");
}

std::string to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::standard:
      return "standard";
    case VariantKind::tie_break:
      return "tie_break";
    case VariantKind::inflexible:
      return "inflexible";
  }
  return "standard";
}

VariantKind variant_kind_from_string(const std::string& name) {
  if (name == "standard") return VariantKind::standard;
  if (name == "tie_break" || name == "tie-break") return VariantKind::tie_break;
  if (name == "inflexible") return VariantKind::inflexible;
  throw DomainError("unknown variant '" + name + "'");
}

void to_json(nlohmann::json& j, const RoomConfig& config) {
  nlohmann::json rooms = nlohmann::json::object();
  for (const auto& [size, count] : config.rooms()) rooms[std::to_string(size)] = count;
  j = nlohmann::json{{"rooms", rooms}};
}

RoomConfig room_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("room configuration must be a JSON object");

  if (j.contains("fractions")) {
    const auto& fr = j.at("fractions");
    if (!fr.is_object()) throw DomainError("\"fractions\" must be an object");
    if (!j.contains("n") || !j.at("n").is_number_integer()) {
      throw DomainError("\"fractions\" requires an integer \"n\"");
    }
    std::map<int, double> fractions;
    for (const auto& [key, value] : fr.items()) {
      if (!value.is_number()) throw DomainError("fraction for size " + key + " is not a number");
      fractions[parse_size_key(key)] = value.get<double>();
    }
    return RoomConfig::from_fractions(fractions, j.at("n").get<std::int64_t>());
  }

  const nlohmann::json& rooms = j.contains("rooms") ? j.at("rooms") : j;
  if (!rooms.is_object()) throw DomainError("\"rooms\" must be an object");
  std::map<int, std::int64_t> counts;
  for (const auto& [key, value] : rooms.items()) {
    if (!value.is_number_integer()) throw DomainError("count for size " + key + " is not an integer");
    counts[parse_size_key(key)] = value.get<std::int64_t>();
  }
  return RoomConfig(counts);
}

void to_json(nlohmann::json& j, const VariantSpec& variant) {
  j = nlohmann::json{{"kind", to_string(variant.kind)}};
  if (variant.kind == VariantKind::tie_break) j["k"] = variant.k;
  if (variant.kind == VariantKind::inflexible) {
    j["a"] = variant.a;
    j["b"] = variant.b;
  }
}

VariantSpec variant_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("variant must be a JSON object");
  VariantSpec v;
  v.kind = variant_kind_from_string(j.value("kind", std::string("standard")));
  v.k = j.value("k", 0.0);
  v.a = j.value("a", 0.0);
  v.b = j.value("b", 0.0);
  v.validate();
  return v;
}

}  // namespace galam
