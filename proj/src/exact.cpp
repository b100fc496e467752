#include "galam/exact.hpp"

#include <bit>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "galam/csv.hpp"
#include "galam/errors.hpp"
#include "galam/model.hpp"

namespace galam::exact {
namespace {

void check_count(const RoomConfig& config, std::int64_t u) {
  if (u < 0 || u > config.n()) {
    throw DomainError("u=" + std::to_string(u) + " outside [0, n=" + std::to_string(config.n()) + "]");
  }
}

void check_cap(const RoomConfig& config, std::int64_t max_n) {
  if (config.n() > max_n) {
    throw ResourceError("exact chain limited to n <= " + std::to_string(max_n) + ", got n=" +
                        std::to_string(config.n()));
  }
}

constexpr double kResidualTolerance = 1e-9;

struct TransientSystem {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::MatrixXd a;  // I - Q on states 1..n-1
};

TransientSystem factor(const TransitionMatrix& m) {
  const std::int64_t n = m.n();
  const auto is_point_mass = [&](std::int64_t u) {
    const auto r = m.row(u);
    for (std::int64_t v = 0; v <= n; ++v) {
      if (r[static_cast<std::size_t>(v)] != (v == u ? 1.0 : 0.0)) return false;
    }
    return true;
  };
  if (!is_point_mass(0) || !is_point_mass(n)) {
    throw DomainError("rows 0 and n must be absorbing point masses");
  }
  const Eigen::Index size = n - 1;
  Eigen::MatrixXd a(size, size);
  for (Eigen::Index r = 0; r < size; ++r) {
    for (Eigen::Index c = 0; c < size; ++c) a(r, c) = (r == c ? 1.0 : 0.0) - m.at(r + 1, c + 1);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (size > 0 && !(std::fabs(lu.determinant()) > 0.0)) throw NumericError("transient system is singular");
  return {std::move(lu), std::move(a)};
}

std::vector<double> solve(const TransientSystem& sys, const Eigen::VectorXd& rhs, double at_zero, double at_n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(rhs.size() + 2));
  out.push_back(at_zero);
  if (rhs.size() > 0) {
    const Eigen::VectorXd x = sys.lu.solve(rhs);
    const double residual = (sys.a * x - rhs).cwiseAbs().maxCoeff();
    if (!x.allFinite() || !(residual <= kResidualTolerance)) {
      throw NumericError("linear solve residual " + std::to_string(residual) + " exceeds tolerance");
    }
    out.insert(out.end(), x.data(), x.data() + x.size());
  }
  out.push_back(at_n);
  return out;
}

Eigen::VectorXd to_top_rhs(const TransitionMatrix& m) {
  const std::int64_t n = m.n();
  Eigen::VectorXd rhs(n - 1);
  for (std::int64_t u = 1; u < n; ++u) rhs(u - 1) = m.at(u, n);
  return rhs;
}

}  // namespace

std::vector<double> transition_row(const RoomConfig& config, std::int64_t u) {
  check_count(config, u);
  const std::int64_t n = config.n();
  const double p = static_cast<double>(u) / static_cast<double>(n);
  std::vector<double> dist(static_cast<std::size_t>(n + 1), 0.0);
  dist[0] = 1.0;
  std::int64_t reach = 0;  // largest seat total with nonzero mass so far
  for (const auto& [size, count] : config.rooms()) {
    const double q = model::f_single(size, p);
    for (std::int64_t room = 0; room < count; ++room) {
      for (std::int64_t v = reach; v >= 0; --v) {
        const double mass = dist[static_cast<std::size_t>(v)];
        dist[static_cast<std::size_t>(v + size)] += mass * q;
        dist[static_cast<std::size_t>(v)] = mass * (1.0 - q);
      }
      reach += size;
    }
  }
  return dist;
}

std::vector<double> brute_force_row(const RoomConfig& config, std::int64_t u) {
  if (config.n() > kBruteForceMaxN) {
    throw ResourceError("brute-force enumeration limited to n <= " + std::to_string(kBruteForceMaxN));
  }
  check_count(config, u);
  const auto n = static_cast<int>(config.n());
  const double p = static_cast<double>(u) / n;

  std::vector<std::uint32_t> room_masks;
  std::vector<int> room_sizes;
  int offset = 0;
  for (const auto& [size, count] : config.rooms()) {
    for (std::int64_t r = 0; r < count; ++r) {
      room_masks.push_back(((1u << size) - 1u) << offset);
      room_sizes.push_back(size);
      offset += size;
    }
  }

  std::vector<double> dist(static_cast<std::size_t>(n + 1), 0.0);
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    const int positives = std::popcount(bits);
    const double weight = std::pow(p, positives) * std::pow(1.0 - p, n - positives);
    if (weight == 0.0) continue;
    int v = 0;
    for (std::size_t r = 0; r < room_masks.size(); ++r) {
      if (std::popcount(bits & room_masks[r]) > room_sizes[r] / 2) v += room_sizes[r];
    }
    dist[static_cast<std::size_t>(v)] += weight;
  }
  return dist;
}

TransitionMatrix::TransitionMatrix(RoomConfig config, std::vector<double> entries)
    : config_(std::move(config)), entries_(std::move(entries)) {
  const auto side = static_cast<std::size_t>(config_.n() + 1);
  if (entries_.size() != side * side) throw DomainError("transition matrix has the wrong number of entries");
}

std::span<const double> TransitionMatrix::row(std::int64_t u) const {
  const auto side = static_cast<std::size_t>(n() + 1);
  return std::span<const double>(entries_).subspan(static_cast<std::size_t>(u) * side, side);
}

TransitionMatrix transition_matrix(const RoomConfig& config, std::int64_t max_n) {
  check_cap(config, max_n);
  const std::int64_t n = config.n();
  const auto side = static_cast<std::size_t>(n + 1);
  std::vector<double> entries(side * side);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t u = 0; u <= n; ++u) {
    const auto row = transition_row(config, u);
    std::copy(row.begin(), row.end(), entries.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(u) * side));
  }
  return TransitionMatrix(config, std::move(entries));
}

TransitionMatrix transition_matrix_serial(const RoomConfig& config, std::int64_t max_n) {
  check_cap(config, max_n);
  std::vector<double> entries;
  for (std::int64_t u = 0; u <= config.n(); ++u) {
    const auto row = transition_row(config, u);
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return TransitionMatrix(config, std::move(entries));
}

std::vector<double> absorption_probabilities(const TransitionMatrix& m) {
  return solve(factor(m), to_top_rhs(m), 0.0, 1.0);
}

std::vector<double> expected_absorption_time(const TransitionMatrix& m) {
  return solve(factor(m), Eigen::VectorXd::Ones(m.n() - 1), 0.0, 0.0);
}

AbsorptionReport absorption_report(const TransitionMatrix& m) {
  const TransientSystem sys = factor(m);
  return {solve(sys, to_top_rhs(m), 0.0, 1.0), solve(sys, Eigen::VectorXd::Ones(m.n() - 1), 0.0, 0.0)};
}

void to_json(nlohmann::json& j, const TransitionMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::int64_t u = 0; u <= m.n(); ++u) {
    const auto r = m.row(u);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j = nlohmann::json{{"n", m.n()}, {"rooms", nlohmann::json(m.config()).at("rooms")}, {"rows", rows}};
}

void to_json(nlohmann::json& j, const AbsorptionReport& r) {
  j = nlohmann::json{{"prob_S_plus", r.prob_S_plus}, {"expected_time", r.expected_time}};
}

void write_matrix_csv(std::ostream& out, const TransitionMatrix& m) {
  csv::write_meta(out, "n", std::to_string(m.n()));
  csv::write_meta(out, "rooms", nlohmann::json(m.config()).at("rooms").dump());
  out << 'u';
  for (std::int64_t v = 0; v <= m.n(); ++v) out << ',' << v;
  out << '\n';
  for (std::int64_t u = 0; u <= m.n(); ++u) {
    out << u;
    for (double x : m.row(u)) out << ',' << csv::format_double(x);
    out << '\n';
  }
}

void write_absorption_csv(std::ostream& out, const RoomConfig& config, const AbsorptionReport& r) {
  csv::write_meta(out, "n", std::to_string(config.n()));
  csv::write_meta(out, "rooms", nlohmann::json(config).at("rooms").dump());
  out << "u,prob_S_plus,expected_time\n";
  for (std::size_t u = 0; u < r.prob_S_plus.size(); ++u) {
    out << u << ',' << csv::format_double(r.prob_S_plus[u]) << ',' << csv::format_double(r.expected_time[u])
        << '\n';
  }
}

}  // namespace galam::exact
