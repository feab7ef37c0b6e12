// Shared vocabulary: vector aliases, error types, and small geometric helpers.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace relu_lab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IndexSet = std::vector<int>;

enum class ErrorKind {
  precondition,
  assumption_violation,
  numerical_failure,
  generation_failure,
  unsupported,
  construction_unavailable,
  internal,
  io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::assumption_violation: return "assumption-violation";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::generation_failure: return "generation-failure";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::construction_unavailable: return "construction-unavailable";
    case ErrorKind::internal: return "internal-error";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class LabError : public std::runtime_error {
 public:
  LabError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw LabError(kind, msg);
}

inline Vec normalized(const Vec& v) {
  const double n = v.norm();
  return n > 0.0 ? Vec(v / n) : Vec::Zero(v.size());
}

// Cosine of the angle between two nonzero vectors, clamped to [-1, 1].
inline double cos_angle(const Vec& a, const Vec& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

inline double angle(const Vec& a, const Vec& b) { return std::acos(cos_angle(a, b)); }

inline double sin_angle(const Vec& a, const Vec& b) {
  const double c = cos_angle(a, b);
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

inline bool all_finite(const Mat& m) { return m.allFinite(); }

// splitmix64 finaliser; used to derive independent seeds from tuples.
inline std::uint64_t mix_seed(std::uint64_t h, std::uint64_t v) {
  std::uint64_t z = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <class... Ts>
std::uint64_t derive_seed(std::uint64_t base, Ts... parts) {
  std::uint64_t h = mix_seed(0x5eedULL, base);
  ((h = mix_seed(h, static_cast<std::uint64_t>(parts))), ...);
  return h;
}

}  // namespace relu_lab
