#pragma once

// Utilization of periodic self-measurement and the attestation cost model.

#include <rata/common.hpp>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rata {

/// Non-negative rational with a positive denominator, kept in lowest terms.
class fraction {
public:
  constexpr fraction() = default;
  constexpr fraction(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {
    if (den_ == 0) throw std::domain_error("zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    auto g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  constexpr std::int64_t num() const noexcept { return num_; }
  constexpr std::int64_t den() const noexcept { return den_; }
  constexpr double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend constexpr fraction operator+(fraction a, fraction b) {
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
  }
  friend constexpr fraction operator-(fraction a, fraction b) {
    return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
  }
  friend constexpr fraction operator*(fraction a, fraction b) { return {a.num_ * b.num_, a.den_ * b.den_}; }
  friend constexpr fraction operator/(fraction a, fraction b) {
    if (b.num_ == 0) throw std::domain_error("division by zero");
    return {a.num_ * b.den_, a.den_ * b.num_};
  }
  friend constexpr bool operator==(fraction a, fraction b) noexcept { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend constexpr bool operator<(fraction a, fraction b) noexcept { return a.num_ * b.den_ < b.num_ * a.den_; }
  friend constexpr bool operator>(fraction a, fraction b) noexcept { return b < a; }
  friend constexpr bool operator<=(fraction a, fraction b) noexcept { return !(b < a); }
  friend constexpr bool operator>=(fraction a, fraction b) noexcept { return !(a < b); }

  std::string str() const { return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_); }

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// U = C_app / (C_app + C_RA).
constexpr fraction utilization(std::int64_t c_app, std::int64_t c_ra) {
  if (c_app < 0 || c_ra < 0) throw std::domain_error("cycle counts must be non-negative");
  if (c_app + c_ra == 0) throw std::domain_error("utilization undefined when both cycle counts are zero");
  return {c_app, c_app + c_ra};
}

/// Supremum of U when every infection lasting C_adv cycles must be caught by
/// back-to-back self-measurements: C_app < C_adv.
constexpr fraction max_utilization_bound(std::int64_t c_adv, std::int64_t c_ra) {
  if (c_adv <= 0) throw std::domain_error("c_adv must be positive");
  if (c_ra < 0) throw std::domain_error("c_ra must be non-negative");
  return {c_adv, c_adv + c_ra};
}

/// Affine attestation cost c0 + c1 * n in cycles.
struct cost_model {
  fraction c0;
  fraction c1;

  /// Line through two measured (bytes, cycles) points.
  static constexpr cost_model calibrate(std::int64_t n_a, std::int64_t cycles_a, std::int64_t n_b,
                                        std::int64_t cycles_b) {
    if (n_a == n_b) throw std::domain_error("calibration points need distinct sizes");
    fraction slope{cycles_a - cycles_b, n_a - n_b};
    return {fraction{cycles_a} - slope * fraction{n_a}, slope};
  }

  constexpr fraction cycles(std::int64_t n_bytes) const {
    if (n_bytes < 0) throw std::domain_error("attested size must be non-negative");
    return c0 + c1 * fraction{n_bytes};
  }
};

/// HMAC over 4 KiB costs 3.6e6 cycles; over the 32-byte LMT, 3.6e5.
inline constexpr std::int64_t anchor_ar_bytes = 4096;
inline constexpr std::int64_t anchor_ar_cycles = 3'600'000;
inline constexpr std::int64_t anchor_lmt_bytes = 32;
inline constexpr std::int64_t anchor_lmt_cycles = 360'000;

constexpr cost_model default_cost_model() {
  return cost_model::calibrate(anchor_ar_bytes, anchor_ar_cycles, anchor_lmt_bytes, anchor_lmt_cycles);
}

constexpr fraction attest_cost(std::int64_t n_bytes, const cost_model& model = default_cost_model()) {
  return model.cycles(n_bytes);
}

/// Percentage with two decimals, rounded half up.
inline std::string format_percent(fraction f) {
  const std::int64_t hundredths = (f.num() * 10000 * 2 + f.den()) / (2 * f.den());
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac.insert(frac.begin(), '0');
  return std::to_string(hundredths / 100) + "." + frac + "%";
}

} // namespace rata
