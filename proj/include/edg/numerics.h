#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <json.hpp>

namespace edg {

/// A nonnegative quantity that may be +infinity. Infinity is a tag, not a
/// float sentinel, so serialized output never carries `inf`.
class ExtReal {
 public:
  static ExtReal finite(double v) { return ExtReal(v, false); }
  static ExtReal infinity() { return ExtReal(0.0, true); }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }
  /// Throws std::logic_error on the infinite tag.
  double value() const;
  /// Finite value, or +inf as a double for arithmetic comparisons.
  double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend bool operator==(const ExtReal&, const ExtReal&) = default;

 private:
  ExtReal(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

nlohmann::json to_json_value(const ExtReal& x);
ExtReal ext_real_from_json(const nlohmann::json& j);
std::string to_string(const ExtReal& x);

/// Shortest-round-trip-safe text for CSV output: 17 significant digits.
std::string format_double(double v);

/// Neumaier (improved Kahan-Babuska) compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void scale(double f) {
    sum_ *= f;
    comp_ *= f;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

/// Logarithmic mean; Lambda(s,s) = s and Lambda(s,0) = 0.
double log_mean(double s, double t);

/// log of the logarithmic mean given log s and log t; stable for |ls - lt|
/// near zero and for arguments far outside double range.
double log_log_mean(double ls, double lt);

/// psi(a,b) = (a-b)(log a - log b) for a, b > 0. Returns +inf when exactly one
/// argument is zero and 0 when both are.
double psi_boltzmann(double a, double b);

/// Limit of a sequence f(h) as h -> 0 by polynomial (Neville) extrapolation
/// through the points (h_i, f_i). Also returns the size of the last correction
/// as an error indicator.
struct Extrapolation {
  double value;
  double error;
};
Extrapolation neville_to_zero(std::span<const double> h, std::span<const double> f);

/// Iterated Aitken delta-squared acceleration of a convergent sequence.
/// `noise_floor` guards against amplifying rounding once the sequence has
/// settled.
Extrapolation aitken_limit(std::span<const double> seq, double noise_floor);

}  // namespace edg
