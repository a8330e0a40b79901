#include "edg/numerics.h"
#include "edg/error.h"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace edg {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain error";
    case ErrorKind::zero_rate: return "zero-rate";
    case ErrorKind::divergent: return "divergent";
    case ErrorKind::supercritical: return "supercritical";
    case ErrorKind::inconclusive: return "inconclusive";
    case ErrorKind::non_convergent: return "non-convergent";
    case ErrorKind::boundary_state: return "boundary state";
    case ErrorKind::step_underflow: return "step underflow";
    case ErrorKind::not_integrable: return "not integrable";
    case ErrorKind::rho_c_unavailable: return "rho_c unavailable";
    case ErrorKind::insufficient_samples: return "insufficient samples";
    case ErrorKind::config: return "config error";
  }
  return "error";
}

double ExtReal::value() const {
  if (infinite_) throw std::logic_error("ExtReal::value() on +infinity");
  return value_;
}

nlohmann::json to_json_value(const ExtReal& x) {
  if (x.is_infinite()) return {{"kind", "infinite"}};
  return {{"kind", "finite"}, {"value", x.value()}};
}

ExtReal ext_real_from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() == "infinite") return ExtReal::infinity();
  return ExtReal::finite(j.at("value").get<double>());
}

std::string to_string(const ExtReal& x) {
  if (x.is_infinite()) return "+inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x.value());
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

double log_mean(double s, double t) {
  if (s <= 0.0 || t <= 0.0) return 0.0;
  if (s == t) return s;
  return std::exp(log_log_mean(std::log(s), std::log(t)));
}

double log_log_mean(double ls, double lt) {
  const double hi = std::max(ls, lt);
  const double d = std::abs(ls - lt);
  if (d < 1e-300) return hi;
  // Lambda = e^hi * (1 - e^-d) / d
  return hi + std::log(-std::expm1(-d) / d);
}

double psi_boltzmann(double a, double b) {
  if (a == 0.0 && b == 0.0) return 0.0;
  if (a == 0.0 || b == 0.0) return std::numeric_limits<double>::infinity();
  return (a - b) * (std::log(a) - std::log(b));
}

Extrapolation neville_to_zero(std::span<const double> h, std::span<const double> f) {
  if (h.size() != f.size() || h.empty()) {
    throw std::invalid_argument("neville_to_zero: mismatched or empty input");
  }
  std::vector<double> p(f.begin(), f.end());
  const std::size_t n = p.size();
  double prev = p.back();
  double best = p.back();
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
    }
    prev = best;
    best = p[0];
  }
  return {best, std::abs(best - prev)};
}

Extrapolation aitken_limit(std::span<const double> seq, double noise_floor) {
  if (seq.empty()) throw std::invalid_argument("aitken_limit: empty sequence");
  std::vector<double> s(seq.begin(), seq.end());
  double prev = s.back();
  double error = s.size() >= 2 ? std::abs(s[s.size() - 1] - s[s.size() - 2]) : 0.0;
  while (s.size() >= 3) {
    std::vector<double> next;
    bool settled = false;
    for (std::size_t i = 0; i + 2 < s.size(); ++i) {
      const double d1 = s[i + 1] - s[i];
      const double d2 = s[i + 2] - s[i + 1];
      const double den = d2 - d1;
      if (std::abs(d2) <= noise_floor || den == 0.0) {
        next.push_back(s[i + 2]);
        settled = true;
      } else {
        next.push_back(s[i + 2] - d2 * d2 / den);
      }
    }
    error = std::abs(next.back() - prev);
    prev = next.back();
    s = std::move(next);
    if (settled) break;
  }
  return {s.back(), error};
}

}  // namespace edg
