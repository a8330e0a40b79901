#include "edg/kernel.h"
#include "edg/error.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace edg {

Kernel::Kernel(std::string family, RateFn rate, double growth_constant, nlohmann::json spec)
    : impl_(std::make_shared<const Impl>(
          Impl{std::move(family), std::move(rate), std::nullopt, growth_constant, std::move(spec)})) {}

Kernel Kernel::separable(std::string family, SequenceFn b, SequenceFn a, double growth_constant,
                         RateFn modulator, nlohmann::json spec) {
  SeparableParts parts{std::move(b), std::move(a), std::move(modulator)};
  RateFn rate;
  if (parts.unmodulated()) {
    rate = [b = parts.b, a = parts.a](Index k, Index j) { return b(k) * a(j); };
  } else {
    rate = [b = parts.b, a = parts.a, s = parts.modulator](Index k, Index j) {
      return b(k) * a(j) * s(k, j);
    };
  }
  return Kernel(std::make_shared<const Impl>(
      Impl{std::move(family), std::move(rate), std::move(parts), growth_constant, std::move(spec)}));
}

double Kernel::eval(Index k, Index j) const {
  if (k < 1 || j < 0) {
    throw Error(ErrorKind::domain, "kernel evaluated at (k=" + std::to_string(k) +
                                       ", j=" + std::to_string(j) + "); need k >= 1, j >= 0");
  }
  return impl_->rate(k, j);
}

Kernel constant_kernel(double value) {
  return Kernel::separable(
      "constant", [value](Index) { return value; }, [](Index) { return 1.0; }, value,
      {}, {{"family", "constant"}, {"value", value}});
}

Kernel condensing_kernel(double c) {
  return Kernel::separable(
      "condensing", [c](Index k) { return 1.0 + c / static_cast<double>(k); },
      [](Index) { return 1.0; }, std::max(1.0, 1.0 + c), {},
      {{"family", "condensing"}, {"c", c}});
}

Kernel becker_doring_kernel(SequenceFn a, SequenceFn b, double growth_constant,
                            nlohmann::json spec) {
  const double a0 = a(0);
  const double b1 = b(1);
  if (std::abs(a0 - b1) > 1e-12 * std::max({1.0, std::abs(a0), std::abs(b1)})) {
    throw Error(ErrorKind::config, "becker_doring kernel needs a_0 == b_1 (both define K(1,0))");
  }
  RateFn rate = [a = std::move(a), b = std::move(b)](Index k, Index j) {
    if (k == 1) return a(j);
    if (j == 0) return b(k);
    return 0.0;
  };
  return Kernel("becker_doring", std::move(rate), growth_constant, std::move(spec));
}

std::optional<double> bda_residual(const Kernel& kernel, Index k, Index l) {
  if (k < 1 || l < 1) {
    throw Error(ErrorKind::domain, "bda_residual needs k, l >= 1");
  }
  const double v[6] = {kernel(k, l - 1), kernel(1, k - 1), kernel(l, 0),
                       kernel(l, k - 1), kernel(1, l - 1), kernel(k, 0)};
  for (double x : v) {
    if (!(x > 0.0)) return std::nullopt;
  }
  const double lhs = std::log(v[0]) + std::log(v[1]) + std::log(v[2]);
  const double rhs = std::log(v[3]) + std::log(v[4]) + std::log(v[5]);
  return std::abs(lhs - rhs);
}

namespace {

// Growth exponent from the log-log slope over the top half of the samples.
// Anything clearly below linear counts as sublinear.
bool sampled_sublinear(const std::vector<double>& x) {
  const std::size_t n = x.size() - 1;  // x is indexed 1..n
  if (n < 4) return false;
  const std::size_t half = n / 2;
  if (!(x[half] > 0.0) || !(x[n] > 0.0)) return false;
  const double slope = std::log(x[n] / x[half]) / std::log(static_cast<double>(n) / half);
  return slope < 0.95;
}

}  // namespace

AssumptionReport audit_assumptions(const Kernel& kernel, Index k_max, Index l_max) {
  if (k_max < 2 || l_max < 2) {
    throw Error(ErrorKind::domain, "audit_assumptions needs k_max, l_max >= 2");
  }
  AssumptionReport r;
  r.k_max = k_max;
  r.l_max = l_max;
  r.growth_constant = kernel.growth_constant();
  const double ck = kernel.growth_constant();
  const double slack = 1.0 + 1e-12;

  bool nonneg = true;
  for (Index k = 1; k <= k_max; ++k) {
    for (Index l = 1; l <= l_max; ++l) {
      const double v = kernel(k, l - 1);
      if (v < 0.0) nonneg = false;
      if (v == 0.0) ++r.zero_rate_entries;
      r.k1_ratio_max = std::max(r.k1_ratio_max, v / (static_cast<double>(k) * l));
    }
  }
  r.k1_ok = nonneg && r.k1_ratio_max <= ck * slack;

  for (Index k = 1; k <= k_max; ++k) {
    for (Index l = 1; l <= l_max; ++l) {
      const double d1 = std::abs(kernel(l, k) - kernel(l, k - 1)) / static_cast<double>(l);
      const double d2 = std::abs(kernel(l + 1, k - 1) - kernel(l, k - 1)) / static_cast<double>(k);
      r.k2_ratio_max = std::max({r.k2_ratio_max, d1, d2});
    }
  }
  r.k2_ok = r.k2_ratio_max <= ck * slack;

  const Index band = std::max<Index>(1, k_max / 10);
  for (Index k = std::max<Index>(2, k_max - band + 1); k <= k_max; ++k) {
    for (Index l = 1; l <= l_max; ++l) {
      const double den1 = kernel(l, k - 1);
      if (den1 > 0.0) r.k3_ratio_deviation = std::max(r.k3_ratio_deviation, std::abs(kernel(l, k) / den1 - 1.0));
      const double den2 = kernel(k - 1, l - 1);
      if (den2 > 0.0) {
        r.k3_ratio_deviation = std::max(r.k3_ratio_deviation, std::abs(kernel(k, l - 1) / den2 - 1.0));
      }
    }
  }

  // Envelopes for the two-sided bounds: running maxima make them increasing.
  std::vector<double> a(static_cast<std::size_t>(l_max) + 1, 0.0);  // a[l] holds a_{l-1}
  std::vector<double> b(static_cast<std::size_t>(k_max) + 1, 0.0);
  std::vector<double> d(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (Index l = 1; l <= l_max; ++l) a[l] = std::max(l > 1 ? a[l - 1] : 0.0, kernel(1, l - 1));
  for (Index k = 1; k <= k_max; ++k) b[k] = std::max(k > 1 ? b[k - 1] : 0.0, kernel(k, 0));
  for (Index k = 1; k <= k_max; ++k) {
    double row = 0.0;
    for (Index l = 1; l <= l_max; ++l) {
      if (a[l] > 0.0) row = std::max(row, kernel(k, l - 1) / a[l]);
    }
    d[k] = std::max(k > 1 ? d[k - 1] : 0.0, row);
  }
  double c4 = 1.0;
  for (Index k = 1; k <= k_max && std::isfinite(c4); ++k) {
    for (Index l = 1; l <= l_max; ++l) {
      const double v = kernel(k, l - 1);
      if (!(v > 0.0) || !(d[k] > 0.0)) {
        c4 = std::numeric_limits<double>::infinity();
        break;
      }
      c4 = std::max({c4, a[l] / v, v / (d[k] * a[l]), b[k] / v, v / (b[k] * l)});
    }
  }
  r.k4_constant = c4;
  // a[l] holds a_{l-1}; the unit shift does not change the growth exponent.
  r.k4_a_sublinear = sampled_sublinear(a);
  r.k4_b_sublinear = sampled_sublinear(b);
  r.k4_d_sublinear = sampled_sublinear(d);
  r.k4_ok = std::isfinite(c4) && r.k4_a_sublinear && r.k4_b_sublinear && r.k4_d_sublinear;

  const double kc_den = kernel(1, k_max - 1);
  r.kc_ratio_top = kc_den > 0.0 ? kernel(k_max, 0) / kc_den : std::numeric_limits<double>::infinity();

  for (Index k = 1; k <= k_max; ++k) {
    for (Index l = 1; l <= l_max; ++l) {
      const auto res = bda_residual(kernel, k, l);
      if (res) {
        r.bda_max_residual = std::max(r.bda_max_residual, *res);
      } else {
        ++r.bda_zero_rate_pairs;
      }
    }
  }
  return r;
}

nlohmann::json to_json(const AssumptionReport& r) {
  auto finite_or_tag = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return {{"kind", "infinite"}};
  };
  return {
      {"verdict", r.verdict},
      {"probe_range", {{"k_max", r.k_max}, {"l_max", r.l_max}}},
      {"growth_constant", r.growth_constant},
      {"k1_ok", r.k1_ok},
      {"k1_ratio_max", r.k1_ratio_max},
      {"k2_ok", r.k2_ok},
      {"k2_ratio_max", r.k2_ratio_max},
      {"k3_ratio_deviation", r.k3_ratio_deviation},
      {"k4_ok", r.k4_ok},
      {"k4_constant", finite_or_tag(r.k4_constant)},
      {"k4_sublinear", {{"a", r.k4_a_sublinear}, {"b", r.k4_b_sublinear}, {"d", r.k4_d_sublinear}}},
      {"kc_ratio_top", finite_or_tag(r.kc_ratio_top)},
      {"bda_max_residual", r.bda_max_residual},
      {"bda_zero_rate_pairs", r.bda_zero_rate_pairs},
      {"zero_rate_entries", r.zero_rate_entries},
  };
}

}  // namespace edg
