#pragma once

// Reference computations written from the model definitions without reusing
// library code paths. Slow and simple on purpose.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Rate = std::function<double(std::int64_t k, std::int64_t j)>;

// Right-hand side by enumerating every individual jump: a size-k cluster
// gives one monomer to a size-j cluster at rate K(k, j) c_k c_j.
inline std::vector<double> jump_rhs(const Rate& K, const std::vector<double>& c) {
  const std::int64_t n = static_cast<std::int64_t>(c.size()) - 1;
  std::vector<long double> d(c.size(), 0.0L);
  for (std::int64_t k = 1; k <= n; ++k) {
    for (std::int64_t j = 0; j < n; ++j) {
      const long double r = static_cast<long double>(K(k, j)) * c[k] * c[j];
      d[k] -= r;
      d[k - 1] += r;
      d[j] -= r;
      d[j + 1] += r;
    }
  }
  return {d.begin(), d.end()};
}

// log Q_l = Sum_{k=1..l} log(K(1,k-1) / K(k,0)).
inline std::vector<long double> log_q(const Rate& K, std::int64_t n) {
  std::vector<long double> q(static_cast<std::size_t>(n) + 1, 0.0L);
  for (std::int64_t k = 1; k <= n; ++k) {
    q[k] = q[k - 1] + std::log(static_cast<long double>(K(1, k - 1))) -
           std::log(static_cast<long double>(K(k, 0)));
  }
  return q;
}

// Onsager matrix as the sum over jump pairs of 1/2 kappa Lambda v v^T, with
// v = e_{k-1} + e_l - e_k - e_{l-1}; dense (n+1)^2, row-major.
inline std::vector<long double> onsager_dense(const Rate& K, const std::vector<double>& c) {
  const std::int64_t n = static_cast<std::int64_t>(c.size()) - 1;
  const auto lq = log_q(K, n);
  const std::size_t m = c.size();
  std::vector<long double> M(m * m, 0.0L);
  for (std::int64_t k = 1; k <= n; ++k) {
    for (std::int64_t l = 1; l <= n; ++l) {
      if (k == l) continue;
      const long double kappa = K(k, l - 1) * std::exp(lq[k] + lq[l - 1]);
      const long double x = static_cast<long double>(c[k]) * c[l - 1] / std::exp(lq[k] + lq[l - 1]);
      const long double y = static_cast<long double>(c[l]) * c[k - 1] / std::exp(lq[l] + lq[k - 1]);
      long double lambda;
      if (x == y) {
        lambda = x;
      } else {
        lambda = (x - y) / (std::log(x) - std::log(y));
      }
      const long double w = 0.5L * kappa * lambda;
      long double v[4] = {1, 1, -1, -1};
      std::int64_t idx[4] = {k - 1, l, k, l - 1};
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) M[idx[a] * m + idx[b]] += w * v[a] * v[b];
    }
  }
  return M;
}

// Sum_{l>=0} 6/((l+1)(l+2)(l+3)) and Sum l * 6/(...), the partition sum and
// its first moment for K(k, j) = 1 + 3/k at phi = 1/4. Direct summation to
// `terms` in long double plus the midpoint-rule integral of the remainder.
struct CondensingCritical {
  long double z = 0, n = 0;
};

inline CondensingCritical condensing_critical_series(std::int64_t terms = 1'000'000) {
  CondensingCritical r;
  for (std::int64_t l = terms; l >= 0; --l) {  // small terms first
    const long double x = static_cast<long double>(l);
    const long double t = 6.0L / ((x + 1) * (x + 2) * (x + 3));
    r.z += t;
    r.n += x * t;
  }
  const long double a = static_cast<long double>(terms) + 0.5L;
  // Antiderivatives, with partial fractions, evaluated at a (both vanish at infinity).
  const long double u = 1.0L / (a + 1);
  r.z += 6.0L * (std::log1p(u) - 0.5L * std::log1p(2 * u));
  r.n += -6.0L * (2.0L * std::log1p(u) - 1.5L * std::log1p(2 * u));
  return r;
}

// Sum_l c_l log c_l for c_l = (1 - phi) phi^l, summed until the terms vanish.
inline long double geometric_entropy(long double phi) {
  long double s = 0;
  for (std::int64_t l = 0; l < 100000; ++l) {
    const long double c = (1 - phi) * std::pow(phi, static_cast<long double>(l));
    if (c < 1e-4000L || c == 0) break;
    s += c * std::log(c);
  }
  return s;
}

inline std::vector<double> random_positive_state(std::mt19937_64& rng, std::int64_t n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> c(static_cast<std::size_t>(n) + 1);
  double s = 0;
  for (auto& x : c) s += (x = u(rng));
  for (auto& x : c) x /= s;
  return c;
}

}  // namespace oracle
