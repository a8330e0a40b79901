#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

namespace edg {

using Index = std::int64_t;

/// K(k, j): rate at which a size-k cluster hands one monomer to a size-j
/// cluster, for k >= 1 and j >= 0.
using RateFn = std::function<double(Index k, Index j)>;
using SequenceFn = std::function<double(Index)>;

/// K(k, j) = b_k * a_j * S(k, j). An empty modulator means S == 1, the
/// separable case that admits O(N) birth/death rates.
struct SeparableParts {
  SequenceFn b;  // k >= 1
  SequenceFn a;  // j >= 0
  RateFn modulator;

  bool unmodulated() const { return !static_cast<bool>(modulator); }
};

/// Immutable rate kernel. Copies share the underlying callables; all
/// evaluation is const and safe to call concurrently as long as the wrapped
/// callables are pure, which every built-in family is.
class Kernel {
 public:
  Kernel(std::string family, RateFn rate, double growth_constant,
         nlohmann::json spec = nlohmann::json::object());

  static Kernel separable(std::string family, SequenceFn b, SequenceFn a, double growth_constant,
                          RateFn modulator = {}, nlohmann::json spec = nlohmann::json::object());

  /// Checked evaluation; throws Error(domain) for k < 1 or j < 0.
  double eval(Index k, Index j) const;

  /// Unchecked evaluation for hot loops whose indices are valid by construction.
  double operator()(Index k, Index j) const { return impl_->rate(k, j); }

  const std::optional<SeparableParts>& separable_parts() const { return impl_->parts; }
  /// True when the separable O(N) rate path applies (S == 1).
  bool has_fast_path() const { return impl_->parts && impl_->parts->unmodulated(); }

  /// C_K from the linear growth bound K(k, l-1) <= C_K k l.
  double growth_constant() const { return impl_->growth_constant; }
  const std::string& family() const { return impl_->family; }
  /// The configuration this kernel was built from (empty for hand-built kernels).
  const nlohmann::json& spec() const { return impl_->spec; }

 private:
  struct Impl {
    std::string family;
    RateFn rate;
    std::optional<SeparableParts> parts;
    double growth_constant;
    nlohmann::json spec;
  };
  explicit Kernel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<const Impl> impl_;
};

/// K == value.
Kernel constant_kernel(double value = 1.0);

/// K(k, j) = 1 + c/k. Separable with b_k = 1 + c/k and a_j = 1; for c > 0 it
/// has phi_c = 1/(1+c) and, for c > 2, a finite critical density.
Kernel condensing_kernel(double c);

/// Becker-Doring type kernel: K(1, j) = a_j, K(k, 0) = b_k and zero
/// otherwise. Requires a_0 == b_1.
Kernel becker_doring_kernel(SequenceFn a, SequenceFn b, double growth_constant,
                            nlohmann::json spec = nlohmann::json::object());

/// |log K(k,l-1) + log K(1,k-1) + log K(l,0) - log K(l,k-1) - log K(1,l-1) - log K(k,0)|,
/// or nullopt when one of the six rates is zero (the identity is undefined there).
std::optional<double> bda_residual(const Kernel& kernel, Index k, Index l);

/// Results of sampling the structural kernel assumptions on a finite grid.
/// Every verdict is a sampled one; none is a proof.
struct AssumptionReport {
  Index k_max = 0;
  Index l_max = 0;
  double growth_constant = 0.0;

  // K(k, l-1) <= C_K k l
  bool k1_ok = false;
  double k1_ratio_max = 0.0;  // max K(k,l-1)/(k l)

  // |K(l,k) - K(l,k-1)| <= C_K l and |K(l+1,k-1) - K(l,k-1)| <= C_K k
  bool k2_ok = false;
  double k2_ratio_max = 0.0;

  // Top-decile deviation of the neighbour ratios from 1.
  double k3_ratio_deviation = 0.0;

  // Two-sided bounds by sublinear increasing envelopes a, b, d.
  bool k4_ok = false;
  double k4_constant = 0.0;  // smallest C making all four bounds hold on the grid (inf if none)
  bool k4_a_sublinear = false;
  bool k4_b_sublinear = false;
  bool k4_d_sublinear = false;

  // K(k,0)/K(1,k-1) at the top of the grid.
  double kc_ratio_top = 0.0;

  double bda_max_residual = 0.0;
  Index bda_zero_rate_pairs = 0;
  Index zero_rate_entries = 0;

  std::string verdict = "sampled";
};

AssumptionReport audit_assumptions(const Kernel& kernel, Index k_max, Index l_max);

nlohmann::json to_json(const AssumptionReport& report);

/// Builds a kernel from its configuration sub-document, e.g.
///   {"family":"condensing","c":3.0}
///   {"family":"separable","b":"k","a":"1"}
///   {"family":"general","expr":"k + 2*(j+1)"}
/// Throws Error(config) on unknown families or malformed expressions.
Kernel kernel_from_spec(const nlohmann::json& spec);

}  // namespace edg
