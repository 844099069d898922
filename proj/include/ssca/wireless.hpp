#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ssca/driver.hpp"
#include "ssca/problem.hpp"
#include "ssca/rng.hpp"
#include "ssca/types.hpp"

namespace ssca::wireless {

/// K transmitter/receiver pairs over a flat Rayleigh interference channel. H_kj is the complex
/// gain from transmitter j to receiver k, H_kj ~ CN(0, v_kj), so |H_kj|^2 is exponential with
/// mean v_kj. Rates are in nats.
struct NetworkModel {
  std::size_t K = 0;
  std::vector<double> power_limits;  // P_k
  std::vector<double> noise_vars;    // sigma_k^2
  std::vector<double> rate_reqs;     // R_k
  std::vector<double> gain_vars;     // v_kj at k * K + j

  double gain_var(std::size_t k, std::size_t j) const { return gain_vars[k * K + j]; }
  Vector power_vector() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Five pairs, P_k = 100, sigma_k^2 = 1, R_k = 1, v_kk = 1, v_kj = 0.1.
  static NetworkModel reference_five_pair();
};

/// One realization of |H_kj|^2, row-major.
struct ChannelSample {
  std::size_t K = 0;
  std::vector<double> gains_sq;

  double gain(std::size_t k, std::size_t j) const { return gains_sq[k * K + j]; }
  Sample to_sample(std::uint64_t id = 0) const;
  static ChannelSample from_sample(const Sample& sample, std::size_t K);
};

ChannelSample sample_channels(const NetworkModel& model, Rng& rng);

/// log(1 + |H_kk|^2 p_k / (sum_{j != k} |H_kj|^2 p_j + sigma_k^2)).
double instantaneous_rate(const NetworkModel& model, const Vector& p, const ChannelSample& H,
                          std::size_t k);
/// Sum over pairs of instantaneous_rate.
double instantaneous_sum_rate(const NetworkModel& model, const Vector& p, const ChannelSample& H);
/// Integrand of the decoupled lower bound: interferers pinned at their power limits.
double lower_bound_integrand(const NetworkModel& model, double p_k, const ChannelSample& H,
                             std::size_t k);

/// Monte Carlo ergodic rate of pair k over fresh channel draws.
Estimate ergodic_rate_mc(const NetworkModel& model, const Vector& p, std::size_t k, long n_samples,
                         std::uint64_t seed);
/// Monte Carlo of the decoupled lower bound of pair k at power p_k.
Estimate ergodic_rate_lb_mc(const NetworkModel& model, double p_k, std::size_t k, long n_samples,
                            std::uint64_t seed);
/// Ergodic rates of all pairs from one shared set of channel draws.
std::vector<Estimate> ergodic_rates_mc(const NetworkModel& model, const Vector& p, long n_samples,
                                       std::uint64_t seed);
/// Lower bounds of all pairs at powers p from one shared set of channel draws.
std::vector<Estimate> ergodic_rate_lbs_mc(const NetworkModel& model, const Vector& p,
                                          long n_samples, std::uint64_t seed);

/// sum_r -log(a_r . x + b_r) + c . x + c0. Convex wherever every argument is positive, strictly
/// so along directions not orthogonal to all a_r.
class NegLogAffineComponent final : public ConvexComponent {
 public:
  NegLogAffineComponent(std::size_t dimension, std::vector<double> slopes,
                        std::vector<double> intercepts, std::vector<double> linear, double offset,
                        Vector anchor, std::uint64_t sample_id);

  std::size_t dimension() const override { return dimension_; }
  double value(const Vector& x) const override;
  double accumulate(const Vector& x, double weight, Vector& grad) const override;
  void accumulate_gradient(const Vector& x, double weight, Vector& grad) const override;
  void accumulate_hessian(const Vector& x, double weight, Matrix& hess) const override;
  void accumulate_second_order(const Vector& x, double weight, Vector& grad,
                               Matrix& hess) const override;

 private:
  std::size_t dimension_;
  std::size_t terms_;
  double offset_;
  std::vector<double> data_;
};

/// Convex surrogate of g_0 = -(instantaneous sum rate) around `anchor`: the -log of each total
/// received power is kept and the interference log is linearized.
ComponentPtr surrogate_g0(const NetworkModel& model, const Vector& anchor, const ChannelSample& H);
/// Convex surrogate of R_k - rate_k around `anchor`, same construction.
ComponentPtr surrogate_gk(const NetworkModel& model, const Vector& anchor, const ChannelSample& H,
                          std::size_t k);
/// Scalar surrogate of g_0 in p_k with the other powers pinned at the anchor.
ComponentPtr surrogate_gk0(const NetworkModel& model, const Vector& anchor, const ChannelSample& H,
                           std::size_t k);
/// Scalar surrogate of R_k - (lower-bound integrand) in p_k; the integrand is concave in p_k so
/// the constraint is kept exactly.
ComponentPtr surrogate_gk1(const NetworkModel& model, const Vector& anchor, const ChannelSample& H,
                           std::size_t k);

/// Sum-rate maximization with coupled rate constraints r_k(p) >= R_k, p in [0, P].
StochasticProblem build_problem7(const NetworkModel& model);
/// Sum-rate maximization with the decoupled constraints r_lb,k(p_k) >= R_k, one singleton block
/// per pair.
StochasticProblem build_problem8(const NetworkModel& model);

}  // namespace ssca::wireless
