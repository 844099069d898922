#include "ssca/wireless.hpp"

#include <cmath>
#include <type_traits>
#include <stdexcept>
#include <string>

namespace ssca::wireless {

namespace {

void require_length(const std::vector<double>& v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(n) +
                                " entries, got " + std::to_string(v.size()));
  }
}

double received_total(const NetworkModel& model, const Vector& p, const ChannelSample& H,
                      std::size_t k) {
  double total = model.noise_vars[k];
  for (std::size_t j = 0; j < model.K; ++j) total += H.gain(k, j) * p[static_cast<Eigen::Index>(j)];
  return total;
}

Estimate finish(double sum, double sum_sq, long n) {
  Estimate e;
  e.mean = sum / static_cast<double>(n);
  if (n > 1) {
    const double var = std::max(0.0, (sum_sq - sum * e.mean) / static_cast<double>(n - 1));
    e.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return e;
}

template <typename Fn>
std::vector<Estimate> per_pair_mc(const NetworkModel& model, long n_samples, std::uint64_t seed,
                                  Fn&& integrand) {
  if (n_samples < 1) throw std::invalid_argument("Monte Carlo needs at least one sample");
  model.validate();
  Rng rng(derive_seed(seed, kEstimateStream, 0));
  std::vector<double> sum(model.K, 0.0);
  std::vector<double> sum_sq(model.K, 0.0);
  for (long i = 0; i < n_samples; ++i) {
    const ChannelSample H = sample_channels(model, rng);
    for (std::size_t k = 0; k < model.K; ++k) {
      const double v = integrand(H, k);
      sum[k] += v;
      sum_sq[k] += v * v;
    }
  }
  std::vector<Estimate> out;
  for (std::size_t k = 0; k < model.K; ++k) out.push_back(finish(sum[k], sum_sq[k], n_samples));
  return out;
}

}  // namespace

Vector NetworkModel::power_vector() const {
  return Eigen::Map<const Vector>(power_limits.data(), static_cast<Eigen::Index>(power_limits.size()));
}

void NetworkModel::validate() const {
  if (K == 0) throw std::invalid_argument("K: at least one pair is required");
  require_length(power_limits, K, "power_limits");
  require_length(noise_vars, K, "noise_vars");
  require_length(rate_reqs, K, "rate_reqs");
  require_length(gain_vars, K * K, "gain_vars");
  for (std::size_t k = 0; k < K; ++k) {
    if (!(power_limits[k] > 0.0) || !std::isfinite(power_limits[k])) {
      throw std::invalid_argument("power_limits: P_" + std::to_string(k + 1) + " must be positive");
    }
    if (!(noise_vars[k] > 0.0) || !std::isfinite(noise_vars[k])) {
      throw std::invalid_argument("noise_vars: sigma_" + std::to_string(k + 1) +
                                  "^2 must be positive");
    }
    if (!(rate_reqs[k] >= 0.0) || !std::isfinite(rate_reqs[k])) {
      throw std::invalid_argument("rate_reqs: R_" + std::to_string(k + 1) +
                                  " must be non-negative");
    }
  }
  for (std::size_t i = 0; i < gain_vars.size(); ++i) {
    if (!(gain_vars[i] > 0.0) || !std::isfinite(gain_vars[i])) {
      throw std::invalid_argument("gain_vars: v_" + std::to_string(i / K + 1) + "," +
                                  std::to_string(i % K + 1) + " must be positive");
    }
  }
}

NetworkModel NetworkModel::reference_five_pair() {
  NetworkModel m;
  m.K = 5;
  m.power_limits.assign(5, 100.0);
  m.noise_vars.assign(5, 1.0);
  m.rate_reqs.assign(5, 1.0);
  m.gain_vars.assign(25, 0.1);
  for (std::size_t k = 0; k < 5; ++k) m.gain_vars[k * 5 + k] = 1.0;
  return m;
}

Sample ChannelSample::to_sample(std::uint64_t id) const { return Sample{id, gains_sq}; }

ChannelSample ChannelSample::from_sample(const Sample& sample, std::size_t K) {
  if (sample.values.size() != K * K) {
    throw std::invalid_argument("sample does not hold a " + std::to_string(K) + "x" +
                                std::to_string(K) + " gain matrix");
  }
  return ChannelSample{K, sample.values};
}

ChannelSample sample_channels(const NetworkModel& model, Rng& rng) {
  ChannelSample H;
  H.K = model.K;
  H.gains_sq.resize(model.K * model.K);
  for (std::size_t i = 0; i < H.gains_sq.size(); ++i) H.gains_sq[i] = exponential(rng, model.gain_vars[i]);
  return H;
}

double instantaneous_rate(const NetworkModel& model, const Vector& p, const ChannelSample& H,
                          std::size_t k) {
  const double signal = H.gain(k, k) * p[static_cast<Eigen::Index>(k)];
  const double total = received_total(model, p, H, k);
  return std::log1p(signal / (total - signal));
}

double instantaneous_sum_rate(const NetworkModel& model, const Vector& p, const ChannelSample& H) {
  double sum = 0.0;
  for (std::size_t k = 0; k < model.K; ++k) sum += instantaneous_rate(model, p, H, k);
  return sum;
}

double lower_bound_integrand(const NetworkModel& model, double p_k, const ChannelSample& H,
                             std::size_t k) {
  double interference = model.noise_vars[k];
  for (std::size_t j = 0; j < model.K; ++j) {
    if (j != k) interference += H.gain(k, j) * model.power_limits[j];
  }
  return std::log1p(H.gain(k, k) * p_k / interference);
}

Estimate ergodic_rate_mc(const NetworkModel& model, const Vector& p, std::size_t k, long n_samples,
                         std::uint64_t seed) {
  if (k >= model.K) throw std::out_of_range("pair index out of range");
  return ergodic_rates_mc(model, p, n_samples, seed)[k];
}

Estimate ergodic_rate_lb_mc(const NetworkModel& model, double p_k, std::size_t k, long n_samples,
                            std::uint64_t seed) {
  if (k >= model.K) throw std::out_of_range("pair index out of range");
  return per_pair_mc(model, n_samples, seed, [&](const ChannelSample& H, std::size_t i) {
    return i == k ? lower_bound_integrand(model, p_k, H, k) : 0.0;
  })[k];
}

std::vector<Estimate> ergodic_rates_mc(const NetworkModel& model, const Vector& p, long n_samples,
                                       std::uint64_t seed) {
  if (static_cast<std::size_t>(p.size()) != model.K) {
    throw std::invalid_argument("power vector has the wrong dimension");
  }
  return per_pair_mc(model, n_samples, seed, [&](const ChannelSample& H, std::size_t k) {
    return instantaneous_rate(model, p, H, k);
  });
}

std::vector<Estimate> ergodic_rate_lbs_mc(const NetworkModel& model, const Vector& p,
                                          long n_samples, std::uint64_t seed) {
  if (static_cast<std::size_t>(p.size()) != model.K) {
    throw std::invalid_argument("power vector has the wrong dimension");
  }
  return per_pair_mc(model, n_samples, seed, [&](const ChannelSample& H, std::size_t k) {
    return lower_bound_integrand(model, p[static_cast<Eigen::Index>(k)], H, k);
  });
}

NegLogAffineComponent::NegLogAffineComponent(std::size_t dimension, std::vector<double> slopes,
                                             std::vector<double> intercepts,
                                             std::vector<double> linear, double offset,
                                             Vector anchor, std::uint64_t sample_id)
    : ConvexComponent(std::move(anchor), sample_id),
      dimension_(dimension),
      terms_(intercepts.size()),
      offset_(offset) {
  if (slopes.size() != terms_ * dimension_ || linear.size() != dimension_) {
    throw std::invalid_argument("log-affine component: inconsistent dimensions");
  }
  // Layout: linear (n), then per term its intercept followed by its slopes (n).
  data_.reserve(dimension_ + terms_ * (dimension_ + 1));
  data_.insert(data_.end(), linear.begin(), linear.end());
  for (std::size_t r = 0; r < terms_; ++r) {
    data_.push_back(intercepts[r]);
    data_.insert(data_.end(), slopes.begin() + static_cast<std::ptrdiff_t>(r * dimension_),
                 slopes.begin() + static_cast<std::ptrdiff_t>((r + 1) * dimension_));
  }
}

namespace {

// Kernels over the packed layout. N > 0 fixes the dimension at compile time so the small loops
// unroll; N = 0 is the general case.
template <std::size_t N>
double log_affine_value(const double* d, std::size_t n_dyn, std::size_t terms, double offset,
                        const double* xs) {
  const std::size_t n = N > 0 ? N : n_dyn;
  double v = offset;
  for (std::size_t i = 0; i < n; ++i) v += d[i] * xs[i];
  d += n;
  // One log per component: the arguments are multiplied and flushed before they leave range.
  double prod = 1.0;
  for (std::size_t r = 0; r < terms; ++r, d += n + 1) {
    double arg = d[0];
    for (std::size_t i = 0; i < n; ++i) arg += d[i + 1] * xs[i];
    if (!(arg > 1e-100 && arg < 1e100)) {
      v -= std::log(arg);
      continue;
    }
    prod *= arg;
    if (prod > 1e200 || prod < 1e-200) {
      v -= std::log(prod);
      prod = 1.0;
    }
  }
  return v - std::log(prod);
}

template <std::size_t N>
void log_affine_gradient(const double* d, std::size_t n_dyn, std::size_t terms, double weight,
                         const double* xs, double* g) {
  const std::size_t n = N > 0 ? N : n_dyn;
  for (std::size_t i = 0; i < n; ++i) g[i] += weight * d[i];
  d += n;
  for (std::size_t r = 0; r < terms; ++r, d += n + 1) {
    const double* a = d + 1;
    double arg = d[0];
    for (std::size_t i = 0; i < n; ++i) arg += a[i] * xs[i];
    const double c = weight / arg;
    for (std::size_t i = 0; i < n; ++i) g[i] -= c * a[i];
  }
}

// Value and weighted gradient in one sweep; same arithmetic as the two kernels above.
template <std::size_t N>
double log_affine_accumulate(const double* d, std::size_t n_dyn, std::size_t terms, double offset,
                             double weight, const double* xs, double* g) {
  const std::size_t n = N > 0 ? N : n_dyn;
  double v = offset;
  for (std::size_t i = 0; i < n; ++i) {
    v += d[i] * xs[i];
    g[i] += weight * d[i];
  }
  d += n;
  double prod = 1.0;
  for (std::size_t r = 0; r < terms; ++r, d += n + 1) {
    const double* a = d + 1;
    double arg = d[0];
    for (std::size_t i = 0; i < n; ++i) arg += a[i] * xs[i];
    const double c = weight / arg;
    for (std::size_t i = 0; i < n; ++i) g[i] -= c * a[i];
    if (!(arg > 1e-100 && arg < 1e100)) {
      v -= std::log(arg);
      continue;
    }
    prod *= arg;
    if (prod > 1e200 || prod < 1e-200) {
      v -= std::log(prod);
      prod = 1.0;
    }
  }
  return v - std::log(prod);
}

template <std::size_t N>
void log_affine_second_order(const double* d, std::size_t n_dyn, std::size_t terms,
                             double weight, const double* xs, double* g, double* hs) {
  if constexpr (N == 0) {
    const std::size_t n = n_dyn;
    if (g != nullptr) {
      for (std::size_t i = 0; i < n; ++i) g[i] += weight * d[i];
    }
    d += n;
    for (std::size_t r = 0; r < terms; ++r, d += n + 1) {
      const double* a = d + 1;
      double arg = d[0];
      for (std::size_t i = 0; i < n; ++i) arg += a[i] * xs[i];
      const double inv = 1.0 / arg;
      const double c1 = weight * inv;
      const double c2 = c1 * inv;
      if (g != nullptr) {
        for (std::size_t i = 0; i < n; ++i) g[i] -= c1 * a[i];
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double cj = c2 * a[j];
        for (std::size_t i = 0; i < n; ++i) hs[j * n + i] += cj * a[i];
      }
    }
  } else {
    // Local accumulators: no aliasing between the packed data and the outputs.
    double gl[N] = {};
    double hl[N * N] = {};
    double x[N];
    for (std::size_t i = 0; i < N; ++i) x[i] = xs[i];
    const double* t = d + N;
    for (std::size_t r = 0; r < terms; ++r, t += N + 1) {
      const double* a = t + 1;
      double arg = t[0];
      for (std::size_t i = 0; i < N; ++i) arg += a[i] * x[i];
      const double inv = 1.0 / arg;
      const double c1 = weight * inv;
      const double c2 = c1 * inv;
      for (std::size_t i = 0; i < N; ++i) gl[i] -= c1 * a[i];
      // Lower triangle only; mirrored below.
#pragma GCC unroll 8
      for (std::size_t j = 0; j < N; ++j) {
        const double cj = c2 * a[j];
#pragma GCC unroll 8
        for (std::size_t i = j; i < N; ++i) hl[j * N + i] += cj * a[i];
      }
    }
    if (g != nullptr) {
      for (std::size_t i = 0; i < N; ++i) g[i] += weight * d[i] + gl[i];
    }
    for (std::size_t j = 0; j < N; ++j) {
      hs[j * N + j] += hl[j * N + j];
      for (std::size_t i = j + 1; i < N; ++i) {
        hs[j * N + i] += hl[j * N + i];
        hs[i * N + j] += hl[j * N + i];
      }
    }
  }
}

template <typename Fn>
decltype(auto) dispatch_dimension(std::size_t n, Fn&& fn) {
  switch (n) {
    case 1: return fn(std::integral_constant<std::size_t, 1>{});
    case 2: return fn(std::integral_constant<std::size_t, 2>{});
    case 3: return fn(std::integral_constant<std::size_t, 3>{});
    case 4: return fn(std::integral_constant<std::size_t, 4>{});
    case 5: return fn(std::integral_constant<std::size_t, 5>{});
    case 6: return fn(std::integral_constant<std::size_t, 6>{});
    case 8: return fn(std::integral_constant<std::size_t, 8>{});
    default: return fn(std::integral_constant<std::size_t, 0>{});
  }
}

}  // namespace

double NegLogAffineComponent::value(const Vector& x) const {
  return dispatch_dimension(dimension_, [&](auto N) {
    return log_affine_value<N()>(data_.data(), dimension_, terms_, offset_, x.data());
  });
}

double NegLogAffineComponent::accumulate(const Vector& x, double weight, Vector& grad) const {
  return dispatch_dimension(dimension_, [&](auto N) {
    return log_affine_accumulate<N()>(data_.data(), dimension_, terms_, offset_, weight, x.data(),
                                      grad.data());
  });
}

void NegLogAffineComponent::accumulate_gradient(const Vector& x, double weight, Vector& grad) const {
  dispatch_dimension(dimension_, [&](auto N) {
    log_affine_gradient<N()>(data_.data(), dimension_, terms_, weight, x.data(), grad.data());
  });
}

void NegLogAffineComponent::accumulate_hessian(const Vector& x, double weight, Matrix& hess) const {
  dispatch_dimension(dimension_, [&](auto N) {
    log_affine_second_order<N()>(data_.data(), dimension_, terms_, weight, x.data(), nullptr,
                                 hess.data());
  });
}

void NegLogAffineComponent::accumulate_second_order(const Vector& x, double weight, Vector& grad,
                                                    Matrix& hess) const {
  dispatch_dimension(dimension_, [&](auto N) {
    log_affine_second_order<N()>(data_.data(), dimension_, terms_, weight, x.data(), grad.data(),
                                 hess.data());
  });
}

namespace {

void check_anchor(const NetworkModel& model, const Vector& anchor, const ChannelSample& H) {
  if (static_cast<std::size_t>(anchor.size()) != model.K || H.K != model.K) {
    throw std::invalid_argument("anchor or channel sample does not match the network size");
  }
}

// Interference plus noise at receiver k under powers p.
double interference(const NetworkModel& model, const Vector& p, const ChannelSample& H,
                    std::size_t k) {
  double v = model.noise_vars[k];
  for (std::size_t j = 0; j < model.K; ++j) {
    if (j != k) v += H.gain(k, j) * p[static_cast<Eigen::Index>(j)];
  }
  return v;
}

double checked_log(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("non-finite log argument in surrogate");
  return std::log(v);
}

}  // namespace

ComponentPtr surrogate_g0(const NetworkModel& model, const Vector& anchor, const ChannelSample& H) {
  check_anchor(model, anchor, H);
  const std::size_t K = model.K;
  std::vector<double> linear(K, 0.0);
  double offset = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double I = interference(model, anchor, H, k);
    offset += checked_log(I) - (I - model.noise_vars[k]) / I;
    for (std::size_t j = 0; j < K; ++j) {
      if (j != k) linear[j] += H.gain(k, j) / I;
    }
  }
  return std::make_shared<NegLogAffineComponent>(K, H.gains_sq, model.noise_vars, std::move(linear),
                                                 offset, anchor, 0);
}

ComponentPtr surrogate_gk(const NetworkModel& model, const Vector& anchor, const ChannelSample& H,
                          std::size_t k) {
  check_anchor(model, anchor, H);
  const std::size_t K = model.K;
  const double I = interference(model, anchor, H, k);
  std::vector<double> linear(K, 0.0);
  for (std::size_t j = 0; j < K; ++j) {
    if (j != k) linear[j] = H.gain(k, j) / I;
  }
  const double offset = model.rate_reqs[k] + checked_log(I) - (I - model.noise_vars[k]) / I;
  std::vector<double> row(H.gains_sq.begin() + static_cast<std::ptrdiff_t>(k * K),
                          H.gains_sq.begin() + static_cast<std::ptrdiff_t>((k + 1) * K));
  return std::make_shared<NegLogAffineComponent>(K, std::move(row),
                                                 std::vector<double>{model.noise_vars[k]},
                                                 std::move(linear), offset, anchor, 0);
}

ComponentPtr surrogate_gk0(const NetworkModel& model, const Vector& anchor, const ChannelSample& H,
                           std::size_t k) {
  check_anchor(model, anchor, H);
  const std::size_t K = model.K;
  const double a_k = anchor[static_cast<Eigen::Index>(k)];
  std::vector<double> slopes(K);
  std::vector<double> intercepts(K);
  double linear = 0.0;
  double offset = 0.0;
  for (std::size_t m = 0; m < K; ++m) {
    const double I = interference(model, anchor, H, m);
    // Everything received at m except transmitter k's contribution.
    const double rest = I + H.gain(m, m) * anchor[static_cast<Eigen::Index>(m)] - H.gain(m, k) * a_k;
    slopes[m] = H.gain(m, k);
    intercepts[m] = rest;
    offset += checked_log(I);
    if (m != k) {
      linear += H.gain(m, k) / I;
      offset -= H.gain(m, k) * a_k / I;
    }
  }
  Vector local_anchor(1);
  local_anchor[0] = a_k;
  return std::make_shared<NegLogAffineComponent>(1, std::move(slopes), std::move(intercepts),
                                                 std::vector<double>{linear}, offset,
                                                 std::move(local_anchor), 0);
}

ComponentPtr surrogate_gk1(const NetworkModel& model, const Vector& anchor, const ChannelSample& H,
                           std::size_t k) {
  check_anchor(model, anchor, H);
  double worst = model.noise_vars[k];
  for (std::size_t j = 0; j < model.K; ++j) {
    if (j != k) worst += H.gain(k, j) * model.power_limits[j];
  }
  Vector local_anchor(1);
  local_anchor[0] = anchor[static_cast<Eigen::Index>(k)];
  return std::make_shared<NegLogAffineComponent>(
      1, std::vector<double>{H.gain(k, k)}, std::vector<double>{worst}, std::vector<double>{0.0},
      model.rate_reqs[k] + checked_log(worst), std::move(local_anchor), 0);
}

namespace {

Sampler channel_sampler(const NetworkModel& model) {
  return [model](Rng& rng) { return sample_channels(model, rng).to_sample(); };
}

// d rate_k / d p.
Vector rate_gradient(const NetworkModel& model, const Vector& p, const ChannelSample& H,
                     std::size_t k) {
  const double total = received_total(model, p, H, k);
  const double I = interference(model, p, H, k);
  Vector g(static_cast<Eigen::Index>(model.K));
  for (std::size_t j = 0; j < model.K; ++j) {
    g[static_cast<Eigen::Index>(j)] = H.gain(k, j) / total - (j != k ? H.gain(k, j) / I : 0.0);
  }
  return g;
}

StochasticProblem base_problem(const NetworkModel& model) {
  model.validate();
  StochasticProblem problem;
  problem.dimension = model.K;
  problem.feasible_set =
      FeasibleSet::box(Vector::Zero(static_cast<Eigen::Index>(model.K)), model.power_vector());
  problem.sampler = channel_sampler(model);
  problem.initial_point = model.power_vector();
  const std::size_t K = model.K;
  problem.objective.value = [model, K](const Vector& p, const Sample& s) {
    return -instantaneous_sum_rate(model, p, ChannelSample::from_sample(s, K));
  };
  problem.objective.gradient = [model, K](const Vector& p, const Sample& s) {
    const ChannelSample H = ChannelSample::from_sample(s, K);
    Vector g = Vector::Zero(static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) g -= rate_gradient(model, p, H, k);
    return g;
  };
  problem.objective_surrogate = [model, K](const Vector& anchor, const Sample& s) {
    return surrogate_g0(model, anchor, ChannelSample::from_sample(s, K));
  };
  return problem;
}

}  // namespace

StochasticProblem build_problem7(const NetworkModel& model) {
  StochasticProblem problem = base_problem(model);
  const std::size_t K = model.K;
  for (std::size_t k = 0; k < K; ++k) {
    StochasticFunction g;
    g.value = [model, K, k](const Vector& p, const Sample& s) {
      return model.rate_reqs[k] - instantaneous_rate(model, p, ChannelSample::from_sample(s, K), k);
    };
    g.gradient = [model, K, k](const Vector& p, const Sample& s) {
      return Vector(-rate_gradient(model, p, ChannelSample::from_sample(s, K), k));
    };
    problem.constraints.push_back(std::move(g));
    problem.constraint_surrogates.push_back([model, K, k](const Vector& anchor, const Sample& s) {
      return surrogate_gk(model, anchor, ChannelSample::from_sample(s, K), k);
    });
  }
  return problem;
}

StochasticProblem build_problem8(const NetworkModel& model) {
  StochasticProblem problem = base_problem(model);
  const std::size_t K = model.K;
  problem.blocks = BlockStructure::singletons(K, 1);
  for (std::size_t k = 0; k < K; ++k) {
    StochasticFunction g;
    g.value = [model, K, k](const Vector& p, const Sample& s) {
      return model.rate_reqs[k] -
             lower_bound_integrand(model, p[static_cast<Eigen::Index>(k)],
                                   ChannelSample::from_sample(s, K), k);
    };
    g.gradient = [model, K, k](const Vector& p, const Sample& s) {
      const ChannelSample H = ChannelSample::from_sample(s, K);
      double worst = model.noise_vars[k];
      for (std::size_t j = 0; j < K; ++j) {
        if (j != k) worst += H.gain(k, j) * model.power_limits[j];
      }
      Vector grad = Vector::Zero(static_cast<Eigen::Index>(K));
      grad[static_cast<Eigen::Index>(k)] =
          -H.gain(k, k) / (worst + H.gain(k, k) * p[static_cast<Eigen::Index>(k)]);
      return grad;
    };
    problem.constraints.push_back(std::move(g));
    problem.constraint_surrogates.push_back([model, K, k](const Vector& anchor, const Sample& s) {
      return surrogate_gk1(model, anchor, ChannelSample::from_sample(s, K), k);
    });
    problem.block_objective_surrogates.push_back([model, K, k](const Vector& anchor, const Sample& s) {
      return surrogate_gk0(model, anchor, ChannelSample::from_sample(s, K), k);
    });
  }
  return problem;
}

}  // namespace ssca::wireless
