#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmat/random.hpp"

namespace pmat {

inline constexpr double kDefaultClampEpsilon = 1e-8;

// max(x, eps). Guards logs and divisions in the update rules.
inline double clamp_low(double x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("clamp_low: eps must be positive");
  return x > eps ? x : eps;
}

// Plain inner product, summed in index order.
inline double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("dot: length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) sum += u[k] * v[k];
  return sum;
}

inline double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

// Scales v to unit L2 norm. A degenerate vector (norm <= eps) becomes the
// uniform unit vector (1/sqrt(d), ..., 1/sqrt(d)) instead of failing, so a
// collapsed embedding stays usable.
inline void l2_normalize_inplace(std::span<double> v, double eps = kDefaultClampEpsilon) {
  if (v.empty()) return;
  double norm = l2_norm(v);
  if (norm > eps) {
    for (double& x : v) x /= norm;
  } else {
    double uniform = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (double& x : v) x = uniform;
  }
}

inline std::vector<double> l2_normalize(std::vector<double> v,
                                        double eps = kDefaultClampEpsilon) {
  l2_normalize_inplace(v, eps);
  return v;
}

// Poisson probability mass exp(k ln(lambda) - lambda - ln(k!)), evaluated in
// log space via lgamma so large k does not overflow.
inline double poisson_pmf(std::uint64_t k, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("poisson_pmf: lambda must be nonnegative");
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  if (k == 0) return std::exp(-lambda);
  double log_pmf = static_cast<double>(k) * std::log(lambda) - lambda -
                   std::lgamma(static_cast<double>(k) + 1.0);
  return std::exp(log_pmf);
}

// Rate and rank-proxy pair of the Poisson rating-event model. The rank proxy
// is the dot-product value standing in for a popularity rank.
struct PoissonParams {
  double lambda_rate = 0.0;
  double rank_proxy = kDefaultClampEpsilon;

  PoissonParams() = default;
  PoissonParams(double lambda, double proxy, double eps = kDefaultClampEpsilon)
      : lambda_rate(lambda), rank_proxy(proxy) {
    if (!(lambda_rate >= 0.0))
      throw std::invalid_argument("PoissonParams: lambda_rate must be nonnegative");
    if (!(rank_proxy >= eps))
      throw std::invalid_argument("PoissonParams: rank_proxy must be at least eps");
  }
};

// Latent user/item embeddings, row-major.
class FactorModel {
 public:
  FactorModel() = default;
  FactorModel(std::size_t num_users, std::size_t num_items, std::size_t latent_dim)
      : num_users_(num_users),
        num_items_(num_items),
        latent_dim_(latent_dim),
        user_data_(num_users * latent_dim, 0.0),
        item_data_(num_items * latent_dim, 0.0) {
    if (latent_dim == 0) throw std::invalid_argument("FactorModel: latent_dim must be positive");
  }

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t latent_dim() const { return latent_dim_; }

  std::span<double> user(std::size_t i) {
    check_user(i);
    return {user_data_.data() + i * latent_dim_, latent_dim_};
  }
  std::span<const double> user(std::size_t i) const {
    check_user(i);
    return {user_data_.data() + i * latent_dim_, latent_dim_};
  }
  std::span<double> item(std::size_t j) {
    check_item(j);
    return {item_data_.data() + j * latent_dim_, latent_dim_};
  }
  std::span<const double> item(std::size_t j) const {
    check_item(j);
    return {item_data_.data() + j * latent_dim_, latent_dim_};
  }

  const std::vector<double>& user_data() const { return user_data_; }
  const std::vector<double>& item_data() const { return item_data_; }

  bool all_finite() const {
    for (double x : user_data_)
      if (!std::isfinite(x)) return false;
    for (double x : item_data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  friend bool operator==(const FactorModel&, const FactorModel&) = default;

 private:
  void check_user(std::size_t i) const {
    if (i >= num_users_) throw std::invalid_argument("FactorModel: user index out of range");
  }
  void check_item(std::size_t j) const {
    if (j >= num_items_) throw std::invalid_argument("FactorModel: item index out of range");
  }

  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::size_t latent_dim_ = 1;
  std::vector<double> user_data_;
  std::vector<double> item_data_;
};

// Knobs shared by all factor trainers. learning_rate 0 is allowed and turns
// training into a no-op that returns the seeded initialization.
struct TrainConfig {
  double learning_rate = 1e-6;
  std::size_t latent_dim = 16;
  // Inner-loop repetitions per sampled (user, item) pair.
  std::size_t max_iteration_number = 3;
  // Users drawn per training pass; unset means every user with interactions.
  std::optional<std::size_t> user_sample_count{};
  // Rated items drawn per sampled user, capped at the user's rated count.
  std::size_t items_per_user_sample = 10;
  double clamp_epsilon = kDefaultClampEpsilon;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("TrainConfig: learning_rate must be finite and nonnegative");
    if (latent_dim == 0) throw std::invalid_argument("TrainConfig: latent_dim must be positive");
    if (max_iteration_number == 0)
      throw std::invalid_argument("TrainConfig: max_iteration_number must be positive");
    if (items_per_user_sample == 0)
      throw std::invalid_argument("TrainConfig: items_per_user_sample must be positive");
    if (user_sample_count && *user_sample_count == 0)
      throw std::invalid_argument("TrainConfig: user_sample_count must be positive when set");
    if (!(clamp_epsilon > 0.0))
      throw std::invalid_argument("TrainConfig: clamp_epsilon must be positive");
  }
};

// Seeded initialization: each row uniform over (0,1)^d, then L2-normalized.
// Positive entries keep every dot product positive, so the log-based losses
// are defined from the first step.
inline FactorModel init_embeddings(std::size_t num_users, std::size_t num_items,
                                   std::size_t latent_dim, std::uint64_t seed) {
  if (num_users == 0 || num_items == 0 || latent_dim == 0)
    throw std::invalid_argument("init_embeddings: counts must be positive");
  FactorModel model(num_users, num_items, latent_dim);
  SplitMix64 rng(seed);
  auto fill_row = [&](std::span<double> row) {
    for (double& x : row) x = rng.uniform_open01();
    l2_normalize_inplace(row);
  };
  for (std::size_t i = 0; i < num_users; ++i) fill_row(model.user(i));
  for (std::size_t j = 0; j < num_items; ++j) fill_row(model.item(j));
  return model;
}

}  // namespace pmat
