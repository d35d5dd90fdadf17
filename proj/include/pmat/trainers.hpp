#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pmat/core.hpp"
#include "pmat/dataset.hpp"
#include "pmat/random.hpp"

namespace pmat {

enum class Algo { random, zipf, classic_mf, zeromat, dotmat, poissonmat };

inline std::string algo_name(Algo a) {
  switch (a) {
    case Algo::random: return "random";
    case Algo::zipf: return "zipf";
    case Algo::classic_mf: return "classic_mf";
    case Algo::zeromat: return "zeromat";
    case Algo::dotmat: return "dotmat";
    case Algo::poissonmat: return "poissonmat";
  }
  throw std::logic_error("algo_name: unknown algorithm");
}

// An algorithm tag, optionally wrapped as "<pretrainer>_hybrid": the base
// trainer runs first and classic MF fine-tunes from its embeddings.
struct RecommenderKind {
  Algo base = Algo::poissonmat;
  bool hybrid = false;

  static RecommenderKind simple(Algo a) { return {a, false}; }
  static RecommenderKind make_hybrid(Algo pretrainer) {
    if (pretrainer != Algo::zeromat && pretrainer != Algo::dotmat &&
        pretrainer != Algo::poissonmat)
      throw std::invalid_argument(
          "RecommenderKind: hybrid pretrainer must be zeromat, dotmat or poissonmat");
    return {pretrainer, true};
  }

  bool is_sampler() const { return !hybrid && (base == Algo::random || base == Algo::zipf); }
  bool uses_learning_rate() const { return !is_sampler(); }

  std::string name() const { return hybrid ? algo_name(base) + "_hybrid" : algo_name(base); }

  friend bool operator==(const RecommenderKind&, const RecommenderKind&) = default;
};

inline std::optional<RecommenderKind> parse_kind(std::string_view name) {
  for (Algo a : {Algo::random, Algo::zipf, Algo::classic_mf, Algo::zeromat, Algo::dotmat,
                 Algo::poissonmat}) {
    if (name == algo_name(a)) return RecommenderKind::simple(a);
    if (name == algo_name(a) + "_hybrid" &&
        (a == Algo::zeromat || a == Algo::dotmat || a == Algo::poissonmat))
      return RecommenderKind::make_hybrid(a);
  }
  return std::nullopt;
}

// Which (user, item) pairs exist, with rating values deliberately absent.
// The value-blind trainers consume only this.
struct InteractionGraph {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<std::vector<std::uint32_t>> items_by_user;

  static InteractionGraph from_dataset(const Dataset& ds) {
    InteractionGraph g;
    g.n_users = ds.n_users();
    g.n_items = ds.n_items();
    g.items_by_user.resize(g.n_users);
    for (const auto& t : ds.triples)
      g.items_by_user[ds.user_of(t.user_id)].push_back(ds.item_of(t.item_id));
    return g;
  }

  bool has_interactions() const {
    for (const auto& list : items_by_user)
      if (!list.empty()) return true;
    return false;
  }
};

struct RatedInteraction {
  std::uint32_t item = 0;
  double rating = 0.0;
};

// Per-user interaction lists with rating values, for the trainers that use them.
struct RatedGraph {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  double r_max = 0.0;
  std::vector<std::vector<RatedInteraction>> by_user;

  static RatedGraph from_dataset(const Dataset& ds) {
    RatedGraph g;
    g.n_users = ds.n_users();
    g.n_items = ds.n_items();
    g.r_max = ds.r_max;
    g.by_user.resize(g.n_users);
    for (const auto& t : ds.triples)
      g.by_user[ds.user_of(t.user_id)].push_back({ds.item_of(t.item_id), t.rating});
    return g;
  }

  bool has_interactions() const {
    for (const auto& list : by_user)
      if (!list.empty()) return true;
    return false;
  }
};

// ---------------------------------------------------------------------------
// Losses and gradient coefficients

// Poisson log-likelihood of a rating event at dot-product value x:
// (x+1) ln(x) - x. Caller clamps x away from zero.
inline double poissonmat_loss(double x) { return (x + 1.0) * std::log(x) - x; }

// d/dx of poissonmat_loss: the shared scalar multiplying the partner vector
// in both the user and item updates.
inline double poissonmat_grad_coeff(double x) {
  return (x + 1.0) / x + std::log(x) - 1.0;
}

inline double sign(double x) {
  return static_cast<double>(x > 0.0) - static_cast<double>(x < 0.0);
}

// x^x evaluated as exp(x ln x).
inline double pow_self(double x) { return std::exp(x * std::log(x)); }

// Power-law residual |x^x - r/r_max|.
inline double dotmat_loss(double x, double rating, double r_max) {
  return std::abs(pow_self(x) - rating / r_max);
}

// Subgradient coefficient of dotmat_loss; sign(0) = 0, so an exact fit keeps
// only the -x correction term.
inline double dotmat_grad_coeff(double x, double rating, double r_max) {
  double xx = pow_self(x);
  return (xx * sign(xx - rating / r_max) - x) * (1.0 + std::log(x));
}

// ---------------------------------------------------------------------------
// Single update steps. Each updates `target` against `other` and renormalizes
// target. The user and item rules are the same function with roles swapped.

inline void poissonmat_step(std::span<double> target, std::span<const double> other,
                            double gamma, double eps) {
  double x = clamp_low(dot(target, other), eps);
  double g = poissonmat_grad_coeff(x);
  for (std::size_t k = 0; k < target.size(); ++k) target[k] += gamma * g * other[k];
  l2_normalize_inplace(target, eps);
}

inline void zeromat_step(std::span<double> target, std::span<const double> other,
                         double gamma, double eps) {
  double x = clamp_low(dot(target, other), eps);
  for (std::size_t k = 0; k < target.size(); ++k)
    target[k] += gamma * (other[k] / x - 2.0 * target[k]);
  l2_normalize_inplace(target, eps);
}

inline void dotmat_step(std::span<double> target, std::span<const double> other,
                        double rating, double r_max, double gamma, double eps) {
  double x = clamp_low(dot(target, other), eps);
  double c = dotmat_grad_coeff(x, rating, r_max);
  for (std::size_t k = 0; k < target.size(); ++k) target[k] -= gamma * c * other[k];
  l2_normalize_inplace(target, eps);
}

// ---------------------------------------------------------------------------
// Sampling schedule shared by every factor trainer: draw users, then a subset
// of each user's rated items, and visit each sampled pair once. All draws come
// from the caller's generator, so the visit sequence is a pure function of the
// seed and the interaction structure.

namespace detail {

inline constexpr std::uint64_t kScheduleSalt = 0x7b1f0a2bc3d45e61ULL;

template <typename Entry, typename Visit>
void visit_sampled_interactions(const std::vector<std::vector<Entry>>& by_user,
                                const TrainConfig& cfg, SplitMix64& rng, Visit&& visit) {
  std::vector<std::uint32_t> candidates;
  candidates.reserve(by_user.size());
  for (std::uint32_t u = 0; u < by_user.size(); ++u)
    if (!by_user[u].empty()) candidates.push_back(u);

  std::vector<std::uint32_t> users;
  if (cfg.user_sample_count && *cfg.user_sample_count < candidates.size()) {
    for (auto pos : sample_distinct(candidates.size(), *cfg.user_sample_count, rng))
      users.push_back(candidates[pos]);
  } else {
    users = std::move(candidates);
  }

  for (std::uint32_t u : users) {
    const auto& list = by_user[u];
    std::size_t k = std::min<std::size_t>(cfg.items_per_user_sample, list.size());
    if (k == list.size()) {
      for (const auto& entry : list) visit(u, entry);
    } else {
      for (auto slot : sample_distinct(list.size(), k, rng)) visit(u, list[slot]);
    }
  }
}

}  // namespace detail

struct NoStepObserver {
  void operator()(std::span<const double>) const noexcept {}
};

// ---------------------------------------------------------------------------
// Trainers. All start from init_embeddings(seed) and are deterministic per
// seed. learning_rate 0 returns the initialization unchanged.

namespace detail {

template <typename StepFn, typename Observer>
FactorModel train_value_blind(const InteractionGraph& graph, const TrainConfig& cfg,
                              StepFn&& step, Observer&& observe) {
  cfg.validate();
  if (!graph.has_interactions()) throw std::runtime_error("no interactions");
  FactorModel model = init_embeddings(graph.n_users, graph.n_items, cfg.latent_dim, cfg.seed);
  if (cfg.learning_rate == 0.0) return model;
  SplitMix64 rng(mix64(cfg.seed ^ kScheduleSalt));
  visit_sampled_interactions(graph.items_by_user, cfg, rng,
                             [&](std::uint32_t u, std::uint32_t j) {
                               for (std::size_t it = 0; it < cfg.max_iteration_number; ++it) {
                                 step(model.user(u), model.item(j));
                                 observe(model.user(u));
                                 step(model.item(j), model.user(u));
                                 observe(model.item(j));
                               }
                             });
  return model;
}

}  // namespace detail

// Gradient-ascent trainer on the Poisson rating-event likelihood. Consumes
// the interaction structure only, never rating values.
template <typename Observer = NoStepObserver>
FactorModel poissonmat_train(const InteractionGraph& graph, const TrainConfig& cfg,
                             Observer&& observe = {}) {
  return detail::train_value_blind(
      graph, cfg,
      [&](std::span<double> target, std::span<const double> other) {
        poissonmat_step(target, other, cfg.learning_rate, cfg.clamp_epsilon);
      },
      observe);
}

// Zipf-prior trainer: target += gamma (other/x - 2 target), renormalized.
// Value-blind like poissonmat_train.
template <typename Observer = NoStepObserver>
FactorModel zeromat_train(const InteractionGraph& graph, const TrainConfig& cfg,
                          Observer&& observe = {}) {
  return detail::train_value_blind(
      graph, cfg,
      [&](std::span<double> target, std::span<const double> other) {
        zeromat_step(target, other, cfg.learning_rate, cfg.clamp_epsilon);
      },
      observe);
}

// Power-law residual trainer; consumes rating values.
template <typename Observer = NoStepObserver>
FactorModel dotmat_train(const Dataset& ds, const TrainConfig& cfg, Observer&& observe = {}) {
  cfg.validate();
  RatedGraph data = RatedGraph::from_dataset(ds);
  if (!data.has_interactions()) throw std::runtime_error("empty dataset");
  FactorModel model = init_embeddings(data.n_users, data.n_items, cfg.latent_dim, cfg.seed);
  if (cfg.learning_rate == 0.0) return model;
  SplitMix64 rng(mix64(cfg.seed ^ detail::kScheduleSalt));
  detail::visit_sampled_interactions(
      data.by_user, cfg, rng, [&](std::uint32_t u, const RatedInteraction& ri) {
        for (std::size_t it = 0; it < cfg.max_iteration_number; ++it) {
          dotmat_step(model.user(u), model.item(ri.item), ri.rating, data.r_max,
                      cfg.learning_rate, cfg.clamp_epsilon);
          observe(model.user(u));
          dotmat_step(model.item(ri.item), model.user(u), ri.rating, data.r_max,
                      cfg.learning_rate, cfg.clamp_epsilon);
          observe(model.item(ri.item));
        }
      });
  return model;
}

// Squared-error SGD on normalized targets r/r_max, continuing from the given
// embeddings. No per-step normalization; predictions clamp instead.
inline FactorModel classic_mf_train_from(FactorModel model, const Dataset& ds,
                                         const TrainConfig& cfg) {
  cfg.validate();
  RatedGraph data = RatedGraph::from_dataset(ds);
  if (!data.has_interactions()) throw std::runtime_error("empty dataset");
  if (model.num_users() != data.n_users || model.num_items() != data.n_items)
    throw std::invalid_argument("classic_mf_train_from: model shape mismatch");
  if (cfg.learning_rate == 0.0) return model;
  SplitMix64 rng(mix64(cfg.seed ^ detail::kScheduleSalt));
  detail::visit_sampled_interactions(
      data.by_user, cfg, rng, [&](std::uint32_t u, const RatedInteraction& ri) {
        auto user = model.user(u);
        auto item = model.item(ri.item);
        double target = ri.rating / data.r_max;
        for (std::size_t it = 0; it < cfg.max_iteration_number; ++it) {
          double err = target - dot(user, item);
          double step = cfg.learning_rate * 2.0 * err;
          for (std::size_t k = 0; k < user.size(); ++k) user[k] += step * item[k];
          for (std::size_t k = 0; k < item.size(); ++k) item[k] += step * user[k];
        }
      });
  return model;
}

inline FactorModel classic_mf_train(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  return classic_mf_train_from(
      init_embeddings(ds.n_users(), ds.n_items(), cfg.latent_dim, cfg.seed), ds, cfg);
}

// Pretrains with a value-blind (or dotmat) stage, then fine-tunes with classic
// MF starting from the pretrained embeddings.
inline FactorModel hybrid_train(Algo pretrainer, const Dataset& ds, const TrainConfig& pre_cfg,
                                const TrainConfig& mf_cfg) {
  FactorModel pretrained;
  switch (pretrainer) {
    case Algo::zeromat:
      pretrained = zeromat_train(InteractionGraph::from_dataset(ds), pre_cfg);
      break;
    case Algo::poissonmat:
      pretrained = poissonmat_train(InteractionGraph::from_dataset(ds), pre_cfg);
      break;
    case Algo::dotmat:
      pretrained = dotmat_train(ds, pre_cfg);
      break;
    default:
      throw std::invalid_argument("hybrid_train: pretrainer must be zeromat, dotmat or poissonmat");
  }
  return classic_mf_train_from(std::move(pretrained), ds, mf_cfg);
}

inline FactorModel hybrid_train(Algo pretrainer, const Dataset& ds, const TrainConfig& cfg) {
  return hybrid_train(pretrainer, ds, cfg, cfg);
}

// ---------------------------------------------------------------------------
// Trained recommenders

// Dot-product reconstruction r_max * U_i . V_j, clamped to [0, r_max].
inline double poissonmat_predict(const FactorModel& model, std::size_t user, std::size_t item,
                                 double r_max) {
  double x = dot(model.user(user), model.item(item));
  return std::clamp(r_max * x, 0.0, r_max);
}

// A trained recommender of any kind: factor kinds hold a FactorModel, the two
// baseline samplers hold their distribution state.
struct TrainedRecommender {
  RecommenderKind kind;
  double r_max = 5.0;

  // factor kinds
  std::optional<FactorModel> model;

  // random placement: stateless hash scoring, stable per (seed, user, item)
  std::uint64_t sampler_seed = 0;
  std::size_t n_items = 0;

  // zipf placement: popularity rank per item index (1 = most popular)
  std::vector<std::uint32_t> item_rank;
  double zipf_exponent = 1.0;

  double predict(std::size_t user, std::size_t item) const {
    if (!kind.is_sampler()) {
      if (!model) throw std::logic_error("TrainedRecommender: missing factor model");
      return poissonmat_predict(*model, user, item, r_max);
    }
    if (kind.base == Algo::random) {
      if (n_items > 0 && item >= n_items)
        throw std::invalid_argument("TrainedRecommender: item index out of range");
      return r_max * unit_from_bits(hash3(sampler_seed, user, item));
    }
    if (item >= item_rank.size())
      throw std::invalid_argument("TrainedRecommender: item index out of range");
    return r_max * std::pow(static_cast<double>(item_rank[item]), -zipf_exponent);
  }
};

inline double predict(const TrainedRecommender& rec, std::size_t user, std::size_t item) {
  return rec.predict(user, item);
}

// Uniform scorer over [0, r_max]; per-pair scores are fixed by (seed, i, j).
inline TrainedRecommender random_placement_train(std::size_t n_items, double r_max,
                                                 std::uint64_t seed) {
  if (n_items == 0) throw std::invalid_argument("random_placement_train: n_items must be positive");
  TrainedRecommender rec;
  rec.kind = RecommenderKind::simple(Algo::random);
  rec.r_max = r_max;
  rec.sampler_seed = seed;
  rec.n_items = n_items;
  return rec;
}

// Popularity rank per item index: 1 for the most-rated item, ties broken by
// first appearance (ascending dense index).
inline std::vector<std::uint32_t> popularity_ranks(const Dataset& ds) {
  std::vector<std::size_t> count(ds.n_items(), 0);
  for (const auto& t : ds.triples) ++count[ds.item_of(t.item_id)];
  std::vector<std::uint32_t> order(ds.n_items());
  for (std::uint32_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return count[a] > count[b]; });
  std::vector<std::uint32_t> rank(ds.n_items());
  for (std::uint32_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

// Scores item of popularity rank k as r_max * k^-s for every user.
inline TrainedRecommender zipf_placement_train(std::vector<std::uint32_t> item_popularity_rank,
                                               double exponent, double r_max,
                                               std::uint64_t seed) {
  if (!(exponent > 0.0))
    throw std::invalid_argument("zipf_placement_train: exponent must be positive");
  std::size_t m = item_popularity_rank.size();
  if (m == 0) throw std::invalid_argument("zipf_placement_train: empty rank map");
  std::vector<bool> used(m + 1, false);
  for (std::uint32_t r : item_popularity_rank) {
    if (r < 1 || r > m || used[r])
      throw std::invalid_argument("zipf_placement_train: ranks must be a permutation of 1..m");
    used[r] = true;
  }
  TrainedRecommender rec;
  rec.kind = RecommenderKind::simple(Algo::zipf);
  rec.r_max = r_max;
  rec.sampler_seed = seed;
  rec.item_rank = std::move(item_popularity_rank);
  rec.zipf_exponent = exponent;
  return rec;
}

inline constexpr double kDefaultZipfExponent = 1.0;

// Trains any recommender kind on a dataset with one entry point.
inline TrainedRecommender train_recommender(const RecommenderKind& kind, const Dataset& ds,
                                            const TrainConfig& cfg,
                                            double zipf_exponent = kDefaultZipfExponent) {
  TrainedRecommender rec;
  rec.kind = kind;
  rec.r_max = ds.r_max;
  if (kind.hybrid) {
    rec.model = hybrid_train(kind.base, ds, cfg);
    return rec;
  }
  switch (kind.base) {
    case Algo::random:
      return random_placement_train(ds.n_items(), ds.r_max, cfg.seed);
    case Algo::zipf:
      return zipf_placement_train(popularity_ranks(ds), zipf_exponent, ds.r_max, cfg.seed);
    case Algo::classic_mf:
      rec.model = classic_mf_train(ds, cfg);
      return rec;
    case Algo::zeromat:
      rec.model = zeromat_train(InteractionGraph::from_dataset(ds), cfg);
      return rec;
    case Algo::dotmat:
      rec.model = dotmat_train(ds, cfg);
      return rec;
    case Algo::poissonmat:
      rec.model = poissonmat_train(InteractionGraph::from_dataset(ds), cfg);
      return rec;
  }
  throw std::logic_error("train_recommender: unknown kind");
}

}  // namespace pmat
