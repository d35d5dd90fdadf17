#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmat/core.hpp"
#include "pmat/dataset.hpp"
#include "pmat/random.hpp"
#include "pmat/trainers.hpp"

namespace pmat {

inline double mae(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.empty() || predicted.size() != actual.size())
    throw std::invalid_argument("mae: lists must be nonempty and of equal length");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::abs(predicted[i] - actual[i]);
  return sum / static_cast<double>(predicted.size());
}

inline double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.empty() || predicted.size() != actual.size())
    throw std::invalid_argument("rmse: lists must be nonempty and of equal length");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    double d = predicted[i] - actual[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

// Pearson correlation with the zero-variance convention: if either input is
// constant the correlation is defined as 0. Result is trimmed to [-1, 1] only
// to absorb floating-point overshoot of the exact bound.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson: need two equal-length samples of size >= 2");
  double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - mean_a;
    double db = b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Matthew-effect score: Pearson correlation between an item's training
// popularity (rating count) and its mean predicted score over a seeded sample
// of probe users. 0 means popularity-blind scoring; near 1 means popular
// items are scored systematically higher.
inline double fairness_matthew(const TrainedRecommender& rec, const Dataset& train,
                               std::size_t probe_users, std::uint64_t seed) {
  if (probe_users < 2) throw std::invalid_argument("fairness_matthew: probe_users must be >= 2");
  if (train.triples.empty()) throw std::invalid_argument("fairness_matthew: empty training set");
  std::size_t m = train.n_items();
  if (m < 2) throw std::runtime_error("degenerate fairness input");

  std::vector<double> popularity(m, 0.0);
  for (const auto& t : train.triples) popularity[train.item_of(t.item_id)] += 1.0;

  SplitMix64 rng(seed);
  std::vector<std::size_t> probes(probe_users);
  for (auto& p : probes) p = static_cast<std::size_t>(rng.below(train.n_users()));

  std::vector<double> mean_score(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (std::size_t p : probes) sum += rec.predict(p, j);
    mean_score[j] = sum / static_cast<double>(probe_users);
  }
  return pearson(popularity, mean_score);
}

struct EvalResult {
  double mae = 0.0;
  double rmse = 0.0;
};

// Predicts every triple of the test split and scores against the actual
// ratings. Entities unseen in training carry their seeded initialization, so
// cold users and items still get predictions.
inline EvalResult evaluate_on_split(const TrainedRecommender& rec, const Dataset& test) {
  if (test.triples.empty()) throw std::invalid_argument("evaluate_on_split: empty test set");
  std::vector<double> predicted, actual;
  predicted.reserve(test.triples.size());
  actual.reserve(test.triples.size());
  for (const auto& t : test.triples) {
    predicted.push_back(rec.predict(test.user_of(t.user_id), test.item_of(t.item_id)));
    actual.push_back(t.rating);
  }
  return {mae(predicted, actual), rmse(predicted, actual)};
}

struct LearningRateGrid {
  std::vector<double> values;

  void validate() const {
    if (values.empty()) throw std::invalid_argument("LearningRateGrid: empty grid");
    for (double v : values)
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("LearningRateGrid: values must be positive and finite");
    for (std::size_t i = 1; i < values.size(); ++i)
      if (!(values[i] > values[i - 1]))
        throw std::invalid_argument("LearningRateGrid: values must be strictly ascending");
  }

  // Geometric sweep anchored at the 1e-6 scale.
  static LearningRateGrid default_grid() {
    return {{1e-6, 2e-6, 4e-6, 8e-6, 1.6e-5, 3.2e-5}};
  }
};

struct EvalRow {
  std::string algorithm;
  std::optional<double> learning_rate;     // unset for the sampler baselines
  std::optional<double> mf_learning_rate;  // hybrids: fine-tune rate picked by the inner sweep
  double mae = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double fairness = std::numeric_limits<double>::quiet_NaN();
  double train_seconds = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  bool best = false;  // marks the per-algorithm minimum-MAE row
  std::string error;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  // algorithm name -> index into rows of its best (minimum MAE) row
  std::map<std::string, std::size_t> best_per_algorithm;
};

struct GridSearchOptions {
  std::size_t fairness_probe_users = 500;
  // When false, train_seconds is reported as 0 so serialized reports are
  // byte-identical across runs.
  bool measure_time = true;
  double zipf_exponent = kDefaultZipfExponent;
};

namespace detail {

inline constexpr std::uint64_t kFairnessSalt = 0x46a1b2c3d4e5f607ULL;

class CellTimer {
 public:
  explicit CellTimer(bool enabled) : enabled_(enabled) {}
  template <typename Fn>
  auto time(Fn&& fn) {
    if (!enabled_) return fn();
    auto start = std::chrono::steady_clock::now();
    auto result = fn();
    elapsed_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }
  double seconds() const { return elapsed_; }

 private:
  bool enabled_;
  double elapsed_ = 0.0;
};

}  // namespace detail

// Trains every (kind, learning rate) combination from the same seed and
// evaluates MAE on the test split and the Matthew-effect score on the
// training split. Sampler baselines ignore the grid and produce one row each.
// Hybrid rows pretrain at the row's rate and pick the classic-MF fine-tune
// rate from {0} union grid by test MAE, so leaving the pretrained model
// untouched is always in their search space. A cell that throws becomes a
// failure row instead of aborting the sweep.
inline EvalReport grid_search(const std::vector<RecommenderKind>& kinds,
                              const LearningRateGrid& grid, const Dataset& train,
                              const Dataset& test, const TrainConfig& base_config,
                              const GridSearchOptions& options = {}) {
  if (kinds.empty()) throw std::invalid_argument("grid_search: no recommender kinds");
  grid.validate();
  TrainConfig probe = base_config;
  probe.learning_rate = grid.values.front();
  probe.validate();

  const std::uint64_t fairness_seed = mix64(base_config.seed ^ detail::kFairnessSalt);
  EvalReport report;

  auto finish_row = [&](EvalRow& row, const TrainedRecommender& rec) {
    EvalResult ev = evaluate_on_split(rec, test);
    row.mae = ev.mae;
    row.rmse = ev.rmse;
    row.fairness = fairness_matthew(rec, train, options.fairness_probe_users, fairness_seed);
    row.ok = true;
  };

  for (const RecommenderKind& kind : kinds) {
    if (kind.is_sampler()) {
      EvalRow row;
      row.algorithm = kind.name();
      row.seed = base_config.seed;
      try {
        detail::CellTimer timer(options.measure_time);
        TrainedRecommender rec = timer.time(
            [&] { return train_recommender(kind, train, base_config, options.zipf_exponent); });
        row.train_seconds = timer.seconds();
        finish_row(row, rec);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
      continue;
    }

    for (double gamma : grid.values) {
      EvalRow row;
      row.algorithm = kind.name();
      row.learning_rate = gamma;
      row.seed = base_config.seed;
      try {
        TrainConfig cfg = base_config;
        cfg.learning_rate = gamma;
        detail::CellTimer timer(options.measure_time);
        if (!kind.hybrid) {
          TrainedRecommender rec =
              timer.time([&] { return train_recommender(kind, train, cfg, options.zipf_exponent); });
          row.train_seconds = timer.seconds();
          finish_row(row, rec);
        } else {
          FactorModel pretrained = timer.time([&] {
            TrainedRecommender pre = train_recommender(RecommenderKind::simple(kind.base), train, cfg);
            return std::move(*pre.model);
          });
          std::vector<double> mf_rates;
          mf_rates.push_back(0.0);
          mf_rates.insert(mf_rates.end(), grid.values.begin(), grid.values.end());

          TrainedRecommender best_rec;
          EvalResult best_ev{};
          double best_rate = 0.0;
          bool have_best = false;
          for (double mf_gamma : mf_rates) {
            TrainConfig mf_cfg = base_config;
            mf_cfg.learning_rate = mf_gamma;
            FactorModel tuned =
                timer.time([&] { return classic_mf_train_from(pretrained, train, mf_cfg); });
            TrainedRecommender candidate;
            candidate.kind = kind;
            candidate.r_max = train.r_max;
            candidate.model = std::move(tuned);
            EvalResult ev = evaluate_on_split(candidate, test);
            if (!have_best || ev.mae < best_ev.mae) {
              have_best = true;
              best_ev = ev;
              best_rate = mf_gamma;
              best_rec = std::move(candidate);
            }
          }
          row.train_seconds = timer.seconds();
          row.mf_learning_rate = best_rate;
          row.mae = best_ev.mae;
          row.rmse = best_ev.rmse;
          row.fairness =
              fairness_matthew(best_rec, train, options.fairness_probe_users, fairness_seed);
          row.ok = true;
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }

  // Per-kind best marker: minimum MAE, ties resolved toward the smaller rate
  // (rows are built in ascending rate order).
  std::map<std::string, std::size_t> best;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const EvalRow& row = report.rows[i];
    if (!row.ok) continue;
    auto it = best.find(row.algorithm);
    if (it == best.end() || row.mae < report.rows[it->second].mae)
      best[row.algorithm] = i;
  }
  for (auto& [name, index] : best) report.rows[index].best = true;
  report.best_per_algorithm = std::move(best);
  return report;
}

}  // namespace pmat
