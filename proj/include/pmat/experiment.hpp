#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmat/dataset.hpp"
#include "pmat/eval.hpp"
#include "pmat/trainers.hpp"

namespace pmat {

// Invalid experiment configuration; the CLI maps this to exit code 1.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or unusable input data; the CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataFormat { movielens1m, comoda, csv, synthetic };

inline std::string format_name(DataFormat f) {
  switch (f) {
    case DataFormat::movielens1m: return "movielens1m";
    case DataFormat::comoda: return "comoda";
    case DataFormat::csv: return "csv";
    case DataFormat::synthetic: return "synthetic";
  }
  throw std::logic_error("format_name: unknown format");
}

inline std::optional<DataFormat> parse_format(const std::string& name) {
  for (DataFormat f : {DataFormat::movielens1m, DataFormat::comoda, DataFormat::csv,
                       DataFormat::synthetic})
    if (name == format_name(f)) return f;
  return std::nullopt;
}

struct SynthParams {
  std::size_t n_users = 500;
  std::size_t n_items = 200;
  std::size_t ratings_per_user = 20;
};

inline std::vector<RecommenderKind> default_algorithms() {
  return {RecommenderKind::simple(Algo::random),
          RecommenderKind::simple(Algo::zipf),
          RecommenderKind::simple(Algo::classic_mf),
          RecommenderKind::simple(Algo::zeromat),
          RecommenderKind::make_hybrid(Algo::zeromat),
          RecommenderKind::simple(Algo::dotmat),
          RecommenderKind::make_hybrid(Algo::dotmat),
          RecommenderKind::simple(Algo::poissonmat),
          RecommenderKind::make_hybrid(Algo::poissonmat)};
}

// A full benchmark run: one dataset source, a list of algorithms, a learning
// rate grid, and one seed governing init, sampling, split and probes.
struct ExperimentSpec {
  DataFormat format = DataFormat::synthetic;
  std::string dataset_path;  // empty for synthetic
  SynthParams synth;
  std::vector<RecommenderKind> algorithms = default_algorithms();
  LearningRateGrid grid = LearningRateGrid::default_grid();
  double split_fraction = 0.2;
  std::size_t latent_dim = 16;
  std::uint64_t seed = 42;
  std::string output_dir = ".";
  // Timing is off by default so repeated runs produce byte-identical outputs.
  bool include_timings = false;
  std::size_t fairness_probe_users = 500;

  void validate() const {
    if (format == DataFormat::synthetic) {
      if (!dataset_path.empty())
        throw SpecError("synthetic format does not take a dataset path");
      if (synth.n_users == 0 || synth.n_items == 0 || synth.ratings_per_user == 0)
        throw SpecError("synthetic sizes must be positive");
      if (synth.ratings_per_user > synth.n_items)
        throw SpecError("synthetic ratings per user cannot exceed item count");
    } else if (dataset_path.empty()) {
      throw SpecError("dataset path required for format " + format_name(format));
    }
    if (algorithms.empty()) throw SpecError("no algorithms selected");
    try {
      grid.validate();
    } catch (const std::exception& e) {
      throw SpecError(e.what());
    }
    if (!(split_fraction > 0.0) || !(split_fraction < 1.0))
      throw SpecError("split fraction must lie in (0,1)");
    if (latent_dim == 0) throw SpecError("latent dimension must be positive");
    if (fairness_probe_users < 2) throw SpecError("fairness probe users must be >= 2");
    if (output_dir.empty()) throw SpecError("output directory must be set");
  }
};

namespace detail {

inline constexpr std::uint64_t kSplitSalt = 0x1c64dd9a2f03b715ULL;

inline std::string format_sig10(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline void append_csv_row(std::string& out, const EvalRow& row) {
  out += row.algorithm;
  out += ',';
  if (row.learning_rate) out += format_sig10(*row.learning_rate);
  out += ',';
  if (row.ok) out += format_sig10(row.mae);
  out += ',';
  if (row.ok) out += format_sig10(row.rmse);
  out += ',';
  if (row.ok) out += format_sig10(row.fairness);
  out += ',';
  out += format_sig10(row.train_seconds);
  out += ',';
  out += std::to_string(row.seed);
  out += ',';
  out += row.ok ? "ok" : "failed";
  out += '\n';
}

inline std::vector<std::size_t> sorted_row_order(const EvalReport& report) {
  std::vector<std::size_t> order(report.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const EvalRow& ra = report.rows[a];
    const EvalRow& rb = report.rows[b];
    if (ra.algorithm != rb.algorithm) return ra.algorithm < rb.algorithm;
    double ga = ra.learning_rate.value_or(-1.0);
    double gb = rb.learning_rate.value_or(-1.0);
    return ga < gb;
  });
  return order;
}

}  // namespace detail

// Writes the report as plot-ready CSV, rows sorted by (algorithm, learning
// rate), floats at 10 significant digits, LF line endings. Sampler rows leave
// the learning_rate field empty; failed rows leave the metric fields empty.
inline void emit_plot_csv(const EvalReport& report, const std::filesystem::path& path) {
  if (report.rows.empty()) throw std::invalid_argument("emit_plot_csv: empty report");
  std::string out = "algorithm,learning_rate,mae,rmse,fairness,train_seconds,seed,status\n";
  for (std::size_t i : detail::sorted_row_order(report)) detail::append_csv_row(out, report.rows[i]);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << out;
  file.flush();
  if (!file) throw std::runtime_error("write failed for " + path.string());
}

inline nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["format"] = format_name(spec.format);
  j["dataset_path"] = spec.dataset_path;
  if (spec.format == DataFormat::synthetic) {
    j["synth"] = {{"n_users", spec.synth.n_users},
                  {"n_items", spec.synth.n_items},
                  {"ratings_per_user", spec.synth.ratings_per_user}};
  }
  nlohmann::json algos = nlohmann::json::array();
  for (const auto& kind : spec.algorithms) algos.push_back(kind.name());
  j["algorithms"] = std::move(algos);
  j["grid"] = spec.grid.values;
  j["split_fraction"] = spec.split_fraction;
  j["latent_dim"] = spec.latent_dim;
  j["seed"] = spec.seed;
  j["output_dir"] = spec.output_dir;
  j["include_timings"] = spec.include_timings;
  j["fairness_probe_users"] = spec.fairness_probe_users;
  return j;
}

// JSON mirror of the CSV rows plus the resolved spec, so every results file
// records how it was produced.
inline nlohmann::json report_to_json(const ExperimentSpec& spec, const EvalReport& report) {
  nlohmann::json j;
  j["spec"] = spec_to_json(spec);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i : detail::sorted_row_order(report)) {
    const EvalRow& row = report.rows[i];
    nlohmann::json r;
    r["algorithm"] = row.algorithm;
    r["learning_rate"] = row.learning_rate ? nlohmann::json(*row.learning_rate) : nullptr;
    r["mae"] = row.ok ? nlohmann::json(row.mae) : nullptr;
    r["rmse"] = row.ok ? nlohmann::json(row.rmse) : nullptr;
    r["fairness"] = row.ok ? nlohmann::json(row.fairness) : nullptr;
    r["train_seconds"] = row.train_seconds;
    r["seed"] = row.seed;
    r["status"] = row.ok ? "ok" : "failed";
    if (!row.ok) r["error"] = row.error;
    if (row.mf_learning_rate) r["mf_learning_rate"] = *row.mf_learning_rate;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  nlohmann::json best;
  for (const auto& [name, index] : report.best_per_algorithm) {
    const EvalRow& row = report.rows[index];
    nlohmann::json b;
    b["learning_rate"] = row.learning_rate ? nlohmann::json(*row.learning_rate) : nullptr;
    b["mae"] = row.mae;
    best[name] = std::move(b);
  }
  j["best_per_algorithm"] = std::move(best);
  return j;
}

inline Dataset load_dataset(const ExperimentSpec& spec) {
  if (spec.format == DataFormat::synthetic)
    return synth_zipf_dataset(spec.synth.n_users, spec.synth.n_items,
                              spec.synth.ratings_per_user, spec.seed);
  std::ifstream file(spec.dataset_path, std::ios::binary);
  if (!file) throw InputError("cannot read " + spec.dataset_path);
  try {
    switch (spec.format) {
      case DataFormat::movielens1m: return parse_movielens_1m(file);
      case DataFormat::comoda: return parse_comoda(file);
      case DataFormat::csv: return parse_generic_csv(file);
      default: break;
    }
  } catch (const std::exception& e) {
    throw InputError(spec.dataset_path + ": " + e.what());
  }
  throw std::logic_error("load_dataset: unreachable");
}

struct ExperimentOutcome {
  EvalReport report;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
};

// Ingest, split, sweep, and persist results.csv / results.json. Output files
// are written to temporaries and renamed, so an aborted run leaves no partial
// results behind. Prints a per-algorithm best-MAE summary to `log`.
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec, std::ostream& log = std::cout) {
  spec.validate();
  Dataset ds = load_dataset(spec);

  Dataset train, test;
  try {
    auto split = train_test_split(ds, spec.split_fraction, mix64(spec.seed ^ detail::kSplitSalt));
    train = std::move(split.first);
    test = std::move(split.second);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }

  TrainConfig base;
  base.latent_dim = spec.latent_dim;
  base.seed = spec.seed;
  base.learning_rate = spec.grid.values.front();

  GridSearchOptions options;
  options.fairness_probe_users = spec.fairness_probe_users;
  options.measure_time = spec.include_timings;

  EvalReport report = grid_search(spec.algorithms, spec.grid, train, test, base, options);

  std::filesystem::path out_dir(spec.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory " + out_dir.string());

  std::filesystem::path csv_path = out_dir / "results.csv";
  std::filesystem::path json_path = out_dir / "results.json";
  std::filesystem::path csv_tmp = out_dir / "results.csv.tmp";
  std::filesystem::path json_tmp = out_dir / "results.json.tmp";
  try {
    emit_plot_csv(report, csv_tmp);
    std::ofstream json_file(json_tmp, std::ios::binary | std::ios::trunc);
    if (!json_file) throw std::runtime_error("cannot write " + json_tmp.string());
    json_file << report_to_json(spec, report).dump(2) << '\n';
    json_file.flush();
    if (!json_file) throw std::runtime_error("write failed for " + json_tmp.string());
    json_file.close();
    std::filesystem::rename(csv_tmp, csv_path);
    std::filesystem::rename(json_tmp, json_path);
  } catch (const std::exception& e) {
    std::filesystem::remove(csv_tmp, ec);
    std::filesystem::remove(json_tmp, ec);
    throw InputError(e.what());
  }

  log << "dataset: " << (spec.format == DataFormat::synthetic
                             ? "synthetic " + std::to_string(spec.synth.n_users) + "x" +
                                   std::to_string(spec.synth.n_items)
                             : spec.dataset_path)
      << "  train=" << train.triples.size() << " test=" << test.triples.size() << "\n";
  log << "algorithm            best_lr      mae        rmse       fairness\n";
  for (const auto& [name, index] : report.best_per_algorithm) {
    const EvalRow& row = report.rows[index];
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %-12s %-10.6f %-10.6f %+.4f\n", name.c_str(),
                  row.learning_rate ? detail::format_sig10(*row.learning_rate).c_str() : "-",
                  row.mae, row.rmse, row.fairness);
    log << line;
  }
  for (const EvalRow& row : report.rows)
    if (!row.ok) log << "failed: " << row.algorithm << " (" << row.error << ")\n";

  return {std::move(report), csv_path, json_path};
}

}  // namespace pmat
