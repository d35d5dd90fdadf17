// Benchmark front end: parse flags into an ExperimentSpec, run the sweep,
// write results.csv / results.json. Exit codes: 0 success, 1 invalid
// configuration, 2 unreadable input or I/O failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmat/pmat.hpp"

namespace {

std::string joined_default_algos() {
  std::string out;
  for (const auto& kind : pmat::default_algorithms()) {
    if (!out.empty()) out += ",";
    out += kind.name();
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recommender benchmark: cold-start matrix factorization sweeps"};

  pmat::ExperimentSpec spec;
  std::string format_str = "synthetic";
  std::vector<std::string> algo_names;
  std::vector<double> grid_values;

  app.add_option("--dataset", spec.dataset_path,
                 "Path to the ratings file (omit for --format synthetic)");
  app.add_option("--format", format_str, "Input format: movielens1m|comoda|csv|synthetic")
      ->capture_default_str();
  app.add_option("--algos", algo_names,
                 "Comma list of algorithms (default: " + joined_default_algos() + ")")
      ->delimiter(',');
  app.add_option("--grid", grid_values, "Comma list of learning rates, ascending")
      ->delimiter(',');
  app.add_option("--split", spec.split_fraction, "Held-out test fraction in (0,1)")
      ->capture_default_str();
  app.add_option("--dim", spec.latent_dim, "Latent dimension")->capture_default_str();
  app.add_option("--seed", spec.seed, "Seed for init, sampling, split and probes")
      ->capture_default_str();
  app.add_option("--out", spec.output_dir, "Output directory for results.csv/results.json")
      ->capture_default_str();
  app.add_option("--synth-users", spec.synth.n_users, "Synthetic dataset: number of users")
      ->capture_default_str();
  app.add_option("--synth-items", spec.synth.n_items, "Synthetic dataset: number of items")
      ->capture_default_str();
  app.add_option("--synth-ratings-per-user", spec.synth.ratings_per_user,
                 "Synthetic dataset: ratings per user")
      ->capture_default_str();
  app.add_option("--probe-users", spec.fairness_probe_users,
                 "Probe users sampled for the fairness score")
      ->capture_default_str();
  app.add_flag("--timings", spec.include_timings,
               "Record wall-clock training time per row (makes outputs run-dependent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    auto format = pmat::parse_format(format_str);
    if (!format) throw pmat::SpecError("unknown format: " + format_str);
    spec.format = *format;

    if (!algo_names.empty()) {
      spec.algorithms.clear();
      for (const auto& name : algo_names) {
        auto kind = pmat::parse_kind(name);
        if (!kind) throw pmat::SpecError("unknown algorithm: " + name);
        spec.algorithms.push_back(*kind);
      }
    }
    if (!grid_values.empty()) spec.grid.values = grid_values;

    pmat::run_experiment(spec);
    return 0;
  } catch (const pmat::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const pmat::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
