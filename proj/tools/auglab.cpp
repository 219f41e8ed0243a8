#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "auglab/experiments.hpp"

namespace {

struct CommonOptions {
  std::vector<std::size_t> dims;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts, const std::string& dim_help) {
  cmd->add_option("--dim", opts.dims, dim_help)->delimiter(',');
  cmd->add_option("--reps", opts.reps, "Replicates")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opts.seed, "Base seed (default: $AUGLAB_SEED or 0)");
  cmd->add_option("--out", opts.out, "Output path (default: stdout)");
  cmd->add_flag("--json", opts.json, "Write JSON instead of CSV");
}

std::size_t single_dim(const CommonOptions& opts, std::size_t fallback) {
  if (opts.dims.empty()) return fallback;
  if (opts.dims.size() != 1) throw auglab::ConfigError("--dim takes a single value here");
  return opts.dims.front();
}

void emit(const auglab::ExperimentReport& report, const CommonOptions& opts) {
  const std::string body = opts.json ? report.to_json() : report.to_csv();
  if (opts.out.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream file(opts.out, std::ios::binary);
  if (!file) throw auglab::ConfigError("cannot open output file " + opts.out);
  file << body;
  for (const auto& s : report.summary()) {
    std::cout << s.grid_key << ' ' << s.metric << " mean=" << auglab::format_double(s.mean)
              << " se=" << auglab::format_double(s.se) << '\n';
  }
}

std::uint64_t default_seed() {
  const char* env = std::getenv("AUGLAB_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(env, &pos);
    if (pos != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw auglab::ConfigError(std::string("AUGLAB_SEED is not an unsigned integer: ") + env);
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace auglab;
  CLI::App app{"Data augmentation efficiency lab"};
  app.require_subcommand(1);

  CommonOptions opts;
  try {
    opts.seed = default_seed();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  auto* flip = app.add_subcommand("flip", "Gaussian mean under the flip group");
  add_common(flip, opts, "Dimension (even)");

  std::vector<double> lambdas{1.0, 5.0, 10.0};
  std::string poisson_group;
  auto* poisson = app.add_subcommand("poisson", "Poisson rates under the flip group");
  add_common(poisson, opts, "Dimension");
  poisson->add_option("--lambda", lambdas, "Rate grid")->delimiter(',');
  poisson->add_option("--group", poisson_group, "Group spec, e.g. trivial:100 (default flip:<dim>)");

  std::size_t circ_p = 1;
  auto* circ = app.add_subcommand("circ", "Circular-shift augmentation for a two-layer network");
  add_common(circ, opts, "Dimension grid, comma separated");
  circ->add_option("--width", circ_p, "Output width p")->check(CLI::PositiveNumber);

  std::string design = "identity";
  double noise = 1.0;
  auto* linreg = app.add_subcommand("linreg", "ERM, aDIST and cERM for permutation-invariant regression");
  add_common(linreg, opts, "Number of features p");
  linreg->add_option("--design", design, "identity or random")
      ->check(CLI::IsMember({"identity", "random"}));
  linreg->add_option("--noise", noise, "Noise standard deviation");

  ReluGdConfig relu_cfg;
  auto* relu = app.add_subcommand("relu", "Two-layer ReLU network trained by augmented GD");
  add_common(relu, opts, "Input dimension");
  relu->add_option("--n", relu_cfg.n, "Training samples");
  relu->add_option("--width", relu_cfg.m, "Hidden width m");
  relu->add_option("--margin", relu_cfg.gamma, "Data margin gamma");
  relu->add_option("--lr", relu_cfg.eta, "Step size");
  relu->add_option("--steps", relu_cfg.steps, "GD steps (0 = schedule)");
  relu->add_option("--epsilon", relu_cfg.epsilon, "Target risk");
  relu->add_option("--group", relu_cfg.group, "shift or trivial");
  relu->add_flag("--expand-plain", relu_cfg.expand_plain, "Train on the expanded dataset instead");

  SphereConfig sphere_cfg;
  auto* sphere = app.add_subcommand("sphere", "Augmented KDE for a spherically symmetric marginal");
  add_common(sphere, opts, "Ambient dimension p");
  sphere->add_option("--n", sphere_cfg.n, "Sample size");
  sphere->add_option("--bandwidth", sphere_cfg.bandwidth, "KDE bandwidth (0 = rule of thumb)");
  sphere->add_option("--rotations", sphere_cfg.rotations, "Direction draws per run");

  SgdConfig sgd_cfg;
  std::string sgd_group = "flip:4";
  std::string schedule = "constant";
  std::size_t sgd_n = 200;
  auto* sgd = app.add_subcommand("sgd", "Augmented SGD on a Gaussian location model");
  add_common(sgd, opts, "Unused; the group spec fixes the dimension");
  sgd->add_option("--group", sgd_group, "Group spec, e.g. shift:8");
  sgd->add_option("--n", sgd_n, "Sample size");
  sgd->add_option("--lr", sgd_cfg.eta0, "Initial step size");
  sgd->add_option("--schedule", schedule, "constant or inverse_t")
      ->check(CLI::IsMember({"constant", "inverse_t"}));
  sgd->add_option("--batch", sgd_cfg.batch_size, "Batch size");
  sgd->add_option("--steps", sgd_cfg.max_steps, "SGD steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*flip) {
      emit(run_flip_experiment(single_dim(opts, 100), opts.reps, opts.seed), opts);
    } else if (*poisson) {
      const std::size_t d = single_dim(opts, 100);
      std::optional<FiniteGroup> group;
      if (!poisson_group.empty()) group = parse_group_spec(poisson_group);
      emit(run_poisson_experiment(lambdas, d, opts.reps, opts.seed, group), opts);
    } else if (*circ) {
      const std::vector<std::size_t> grid = opts.dims.empty() ? std::vector<std::size_t>{4, 8, 16} : opts.dims;
      emit(run_circular_experiment(grid, circ_p, opts.reps, opts.seed), opts);
    } else if (*linreg) {
      const Design dsg = design == "identity" ? Design::identity : Design::random;
      emit(run_linreg_experiment(single_dim(opts, 10), dsg, noise, opts.reps, opts.seed), opts);
    } else if (*relu) {
      relu_cfg.d = single_dim(opts, relu_cfg.d);
      relu_cfg.seed = opts.seed;
      emit(run_relu_gd_experiment(relu_cfg), opts);
    } else if (*sphere) {
      sphere_cfg.p = single_dim(opts, sphere_cfg.p);
      sphere_cfg.reps = opts.reps;
      sphere_cfg.seed = opts.seed;
      emit(run_spherical_density(sphere_cfg), opts);
    } else if (*sgd) {
      sgd_cfg.schedule = schedule == "constant" ? LearningRate::constant : LearningRate::inverse_t;
      sgd_cfg.seed = opts.seed;
      emit(run_sgd_experiment(sgd_group, sgd_n, sgd_cfg, opts.reps), opts);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
