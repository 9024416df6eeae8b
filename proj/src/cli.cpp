// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cfgnn/checkpoint.hpp"
#include "cfgnn/dataset.hpp"
#include "cfgnn/eval.hpp"
#include "cfgnn/train.hpp"

namespace cfgnn {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  std::string config;

  // gen-data
  std::string scenarios;
  std::size_t count = 0;
  bool no_label = false;
  // shared paths
  std::string in;
  std::string out;
  std::string data;
  std::string model;
  std::string report_dir;
  // train
  std::string metrics;
  std::string best;
  std::string resume;
  bool keep_epochs = false;
  std::size_t epochs = 0;
  // flops
  std::string grid;
  std::string mode = "instrumented";
  bool with_solver = false;
};

KeyValueConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  try {
    return KeyValueConfig::load(path);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

DatasetOptions dataset_options(const Options& o, std::ostream& err) {
  const KeyValueConfig kv = load_config(o.config);
  DatasetOptions opts;
  try {
    opts.radio.apply_overrides(kv);
    opts.morphologies.apply_overrides(kv);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  opts.threads = o.threads;
  opts.log = &err;
  return opts;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_grid(const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto x = item.find('x');
    std::size_t m = 0, k = 0;
    try {
      std::size_t used_m = 0, used_k = 0;
      if (x == std::string::npos) throw std::invalid_argument("no x");
      m = std::stoul(item.substr(0, x), &used_m);
      k = std::stoul(item.substr(x + 1), &used_k);
      if (used_m != x || used_k != item.size() - x - 1 || m == 0 || k == 0) throw std::invalid_argument("bad");
    } catch (const std::exception&) {
      throw UsageError("grid entry '" + item + "': expected <M>x<K>");
    }
    out.emplace_back(m, k);
  }
  if (out.empty()) throw UsageError("grid is empty");
  return out;
}

int cmd_gen_data(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<ScenarioSpec> specs;
  try {
    specs = parse_scenarios(o.scenarios, o.count);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  DatasetOptions opts = dataset_options(o, err);
  opts.label = !o.no_label;
  const auto samples = generate_dataset(specs, o.seed, opts);
  write_dataset(o.out, samples);
  out << "wrote " << samples.size() << " samples to " << o.out << "\n";
  return kExitOk;
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  const DatasetOptions opts = dataset_options(o, err);
  auto samples = read_dataset(o.in);
  const std::size_t dropped = label_dataset(samples, opts);
  write_dataset(o.out, samples);
  out << "labeled " << samples.size() << " samples (" << dropped << " skipped) into " << o.out << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  TrainConfig cfg;
  try {
    cfg = TrainConfig::from_config(load_config(o.config));
    if (sub.count("--seed")) cfg.seed = o.seed;
    if (o.epochs > 0) cfg.epochs = o.epochs;
    cfg.threads = o.threads;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto samples = read_dataset(o.data);
  const Split split = split_dataset(samples, cfg.val_fraction, cfg.seed);
  out << "training on " << split.train.size() << " samples, validating on " << split.validation.size() << "\n";
  std::optional<Checkpoint> resume;
  if (!o.resume.empty()) resume = load_checkpoint(o.resume);
  TrainOutputs outputs;
  outputs.checkpoint_path = o.out;
  outputs.best_path = o.best.empty() ? o.out + ".best" : o.best;
  outputs.metrics_path = o.metrics.empty() ? o.out + ".metrics.csv" : o.metrics;
  outputs.keep_epoch_checkpoints = o.keep_epochs;
  outputs.log = &out;
  (void)err;
  const TrainResult result = train(split.train, split.validation, cfg, outputs, resume ? &*resume : nullptr);
  out << "finished after epoch " << result.state.epoch << "; best validation loss "
      << format_float(result.state.best_val_loss) << " at epoch " << result.state.best_epoch << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  const Checkpoint ckpt = load_checkpoint(o.model);
  const auto samples = read_dataset(o.data);
  EvalOptions opts;
  opts.radio = dataset_options(o, err).radio;
  opts.threads = o.threads;
  const auto reports = evaluate_by_scenario(ckpt.model, samples, opts);
  std::filesystem::create_directories(o.report_dir);
  const std::filesystem::path dir(o.report_dir);
  for (const auto& r : reports) {
    std::string name = r.scenario;
    for (char& c : name) {
      if (c == ':') c = '_';
    }
    export_cdf_csv(r, (dir / ("cdf_" + name + ".csv")).string());
    out << r.scenario << ": " << r.num_samples << " samples, loss at median " << format_float(r.loss_at_median)
        << "%, 95%-likely loss " << format_float(r.likely95_loss) << "% (equal power "
        << format_float(r.equal_power_loss_at_median) << "% / " << format_float(r.equal_power_likely95_loss)
        << "%)\n";
  }
  export_summary_csv(reports, (dir / "summary.csv").string());
  export_details_csv(reports, (dir / "details.csv").string());
  return kExitOk;
}

int cmd_flops(const Options& o, std::ostream& out) {
  FlopMode mode;
  if (o.mode == "instrumented") {
    mode = FlopMode::kInstrumented;
  } else if (o.mode == "analytic") {
    mode = FlopMode::kAnalytic;
  } else {
    throw UsageError("--mode must be 'instrumented' or 'analytic'");
  }
  const auto grid = parse_grid(o.grid);
  const GnnModel model = o.model.empty() ? GnnModel() : load_checkpoint(o.model).model;
  std::ofstream csv(o.out, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open '" + o.out + "' for writing");
  csv << "M,K,mk_m_plus_k,gnn_flops" << (o.with_solver ? ",solver_flops" : "") << "\n";
  std::vector<double> xs, ys;
  for (const auto& [m, k] : grid) {
    const double x = static_cast<double>(m * k * (m + k));
    const double gnn = count_flops(m, k, model, mode).total();
    csv << m << "," << k << "," << format_float(x) << "," << format_float(gnn);
    if (o.with_solver) csv << "," << format_float(flop_comparison(m, k, model, o.seed).solver);
    csv << "\n";
    xs.push_back(x);
    ys.push_back(gnn);
  }
  if (!csv) throw std::runtime_error("failed writing '" + o.out + "'");
  out << "wrote " << grid.size() << " rows to " << o.out << "\n";
  if (grid.size() >= 2) {
    try {
      const LinearFit fit = fit_linear(xs, ys);
      out << "linear fit on MK(M+K): slope " << format_float(fit.slope) << ", intercept " << format_float(fit.intercept)
          << ", R^2 " << format_float(fit.r2) << "\n";
    } catch (const std::invalid_argument&) {
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cell-free massive MIMO max-min power control with a heterogeneous graph transformer"};
  app.name(args.empty() ? "cfgnn" : args.front());
  app.require_subcommand(1, 1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    if (with_config) sub->add_option("--config", o.config, "key=value overrides (radio.*, <morphology>.*)")->check(CLI::ExistingFile);
  };

  auto* gen = app.add_subcommand("gen-data", "Draw fading realizations and label them with the max-min solver");
  gen->add_option("--scenarios", o.scenarios, "Comma list of <M>x<K>:<morphology>")->required();
  gen->add_option("--count", o.count, "Samples per scenario")->required();
  gen->add_option("--out", o.out, "Output JSON Lines file")->required();
  gen->add_option("--seed", o.seed, "Base seed");
  gen->add_flag("--no-label", o.no_label, "Write fading only");
  add_common(gen, true);

  auto* solve = app.add_subcommand("solve", "Label (or relabel) a dataset with the max-min solver");
  solve->add_option("--in", o.in, "Input JSON Lines file")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", o.out, "Output JSON Lines file")->required();
  add_common(solve, true);

  auto* tr = app.add_subcommand("train", "Train the GNN on a labeled dataset");
  tr->add_option("--data", o.data, "Labeled JSON Lines file")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", o.config, "Training config (key=value)")->check(CLI::ExistingFile);
  tr->add_option("--out", o.out, "Checkpoint path (rewritten every epoch)")->required();
  tr->add_option("--metrics", o.metrics, "Metrics CSV (default <out>.metrics.csv)");
  tr->add_option("--best", o.best, "Best-validation checkpoint (default <out>.best)");
  tr->add_option("--resume", o.resume, "Continue from a checkpoint with optimizer state")->check(CLI::ExistingFile);
  tr->add_option("--epochs", o.epochs, "Override the configured epoch count");
  tr->add_option("--seed", o.seed, "Override the configured seed");
  tr->add_flag("--keep-epochs", o.keep_epochs, "Also keep <out>.epochNNN for every epoch");
  add_common(tr, false);

  auto* ev = app.add_subcommand("eval", "Compare GNN, optimal and equal-power spectral efficiency");
  ev->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", o.data, "Labeled JSON Lines file")->required()->check(CLI::ExistingFile);
  ev->add_option("--report-dir", o.report_dir, "Output directory for CSV reports")->required();
  add_common(ev, true);

  auto* fl = app.add_subcommand("flops", "Count GNN inference FLOPs over a size grid");
  fl->add_option("--model", o.model, "Checkpoint (default: untrained default plan)")->check(CLI::ExistingFile);
  fl->add_option("--grid", o.grid, "Comma list of <M>x<K>")->required();
  fl->add_option("--out", o.out, "Output CSV")->required();
  fl->add_option("--mode", o.mode, "instrumented | analytic");
  fl->add_flag("--solver", o.with_solver, "Also count one bisection solve per grid point");
  fl->add_option("--seed", o.seed, "Seed of the solver instances");
  add_common(fl, false);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("cfgnn");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(o, out, err);
    if (*solve) return cmd_solve(o, out, err);
    if (*tr) return cmd_train(o, *tr, out, err);
    if (*ev) return cmd_eval(o, out, err);
    return cmd_flops(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace cfgnn
