#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scribblevs/common.hpp"
#include "scribblevs/data/dataset.hpp"
#include "scribblevs/data/synth.hpp"
#include "scribblevs/train/ablate.hpp"
#include "scribblevs/train/config.hpp"
#include "scribblevs/train/dump.hpp"
#include "scribblevs/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace scribblevs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct TrainArgs {
  std::string config_path;
  int64_t seed = -1;
  double tau = -1.0;
  std::string variant;
};

int cmd_train(const TrainArgs& args) {
  TrainingConfig cfg = load_training_config(args.config_path);
  if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
  if (args.tau >= 0.0) cfg.tau = args.tau;
  if (!args.variant.empty()) apply_variant(cfg, args.variant);

  const TrainOutcome outcome = train(cfg);
  std::cout << "variant " << variant_name(cfg) << ", " << outcome.records.size() << " iterations\n";
  std::cout << "best val mean Dice " << outcome.best_val_dice << " at iter " << outcome.best_iter
            << "\n";
  if (outcome.has_test_eval) {
    std::cout << "test mean Dice " << outcome.test_eval.mean_dice << ", mean HD95 "
              << outcome.test_eval.mean_hd95 << "\n";
  }
  std::cout << "metrics log: " << outcome.metrics_path << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string out_dir;
  int n = 48;
  int size = 64;
  int classes = 4;
  int64_t seed = 1;
  double noise = 0.15;
  std::string style = "skeleton";
};

int cmd_synth(const SynthArgs& args) {
  DatasetSpec spec;
  spec.num_samples = args.n;
  spec.height = spec.width = args.size;
  spec.num_classes = args.classes;
  spec.seed = static_cast<uint64_t>(args.seed);
  spec.noise_level = args.noise;
  if (args.style == "skeleton") {
    spec.scribble_style = ScribbleStyle::kSkeleton;
  } else if (args.style == "erosion-walk") {
    spec.scribble_style = ScribbleStyle::kErosionWalk;
  } else {
    throw ConfigError("synth: unknown scribble style '" + args.style + "'");
  }
  spec.validate();

  const std::vector<Sample> samples = generate(spec);
  const SplitAssignment splits = assign_splits(spec);
  save_dataset(args.out_dir, samples, splits, spec.num_classes);

  const nlohmann::json echo{{"n", args.n},       {"size", args.size},   {"classes", args.classes},
                            {"seed", args.seed}, {"noise", args.noise}, {"style", args.style}};
  std::ofstream echo_out(fs::path(args.out_dir) / "synth_config.json");
  if (!echo_out) throw IoError("synth: cannot write config echo in '" + args.out_dir + "'");
  echo_out << echo.dump(2) << "\n";

  std::cout << "wrote " << samples.size() << " samples (" << splits.train.size() << " train, "
            << splits.val.size() << " val, " << splits.test.size() << " test) to " << args.out_dir
            << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint_path;
  std::string data_dir;
  std::string report_path;
};

int cmd_eval(const EvalArgs& args) {
  const Checkpoint cp = load_checkpoint(args.checkpoint_path);
  const Manifest manifest = load_manifest(args.data_dir);
  if (manifest.num_classes != cp.net.num_classes) {
    throw ConfigError("eval: checkpoint expects " + std::to_string(cp.net.num_classes) +
                      " classes, dataset has " + std::to_string(manifest.num_classes));
  }
  const std::vector<Sample> test_samples = load_split(args.data_dir, manifest, "test");
  if (test_samples.empty()) throw ConfigError("eval: test split is empty");

  ParamStore<float> ps;
  const UNet<float> net(cp.net, ps);
  ps.values = cp.student;
  const EvalRecord rec = evaluate_split(net, ps, test_samples, "test", cp.iter);

  for (size_t c = 0; c < rec.dice_per_class.size(); ++c) {
    std::printf("class %zu: Dice %.6f  HD95 %.6f\n", c, rec.dice_per_class[c], rec.hd95_per_class[c]);
  }
  std::printf("mean (foreground): Dice %.6f  HD95 %.6f\n", rec.mean_dice, rec.mean_hd95);

  nlohmann::json report = eval_record_json(rec, "eval_report");
  report["checkpoint"] = args.checkpoint_path;
  report["data_dir"] = args.data_dir;
  report["num_samples"] = test_samples.size();
  const std::string report_path =
      args.report_path.empty() ? args.checkpoint_path + ".eval.json" : args.report_path;
  std::ofstream out(report_path);
  if (!out) throw IoError("eval: cannot write report '" + report_path + "'");
  out << report.dump(2) << "\n";
  std::cout << "report: " << report_path << "\n";
  return kExitOk;
}

struct AblateArgs {
  std::string config_path;
  std::vector<std::string> variants = {"arg", "rpd", "full"};
  std::vector<double> taus = {0.5};
  std::vector<int> sizes = {0};
  std::vector<int64_t> seeds = {1};
  std::string csv_path;
};

int cmd_ablate(const AblateArgs& args) {
  const TrainingConfig base = load_training_config(args.config_path);
  AblateSpec grid;
  grid.variants = args.variants;
  grid.taus = args.taus;
  grid.train_sizes = args.sizes;
  grid.seeds.assign(args.seeds.begin(), args.seeds.end());
  const std::string csv_path =
      args.csv_path.empty() ? (fs::path(base.out_dir) / "ablation.csv").string() : args.csv_path;
  fs::create_directories(fs::path(csv_path).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(csv_path).parent_path());
  ablate(base, grid, csv_path);
  std::cout << "ablation table: " << csv_path << "\n";
  return kExitOk;
}

struct DumpArgs {
  std::string run_dir;
  std::string data_dir;
  std::string out_dir;
  std::vector<int64_t> iters;
};

int cmd_dump(const DumpArgs& args) {
  dump_pseudolabels(args.run_dir, args.data_dir, args.out_dir, args.iters);
  std::cout << "panels written to " << args.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scribble-supervised segmentation toolkit"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Run a training job from a JSON config");
  train_cmd->add_option("--config", train_args.config_path, "Path to the JSON config")->required();
  train_cmd->add_option("--seed", train_args.seed, "Override the config seed");
  train_cmd->add_option("--tau", train_args.tau, "Override the confidence threshold");
  train_cmd->add_option("--variant", train_args.variant, "Override the variant (full, rpd, arg, pce)");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scribble dataset");
  synth_cmd->add_option("--out", synth_args.out_dir, "Output dataset directory")->required();
  synth_cmd->add_option("--n", synth_args.n, "Number of samples");
  synth_cmd->add_option("--size", synth_args.size, "Image height and width");
  synth_cmd->add_option("--classes", synth_args.classes, "Number of classes (>= 2)");
  synth_cmd->add_option("--seed", synth_args.seed, "Generator seed");
  synth_cmd->add_option("--noise", synth_args.noise, "Intensity noise level");
  synth_cmd->add_option("--style", synth_args.style, "Scribble style (skeleton, erosion-walk)");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset's test split");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint_path, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval_args.data_dir, "Dataset directory")->required();
  eval_cmd->add_option("--report", eval_args.report_path, "JSON report path");

  AblateArgs ablate_args;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "Sweep variants, thresholds, and train sizes");
  ablate_cmd->add_option("--config", ablate_args.config_path, "Base JSON config")->required();
  ablate_cmd->add_option("--variants", ablate_args.variants, "Variant names")->delimiter(',');
  ablate_cmd->add_option("--taus", ablate_args.taus, "Confidence thresholds")->delimiter(',');
  ablate_cmd->add_option("--sizes", ablate_args.sizes, "Train-set sizes (0 = all)")->delimiter(',');
  ablate_cmd->add_option("--seeds", ablate_args.seeds, "Seeds to aggregate over")->delimiter(',');
  ablate_cmd->add_option("--out", ablate_args.csv_path, "CSV output path");

  DumpArgs dump_args;
  CLI::App* dump_cmd =
      app.add_subcommand("dump-pseudolabels", "Render pseudo-label panels from run checkpoints");
  dump_cmd->add_option("--checkpoint", dump_args.run_dir, "Training run directory")->required();
  dump_cmd->add_option("--data", dump_args.data_dir, "Dataset directory")->required();
  dump_cmd->add_option("--out", dump_args.out_dir, "Panel output directory")->required();
  dump_cmd->add_option("--iters", dump_args.iters, "Checkpoint iterations to render")
      ->required()
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (synth_cmd->parsed()) return cmd_synth(synth_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_args);
    if (dump_cmd->parsed()) return cmd_dump(dump_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
