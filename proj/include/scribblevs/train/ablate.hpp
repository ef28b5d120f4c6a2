#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/train/trainer.hpp"

namespace scribblevs {

/// Sweep definition: the cross product of variants, thresholds, and train-set
/// sizes, each cell trained once per seed.
struct AblateSpec {
  std::vector<std::string> variants = {"arg", "rpd", "full"};
  std::vector<double> taus = {0.5};
  std::vector<int> train_sizes = {0};  // 0 = whole train split
  std::vector<uint64_t> seeds = {1};

  void validate() const {
    if (variants.empty() || taus.empty() || train_sizes.empty() || seeds.empty()) {
      throw ConfigError("ablate: every grid axis needs at least one value");
    }
  }
};

namespace detail {

inline std::string format_tau(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", tau);
  return buf;
}

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
};

inline MetricStats mean_std(const std::vector<double>& xs) {
  MetricStats out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  return out;
}

}  // namespace detail

/// Runs the full sweep and writes one CSV row per cell with per-class Dice
/// mean and standard deviation over the seeds. Each run trains into its own
/// subdirectory of base.out_dir.
inline void ablate(const TrainingConfig& base, const AblateSpec& grid, const std::string& csv_path) {
  grid.validate();
  namespace fs = std::filesystem;

  const Manifest manifest = load_manifest(base.data_dir);
  const int k = manifest.num_classes;

  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw IoError("ablate: cannot open '" + csv_path + "' for writing");
  csv << "variant,tau,train_size,num_seeds";
  for (int c = 0; c < k; ++c) csv << ",dice_class" << c << "_mean,dice_class" << c << "_std";
  csv << ",mean_dice_mean,mean_dice_std\n";

  for (const std::string& variant : grid.variants) {
    for (double tau : grid.taus) {
      for (int size : grid.train_sizes) {
        std::vector<std::vector<double>> per_class(static_cast<size_t>(k));
        std::vector<double> mean_dice;
        for (uint64_t seed : grid.seeds) {
          TrainingConfig cfg = base;
          apply_variant(cfg, variant);
          cfg.tau = tau;
          cfg.max_train_samples = size;
          cfg.seed = seed;
          cfg.out_dir = (fs::path(base.out_dir) /
                         (variant + "_tau" + detail::format_tau(tau) + "_n" + std::to_string(size)) /
                         ("seed" + std::to_string(seed)))
                            .string();
          const TrainOutcome outcome = train(cfg);
          if (!outcome.has_test_eval) {
            throw ConfigError("ablate: dataset '" + base.data_dir + "' has an empty test split");
          }
          for (int c = 0; c < k; ++c) {
            per_class[static_cast<size_t>(c)].push_back(
                outcome.test_eval.dice_per_class[static_cast<size_t>(c)]);
          }
          mean_dice.push_back(outcome.test_eval.mean_dice);
        }

        csv << variant << ',' << detail::format_tau(tau) << ',' << size << ',' << grid.seeds.size();
        for (int c = 0; c < k; ++c) {
          const auto stats = detail::mean_std(per_class[static_cast<size_t>(c)]);
          csv << ',' << detail::format_metric(stats.mean) << ',' << detail::format_metric(stats.stddev);
        }
        const auto stats = detail::mean_std(mean_dice);
        csv << ',' << detail::format_metric(stats.mean) << ',' << detail::format_metric(stats.stddev)
            << '\n';
      }
    }
  }
  csv.close();
  if (!csv) throw IoError("ablate: failed to finish writing '" + csv_path + "'");
}

}  // namespace scribblevs
