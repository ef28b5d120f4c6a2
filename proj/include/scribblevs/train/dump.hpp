#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scribblevs/common.hpp"
#include "scribblevs/data/dataset.hpp"
#include "scribblevs/data/png_io.hpp"
#include "scribblevs/rpd.hpp"
#include "scribblevs/train/checkpoint.hpp"
#include "scribblevs/train/trainer.hpp"

namespace scribblevs {

/// Inactive pixels render in this color so the uncertain region stands out
/// from every class color.
inline constexpr PaletteColor kInactivePanelColor{111, 185, 211};

namespace detail {

/// Left: thresholded pseudo labels (inactive -> file sentinel). Right: plain
/// argmax labels. A two-column sentinel strip separates the panels.
inline LabelImage compose_panels(const PseudoLabelMap& thresholded, const HardLabelMap& argmax, int h,
                                 int w) {
  const int gap = 2;
  LabelImage panel(h, 2 * w + gap, kFileIgnoreValue);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const size_t i = static_cast<size_t>(r) * w + c;
      const int32_t left = thresholded.labels[i];
      panel(r, c) = left == thresholded.inactive_value ? kFileIgnoreValue : left;
      panel(r, w + gap + c) = argmax.labels[i];
    }
  }
  return panel;
}

}  // namespace detail

/// Renders the pseudo-label evolution of a training run: for each requested
/// iteration, side-by-side panels of the teacher's thresholded pseudo labels
/// and its argmax labels, over a handful of validation samples. Also writes a
/// summary.json with the mean active fraction per iteration.
inline void dump_pseudolabels(const std::string& run_dir, const std::string& data_dir,
                              const std::string& out_dir, const std::vector<int64_t>& iters) {
  namespace fs = std::filesystem;
  if (iters.empty()) throw ConfigError("dump_pseudolabels: no iterations requested");

  std::vector<std::string> missing;
  for (int64_t it : iters) {
    const fs::path p = fs::path(run_dir) / checkpoint_name(it);
    if (!fs::exists(p)) missing.push_back(p.string());
  }
  if (!missing.empty()) {
    std::string msg = "dump_pseudolabels: missing checkpoints:";
    for (const std::string& m : missing) msg += " " + m;
    throw IoError(msg);
  }

  const fs::path echo_path = fs::path(run_dir) / "config_echo.json";
  std::ifstream echo(echo_path);
  if (!echo) throw IoError("dump_pseudolabels: cannot read '" + echo_path.string() + "'");
  nlohmann::json echo_json;
  try {
    echo >> echo_json;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("dump_pseudolabels: bad config echo: " + std::string(e.what()));
  }
  const double tau = echo_json.value("tau", 0.5);

  const Manifest manifest = load_manifest(data_dir);
  std::vector<Sample> samples = load_split(data_dir, manifest, "val");
  if (samples.empty()) samples = load_split(data_dir, manifest, "train");
  if (samples.empty()) throw ConfigError("dump_pseudolabels: dataset has no val or train samples");
  if (samples.size() > 8) samples.resize(8);

  fs::create_directories(out_dir);
  nlohmann::json summary;
  summary["tau"] = tau;
  summary["num_samples"] = samples.size();

  for (int64_t it : iters) {
    const Checkpoint cp = load_checkpoint((fs::path(run_dir) / checkpoint_name(it)).string());
    ParamStore<float> ps;
    const UNet<float> net(cp.net, ps);
    ps.values = cp.teacher;

    double active_sum = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
      const Sample& s = samples[i];
      const Tensor3<float> logits = net.forward(ps, detail::image_tensor(s), nullptr);
      const ProbabilityMap<float> probs = normalize(to_logit_map(logits));
      const PseudoLabelMap thresholded = rpd_from_probabilities(probs, tau);
      const HardLabelMap argmax = hard_labels(probs);
      active_sum += thresholded.active_fraction();

      char name[48];
      std::snprintf(name, sizeof(name), "iter_%06lld_sample_%04zu.png", static_cast<long long>(it), i);
      write_png_indexed((fs::path(out_dir) / name).string(),
                        detail::compose_panels(thresholded, argmax, s.height(), s.width()),
                        kInactivePanelColor);
    }
    summary["active_fraction"][std::to_string(it)] = active_sum / static_cast<double>(samples.size());
  }

  std::ofstream sum_out(fs::path(out_dir) / "summary.json");
  if (!sum_out) throw IoError("dump_pseudolabels: cannot write summary in '" + out_dir + "'");
  sum_out << summary.dump(2) << "\n";
}

}  // namespace scribblevs
