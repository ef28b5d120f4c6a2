#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "scribblevs/common.hpp"

namespace scribblevs {

/// Network size knobs; inputs are single-channel, the class count comes from
/// the dataset manifest.
struct NetSpec {
  int base_width = 16;
  int depth = 4;
};

/// One validated record of every training hyperparameter.
struct TrainingConfig {
  std::string data_dir;
  std::string out_dir;

  double tau = 0.5;
  int batch_size = 12;
  int64_t max_iters = 60000;
  int64_t t_warm = 12000;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double ema_decay = 0.99;
  uint64_t seed = 1;

  // Pseudo-label variant: use_pl gates the pseudo-label loss entirely, the
  // remaining flags pick how targets are built (threshold partition vs plain
  // argmax) and whether the two networks compete for the source role.
  bool use_pl = true;
  bool use_rpd = true;
  bool use_dcs = true;
  bool use_argmax = false;

  int64_t eval_every = 2000;
  bool augment = true;
  int max_train_samples = 0;  // 0 = whole train split; smaller counts truncate
  NetSpec net;

  void validate() const {
    if (data_dir.empty()) throw ConfigError("config: data_dir must not be empty");
    if (out_dir.empty()) throw ConfigError("config: out_dir must not be empty");
    if (!(tau > 0.0 && tau < 1.0)) {
      throw ConfigError("config: tau must lie in (0, 1), got " + std::to_string(tau));
    }
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (max_iters < 1) throw ConfigError("config: max_iters must be >= 1");
    if (t_warm < 1) throw ConfigError("config: t_warm must be >= 1");
    if (t_warm > max_iters) {
      throw ConfigError("config: t_warm (" + std::to_string(t_warm) + ") must be <= max_iters (" +
                        std::to_string(max_iters) + ")");
    }
    if (!(lr > 0.0)) throw ConfigError("config: lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("config: momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("config: weight_decay must be >= 0");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("config: ema_decay must lie in [0, 1)");
    if (use_rpd == use_argmax) {
      throw ConfigError("config: exactly one of use_rpd/use_argmax must be set");
    }
    if (use_dcs && !use_rpd) {
      throw ConfigError("config: use_dcs requires use_rpd");
    }
    if (eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
    if (max_train_samples < 0) throw ConfigError("config: max_train_samples must be >= 0");
    if (net.base_width < 1) throw ConfigError("config: net.base_width must be >= 1");
    if (net.depth < 2) throw ConfigError("config: net.depth must be >= 2");
  }
};

/// Named variants, one per ablation row.
inline void apply_variant(TrainingConfig& cfg, const std::string& name) {
  if (name == "full") {
    cfg.use_pl = true;
    cfg.use_rpd = true;
    cfg.use_dcs = true;
    cfg.use_argmax = false;
  } else if (name == "rpd") {
    cfg.use_pl = true;
    cfg.use_rpd = true;
    cfg.use_dcs = false;
    cfg.use_argmax = false;
  } else if (name == "arg") {
    cfg.use_pl = true;
    cfg.use_rpd = false;
    cfg.use_dcs = false;
    cfg.use_argmax = true;
  } else if (name == "pce") {
    cfg.use_pl = false;
    cfg.use_rpd = true;
    cfg.use_dcs = false;
    cfg.use_argmax = false;
  } else {
    throw ConfigError("config: unknown variant '" + name + "' (expected full, rpd, arg, or pce)");
  }
}

inline std::string variant_name(const TrainingConfig& cfg) {
  if (!cfg.use_pl) return "pce";
  if (cfg.use_argmax) return "arg";
  return cfg.use_dcs ? "full" : "rpd";
}

/// CPU-sized benchmark setting: 64x64 inputs, a narrow shallow network, and a
/// 2000-iteration budget. Explicit config keys still override these.
inline void apply_desk_scale(TrainingConfig& cfg) {
  cfg.batch_size = 4;
  cfg.max_iters = 2000;
  cfg.t_warm = 2000;
  cfg.eval_every = 100;
  cfg.tau = 0.9;
  // Losses are pixel sums, so the rate is ~30x below the long-schedule
  // default; the teacher lag (~20 steps) shrinks with the schedule.
  cfg.lr = 3e-4;
  cfg.ema_decay = 0.95;
  cfg.net.base_width = 8;
  cfg.net.depth = 3;
}

inline nlohmann::json config_to_json(const TrainingConfig& cfg) {
  return nlohmann::json{{"data_dir", cfg.data_dir},
                        {"out_dir", cfg.out_dir},
                        {"tau", cfg.tau},
                        {"batch_size", cfg.batch_size},
                        {"max_iters", cfg.max_iters},
                        {"t_warm", cfg.t_warm},
                        {"lr", cfg.lr},
                        {"momentum", cfg.momentum},
                        {"weight_decay", cfg.weight_decay},
                        {"ema_decay", cfg.ema_decay},
                        {"seed", cfg.seed},
                        {"variant", variant_name(cfg)},
                        {"eval_every", cfg.eval_every},
                        {"augment", cfg.augment},
                        {"max_train_samples", cfg.max_train_samples},
                        {"base_width", cfg.net.base_width},
                        {"depth", cfg.net.depth}};
}

/// Parses a config object. Unknown keys are rejected by name; data_dir and
/// out_dir are required, everything else falls back to the defaults (after
/// the desk_scale preset, when requested).
inline TrainingConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  TrainingConfig cfg;
  if (j.value("desk_scale", false)) apply_desk_scale(cfg);

  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "desk_scale") {
        continue;
      } else if (key == "data_dir") {
        cfg.data_dir = value.get<std::string>();
      } else if (key == "out_dir") {
        cfg.out_dir = value.get<std::string>();
      } else if (key == "tau") {
        cfg.tau = value.get<double>();
      } else if (key == "batch_size") {
        cfg.batch_size = value.get<int>();
      } else if (key == "max_iters") {
        cfg.max_iters = value.get<int64_t>();
      } else if (key == "t_warm") {
        cfg.t_warm = value.get<int64_t>();
      } else if (key == "lr") {
        cfg.lr = value.get<double>();
      } else if (key == "momentum") {
        cfg.momentum = value.get<double>();
      } else if (key == "weight_decay") {
        cfg.weight_decay = value.get<double>();
      } else if (key == "ema_decay") {
        cfg.ema_decay = value.get<double>();
      } else if (key == "seed") {
        cfg.seed = value.get<uint64_t>();
      } else if (key == "variant") {
        apply_variant(cfg, value.get<std::string>());
      } else if (key == "eval_every") {
        cfg.eval_every = value.get<int64_t>();
      } else if (key == "augment") {
        cfg.augment = value.get<bool>();
      } else if (key == "max_train_samples") {
        cfg.max_train_samples = value.get<int>();
      } else if (key == "base_width") {
        cfg.net.base_width = value.get<int>();
      } else if (key == "depth") {
        cfg.net.depth = value.get<int>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: key '" + key + "' has the wrong type: " + e.what());
    }
  }

  for (const char* required : {"data_dir", "out_dir"}) {
    if (!j.contains(required)) {
      throw ConfigError("config: missing required key '" + std::string(required) + "'");
    }
  }
  return cfg;
}

inline TrainingConfig load_training_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace scribblevs
