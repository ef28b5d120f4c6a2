#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scribblevs/common.hpp"
#include "scribblevs/data/augment.hpp"
#include "scribblevs/data/dataset.hpp"
#include "scribblevs/dcs.hpp"
#include "scribblevs/losses.hpp"
#include "scribblevs/mean_teacher.hpp"
#include "scribblevs/metrics.hpp"
#include "scribblevs/model/unet.hpp"
#include "scribblevs/rng.hpp"
#include "scribblevs/rpd.hpp"
#include "scribblevs/schedule.hpp"
#include "scribblevs/train/checkpoint.hpp"
#include "scribblevs/train/config.hpp"

namespace scribblevs {

/// Per-step log entry. Every numeric field must be finite; violations abort
/// the run with a diagnostic dump.
struct IterationRecord {
  int64_t iter = 0;
  double l_sup = 0.0;
  double l_pl = 0.0;
  double l_total = 0.0;
  double lambda = 0.0;
  double lr = 0.0;
  std::string dcs_winner = "none";  // "student", "teacher", or "none"
  double pseudo_active_fraction = 0.0;
  double pseudo_accuracy = 1.0;  // agreement with dense truth on active pixels
  bool has_accuracy = false;     // dense masks were available for the batch
};

/// Validation or test metrics at one checkpointing step.
struct EvalRecord {
  int64_t iter = 0;  // completed optimization steps
  std::string split;
  std::vector<double> dice_per_class;
  std::vector<double> hd95_per_class;
  double mean_dice = 0.0;  // over foreground classes
  double mean_hd95 = 0.0;
};

struct Batch {
  std::vector<Sample> samples;
  std::vector<int> source_ids;  // dataset ids, for diagnostics
};

struct TrainerState {
  TrainingConfig cfg;
  UNet<float> net;
  ParamStore<float> student;
  ParamStore<float> teacher;  // same layout; gradient half unused
  std::vector<float> momentum;
  WarmupSchedule warmup;
  PolyLRSchedule poly;
  int64_t iter = 0;  // next step index
};

inline TrainerState init_trainer(const TrainingConfig& cfg, int num_classes) {
  cfg.validate();
  TrainerState st;
  st.cfg = cfg;
  const UNetConfig net_cfg{1, num_classes, cfg.net.base_width, cfg.net.depth};
  st.net = UNet<float>(net_cfg, st.student);
  st.net.init(st.student, derive_seed(cfg.seed, 0));
  st.teacher = st.student;  // exact copy before the first step
  st.momentum.assign(st.student.values.size(), 0.0f);
  st.warmup = WarmupSchedule{cfg.t_warm};
  st.poly = PolyLRSchedule{cfg.lr, cfg.max_iters};
  return st;
}

inline Checkpoint make_checkpoint(const TrainerState& st, int64_t completed_iters) {
  return Checkpoint{st.net.cfg, completed_iters, st.student.values, st.teacher.values, st.momentum};
}

/// Restores both parameter sets and the optimizer buffer; the state's iter
/// counter resumes at the checkpoint position.
inline TrainerState restore_trainer(const TrainingConfig& cfg, const Checkpoint& cp) {
  TrainerState st = init_trainer(cfg, cp.net.num_classes);
  if (static_cast<int64_t>(cp.student.size()) != st.student.size()) {
    throw ConfigError("restore_trainer: checkpoint has " + std::to_string(cp.student.size()) +
                      " parameters, the configured network has " + std::to_string(st.student.size()));
  }
  st.student.values = cp.student;
  st.teacher.values = cp.teacher;
  st.momentum = cp.momentum;
  st.iter = cp.iter;
  return st;
}

namespace detail {

inline Tensor3<float> image_tensor(const Sample& s) {
  Tensor3<float> x(1, s.height(), s.width());
  std::copy(s.image.v.begin(), s.image.v.end(), x.v.begin());
  return x;
}

inline void append_logits(const Tensor3<float>& logits, int64_t px_offset, LogitMap<float>& all) {
  const int64_t hw = logits.plane();
  const int k = logits.c;
  for (int c = 0; c < k; ++c) {
    const float* src = logits.v.data() + static_cast<size_t>(c) * hw;
    float* dst = all.values.data() + static_cast<size_t>(px_offset) * k + c;
    for (int64_t i = 0; i < hw; ++i) dst[static_cast<size_t>(i) * k] = src[i];
  }
}

[[noreturn]] inline void abort_non_finite(const std::string& out_dir, int64_t iter, const Batch& batch,
                                          const std::string& note) {
  std::string dump_path = "(no out_dir configured)";
  if (!out_dir.empty()) {
    nlohmann::json dump{{"iter", iter},
                        {"note", note},
                        {"source_ids", batch.source_ids},
                        {"batch_size", batch.samples.size()}};
    std::filesystem::create_directories(out_dir);
    dump_path = (std::filesystem::path(out_dir) / "diagnostic_batch.json").string();
    std::ofstream out(dump_path);
    out << dump.dump(2) << "\n";
  }
  throw TrainingError("train_step: non-finite loss at iter " + std::to_string(iter) + " (" + note +
                      "); offending batch described in " + dump_path);
}

inline void check_record_finite(const IterationRecord& rec, const Batch& batch,
                                const std::string& out_dir) {
  const double fields[] = {rec.l_sup,
                           rec.l_pl,
                           rec.l_total,
                           rec.lambda,
                           rec.lr,
                           rec.pseudo_active_fraction,
                           rec.pseudo_accuracy};
  for (double f : fields) {
    if (!std::isfinite(f)) {
      abort_non_finite(out_dir, rec.iter, batch,
                       "l_sup=" + std::to_string(rec.l_sup) + ", l_pl=" + std::to_string(rec.l_pl));
    }
  }
}

}  // namespace detail

/// One optimization step: student forward, scribble loss, pseudo-label loss
/// against a constant target map, SGD with momentum and poly learning rate,
/// then the exponential-moving-average teacher update.
inline IterationRecord train_step(TrainerState& st, const Batch& batch) {
  const TrainingConfig& cfg = st.cfg;
  if (batch.samples.empty()) throw StructuralError("train_step: empty batch");

  const double lambda = lambda_at(st.warmup, st.iter);
  const double lr = lr_at(st.poly, st.iter);
  const int k = st.net.cfg.num_classes;
  const int n = static_cast<int>(batch.samples.size());

  int64_t total_px = 0;
  for (const Sample& s : batch.samples) total_px += static_cast<int64_t>(s.height()) * s.width();

  std::vector<Tensor3<float>> inputs(batch.samples.size());
  std::vector<UNetCache<float>> caches(batch.samples.size());
  LogitMap<float> student_all(total_px, k);
  ScribbleMask scribbles_all(total_px);
  LabelImage dense_all(1, static_cast<int>(total_px), 0);
  bool have_dense = true;

  // Non-finite logits surface as numeric errors inside this phase; they carry
  // the same diagnostic obligation as a non-finite loss value.
  ProbabilityMap<float> p_student;
  PseudoLabelMap pseudo(total_px);  // all inactive unless a variant fills it
  std::string winner = "none";
  float l_sup = 0.0f, l_pl = 0.0f;
  try {
    int64_t px = 0;
    for (size_t i = 0; i < batch.samples.size(); ++i) {
      const Sample& s = batch.samples[i];
      inputs[i] = detail::image_tensor(s);
      const Tensor3<float> logits = st.net.forward(st.student, inputs[i], &caches[i]);
      detail::append_logits(logits, px, student_all);
      const int64_t hw = logits.plane();
      std::copy(s.scribble.labels.begin(), s.scribble.labels.end(),
                scribbles_all.labels.begin() + px);
      if (s.dense_mask.v.empty()) {
        have_dense = false;
      } else {
        std::copy(s.dense_mask.v.begin(), s.dense_mask.v.end(), dense_all.v.begin() + px);
      }
      px += hw;
    }

    p_student = normalize(student_all);
    l_sup = partial_cross_entropy(p_student, scribbles_all);

    if (cfg.use_pl) {
      LogitMap<float> teacher_all(total_px, k);
      px = 0;
      for (size_t i = 0; i < batch.samples.size(); ++i) {
        const Tensor3<float> logits = st.net.forward(st.teacher, inputs[i], nullptr);
        detail::append_logits(logits, px, teacher_all);
        px += logits.plane();
      }
      const ProbabilityMap<float> p_teacher = normalize(teacher_all);
      if (cfg.use_dcs) {
        CompetitionOutcome<float> outcome = select(p_student, p_teacher, scribbles_all, cfg.tau);
        pseudo = std::move(outcome.pseudo_labels);
        winner = network_name(outcome.winner);
      } else if (cfg.use_argmax) {
        pseudo = argmax_labels(p_teacher);
      } else {
        pseudo = rpd_from_probabilities(p_teacher, cfg.tau);
      }
      l_pl = pl_loss(p_student, pseudo);
    }
  } catch (const NumericError& e) {
    detail::abort_non_finite(cfg.out_dir, st.iter, batch, e.what());
  }

  IterationRecord rec;
  rec.iter = st.iter;
  rec.l_sup = static_cast<double>(l_sup);
  rec.l_pl = static_cast<double>(l_pl);
  rec.lambda = lambda;
  rec.l_total = rec.l_sup + lambda * rec.l_pl;
  rec.lr = lr;
  rec.dcs_winner = winner;
  rec.pseudo_active_fraction = pseudo.active_fraction();
  rec.has_accuracy = have_dense;
  if (have_dense) {
    rec.pseudo_accuracy = pseudo_label_accuracy(pseudo, dense_all).active_accuracy;
  }
  detail::check_record_finite(rec, batch, cfg.out_dir);

  // Loss gradient with respect to the student logits, averaged over the batch.
  std::vector<float> grad = partial_cross_entropy_logit_grad(p_student, scribbles_all);
  if (cfg.use_pl && lambda > 0.0) {
    const std::vector<float> grad_pl = pl_loss_logit_grad(p_student, pseudo);
    const float lam = static_cast<float>(lambda);
    for (size_t i = 0; i < grad.size(); ++i) grad[i] += lam * grad_pl[i];
  }
  const float inv_batch = 1.0f / static_cast<float>(n);
  for (float& g : grad) g *= inv_batch;

  st.student.zero_grad();
  int64_t px = 0;
  for (size_t i = 0; i < batch.samples.size(); ++i) {
    const int h = batch.samples[i].height(), w = batch.samples[i].width();
    const int64_t hw = static_cast<int64_t>(h) * w;
    LogitMap<float> slice(hw, k);
    std::copy(grad.begin() + px * k, grad.begin() + (px + hw) * k, slice.values.begin());
    const Tensor3<float> dlogits = from_logit_grad(slice, h, w);
    st.net.backward(st.student, dlogits, caches[i]);
    px += hw;
  }

  // SGD with momentum; weight decay is added to the gradient.
  const float mu = static_cast<float>(cfg.momentum);
  const float wd = static_cast<float>(cfg.weight_decay);
  const float lrf = static_cast<float>(lr);
  float* w = st.student.values.data();
  const float* g = st.student.grads.data();
  float* v = st.momentum.data();
  for (size_t i = 0; i < st.student.values.size(); ++i) {
    v[i] = mu * v[i] + (g[i] + wd * w[i]);
    w[i] -= lrf * v[i];
  }

  ema_update(std::span<float>(st.teacher.values), std::span<const float>(st.student.values), st.iter,
             cfg.ema_decay);
  ++st.iter;
  return rec;
}

/// Argmax segmentation of one sample under the given parameter set.
inline LabelImage predict_labels(const UNet<float>& net, const ParamStore<float>& ps, const Sample& s) {
  const Tensor3<float> logits = net.forward(ps, detail::image_tensor(s), nullptr);
  const HardLabelMap hard = hard_labels(normalize(to_logit_map(logits)));
  LabelImage out(s.height(), s.width());
  std::copy(hard.labels.begin(), hard.labels.end(), out.v.begin());
  return out;
}

/// Mean per-class Dice and HD95 over a split, plus foreground means. Every
/// sample must carry a dense mask.
inline EvalRecord evaluate_split(const UNet<float>& net, const ParamStore<float>& ps,
                                 const std::vector<Sample>& samples, const std::string& split,
                                 int64_t completed_iters) {
  if (samples.empty()) throw ConfigError("evaluate_split: split '" + split + "' is empty");
  const int k = net.cfg.num_classes;
  EvalRecord rec;
  rec.iter = completed_iters;
  rec.split = split;
  rec.dice_per_class.assign(static_cast<size_t>(k), 0.0);
  rec.hd95_per_class.assign(static_cast<size_t>(k), 0.0);

  double fg_dice = 0.0, fg_hd = 0.0;
  for (const Sample& s : samples) {
    if (s.dense_mask.v.empty()) {
      throw ConfigError("evaluate_split: a sample in '" + split + "' has no dense mask");
    }
    const LabelImage pred = predict_labels(net, ps, s);
    double sample_fg_dice = 0.0, sample_fg_hd = 0.0;
    for (int c = 0; c < k; ++c) {
      const double d = dice_score(pred, s.dense_mask, c);
      const double h = hd95(pred, s.dense_mask, c);
      rec.dice_per_class[static_cast<size_t>(c)] += d;
      rec.hd95_per_class[static_cast<size_t>(c)] += h;
      if (c > 0) {
        sample_fg_dice += d;
        sample_fg_hd += h;
      }
    }
    fg_dice += sample_fg_dice / (k - 1);
    fg_hd += sample_fg_hd / (k - 1);
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (double& d : rec.dice_per_class) d *= inv_n;
  for (double& h : rec.hd95_per_class) h *= inv_n;
  rec.mean_dice = fg_dice * inv_n;
  rec.mean_hd95 = fg_hd * inv_n;
  return rec;
}

inline nlohmann::json iteration_record_json(const IterationRecord& rec) {
  nlohmann::json j{{"type", "iter"},
                   {"iter", rec.iter},
                   {"l_sup", rec.l_sup},
                   {"l_pl", rec.l_pl},
                   {"l_total", rec.l_total},
                   {"lambda", rec.lambda},
                   {"lr", rec.lr},
                   {"dcs_winner", rec.dcs_winner},
                   {"pseudo_active_fraction", rec.pseudo_active_fraction}};
  if (rec.has_accuracy) j["pseudo_accuracy"] = rec.pseudo_accuracy;
  return j;
}

inline nlohmann::json eval_record_json(const EvalRecord& rec, const char* type) {
  return nlohmann::json{{"type", type},
                        {"iter", rec.iter},
                        {"split", rec.split},
                        {"dice_per_class", rec.dice_per_class},
                        {"hd95_per_class", rec.hd95_per_class},
                        {"mean_dice", rec.mean_dice},
                        {"mean_hd95", rec.mean_hd95}};
}

struct TrainOutcome {
  std::vector<IterationRecord> records;
  std::vector<EvalRecord> val_evals;
  EvalRecord test_eval;  // best checkpoint on the test split
  bool has_test_eval = false;
  double best_val_dice = -1.0;
  int64_t best_iter = -1;
  std::string metrics_path;
  std::string best_checkpoint_path;
  std::string final_checkpoint_path;
};

inline std::string checkpoint_name(int64_t completed_iters) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "checkpoint_iter_%06lld.bin",
                static_cast<long long>(completed_iters));
  return buf;
}

/// Full training run: deterministic batch sampling and augmentation, JSON-line
/// metrics log, checkpoints at every evaluation, best-on-validation retention,
/// and a final test-split evaluation of the best checkpoint.
inline TrainOutcome train(const TrainingConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config_echo.json");
    if (!echo) throw IoError("train: cannot write config echo in '" + cfg.out_dir + "'");
    echo << config_to_json(cfg).dump(2) << "\n";
  }

  const Manifest manifest = load_manifest(cfg.data_dir);
  std::vector<Sample> train_samples = load_split(cfg.data_dir, manifest, "train");
  if (cfg.max_train_samples > 0 &&
      train_samples.size() > static_cast<size_t>(cfg.max_train_samples)) {
    train_samples.resize(static_cast<size_t>(cfg.max_train_samples));
  }
  if (train_samples.empty()) throw ConfigError("train: train split is empty");
  const std::vector<Sample> val_samples = load_split(cfg.data_dir, manifest, "val");
  const std::vector<Sample> test_samples = load_split(cfg.data_dir, manifest, "test");

  TrainerState st = init_trainer(cfg, manifest.num_classes);
  Rng batch_rng(derive_seed(cfg.seed, 1));
  Rng aug_rng(derive_seed(cfg.seed, 2));

  TrainOutcome out;
  out.metrics_path = (fs::path(cfg.out_dir) / "metrics.jsonl").string();
  out.best_checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint_best.bin").string();
  out.final_checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint_final.bin").string();
  std::ofstream log(out.metrics_path, std::ios::trunc);
  if (!log) throw IoError("train: cannot open metrics log '" + out.metrics_path + "'");

  const int64_t n_train = static_cast<int64_t>(train_samples.size());
  for (int64_t iter = 0; iter < cfg.max_iters; ++iter) {
    Batch batch;
    batch.samples.reserve(static_cast<size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int64_t idx = batch_rng.uniform_int(0, n_train - 1);
      batch.source_ids.push_back(static_cast<int>(idx));
      Sample s = train_samples[static_cast<size_t>(idx)];
      if (cfg.augment) s = transform(s, random_dihedral(aug_rng));
      batch.samples.push_back(std::move(s));
    }
    const IterationRecord rec = train_step(st, batch);
    log << iteration_record_json(rec).dump() << "\n";
    out.records.push_back(rec);

    const int64_t completed = iter + 1;
    if (completed % cfg.eval_every == 0 || completed == cfg.max_iters) {
      const Checkpoint cp = make_checkpoint(st, completed);
      save_checkpoint((fs::path(cfg.out_dir) / checkpoint_name(completed)).string(), cp);
      if (!val_samples.empty()) {
        const EvalRecord ev = evaluate_split(st.net, st.student, val_samples, "val", completed);
        log << eval_record_json(ev, "eval").dump() << "\n";
        out.val_evals.push_back(ev);
        if (ev.mean_dice > out.best_val_dice) {
          out.best_val_dice = ev.mean_dice;
          out.best_iter = completed;
          save_checkpoint(out.best_checkpoint_path, cp);
        }
      }
    }
  }
  save_checkpoint(out.final_checkpoint_path, make_checkpoint(st, cfg.max_iters));
  if (out.best_iter < 0) {
    out.best_iter = cfg.max_iters;
    save_checkpoint(out.best_checkpoint_path, make_checkpoint(st, cfg.max_iters));
  }

  if (!test_samples.empty()) {
    const Checkpoint best = load_checkpoint(out.best_checkpoint_path);
    ParamStore<float> ps;
    const UNet<float> net(best.net, ps);
    ps.values = best.student;
    out.test_eval = evaluate_split(net, ps, test_samples, "test", best.iter);
    out.has_test_eval = true;
    log << eval_record_json(out.test_eval, "final_eval").dump() << "\n";
  }
  return out;
}

}  // namespace scribblevs
