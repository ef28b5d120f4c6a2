#include "scribblevs/train/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "scribblevs/data/synth.hpp"
#include "scribblevs/train/ablate.hpp"
#include "scribblevs/train/checkpoint.hpp"
#include "scribblevs/train/config.hpp"

using namespace scribblevs;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("scribblevs_trainer_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DatasetSpec small_spec(uint64_t seed) {
  DatasetSpec spec;
  spec.num_samples = 6;
  spec.height = spec.width = 32;
  spec.num_classes = 3;
  spec.seed = seed;
  return spec;
}

TrainingConfig small_config(const std::string& out_dir) {
  TrainingConfig cfg;
  cfg.data_dir = "unused";
  cfg.out_dir = out_dir;
  cfg.batch_size = 2;
  cfg.max_iters = 12;
  cfg.t_warm = 4;
  cfg.eval_every = 6;
  cfg.lr = 1e-4;
  cfg.net.base_width = 4;
  cfg.net.depth = 2;
  return cfg;
}

Batch make_batch(const std::vector<Sample>& samples, std::initializer_list<int> ids) {
  Batch b;
  for (int id : ids) {
    b.samples.push_back(samples[static_cast<size_t>(id)]);
    b.source_ids.push_back(id);
  }
  return b;
}

}  // namespace

TEST(Config, VariantMappingRoundTrips) {
  TrainingConfig cfg;
  for (const char* name : {"full", "rpd", "arg", "pce"}) {
    apply_variant(cfg, name);
    EXPECT_EQ(variant_name(cfg), name);
    cfg.data_dir = "d";
    cfg.out_dir = "o";
    EXPECT_NO_THROW(cfg.validate());
  }
  EXPECT_THROW(apply_variant(cfg, "bogus"), ConfigError);
}

TEST(Config, ValidateRejectsBadCombinations) {
  TrainingConfig cfg;
  cfg.data_dir = "d";
  cfg.out_dir = "o";
  EXPECT_NO_THROW(cfg.validate());

  TrainingConfig bad = cfg;
  bad.t_warm = bad.max_iters + 1;
  EXPECT_THROW(bad.validate(), ConfigError);

  bad = cfg;
  bad.use_rpd = true;
  bad.use_argmax = true;
  EXPECT_THROW(bad.validate(), ConfigError);

  bad = cfg;
  bad.use_rpd = false;
  bad.use_argmax = false;
  EXPECT_THROW(bad.validate(), ConfigError);

  bad = cfg;
  bad.use_argmax = true;
  bad.use_rpd = false;
  bad.use_dcs = true;
  EXPECT_THROW(bad.validate(), ConfigError);

  bad = cfg;
  bad.tau = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);

  bad = cfg;
  bad.data_dir.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, JsonParsingNamesMissingAndUnknownKeys) {
  const nlohmann::json good{{"data_dir", "d"}, {"out_dir", "o"}, {"tau", 0.7}};
  const TrainingConfig cfg = config_from_json(good);
  EXPECT_EQ(cfg.tau, 0.7);
  EXPECT_EQ(cfg.batch_size, 12);
  EXPECT_EQ(cfg.max_iters, 60000);
  EXPECT_EQ(cfg.t_warm, 12000);

  try {
    config_from_json(nlohmann::json{{"out_dir", "o"}});
    FAIL() << "missing data_dir accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("data_dir"), std::string::npos);
  }

  try {
    config_from_json(nlohmann::json{{"data_dir", "d"}, {"out_dir", "o"}, {"taw", 0.5}});
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("taw"), std::string::npos);
  }

  EXPECT_THROW(config_from_json(nlohmann::json{{"data_dir", "d"}, {"out_dir", "o"}, {"tau", "x"}}),
               ConfigError);
}

TEST(Config, DeskScalePresetIsOverridable) {
  const nlohmann::json j{{"data_dir", "d"}, {"out_dir", "o"}, {"desk_scale", true}, {"t_warm", 37}};
  const TrainingConfig cfg = config_from_json(j);
  EXPECT_EQ(cfg.max_iters, 2000);
  EXPECT_EQ(cfg.t_warm, 37);
  EXPECT_EQ(cfg.net.depth, 3);
}

TEST(TrainStep, ScribbleFreeBatchWithoutPseudoLossIsANoOp) {
  const auto samples = generate(small_spec(5));
  TrainingConfig cfg = small_config(fresh_dir("noop").string());
  apply_variant(cfg, "pce");
  cfg.weight_decay = 0.0;

  TrainerState st = init_trainer(cfg, 3);
  Batch batch = make_batch(samples, {0, 1});
  for (Sample& s : batch.samples) {
    std::fill(s.scribble.labels.begin(), s.scribble.labels.end(), kIgnoreLabel);
  }

  const std::vector<float> before = st.student.values;
  const IterationRecord rec = train_step(st, batch);
  EXPECT_EQ(rec.l_sup, 0.0);
  EXPECT_EQ(rec.l_pl, 0.0);
  EXPECT_EQ(rec.l_total, 0.0);
  EXPECT_EQ(st.student.values, before);
  // Step 0 copies the student into the teacher exactly.
  EXPECT_EQ(st.teacher.values, st.student.values);
}

TEST(TrainStep, BitReproducibleAcrossFreshStates) {
  const auto samples = generate(small_spec(6));
  const TrainingConfig cfg = small_config(fresh_dir("repro").string());

  TrainerState a = init_trainer(cfg, 3);
  TrainerState b = init_trainer(cfg, 3);
  const Batch batch = make_batch(samples, {0, 2});
  for (int step = 0; step < 3; ++step) {
    const IterationRecord ra = train_step(a, batch);
    const IterationRecord rb = train_step(b, batch);
    EXPECT_EQ(ra.l_sup, rb.l_sup);
    EXPECT_EQ(ra.l_pl, rb.l_pl);
    EXPECT_EQ(ra.dcs_winner, rb.dcs_winner);
    EXPECT_EQ(ra.pseudo_active_fraction, rb.pseudo_active_fraction);
  }
  EXPECT_EQ(a.student.values, b.student.values);
  EXPECT_EQ(a.teacher.values, b.teacher.values);
  EXPECT_EQ(a.momentum, b.momentum);
}

TEST(TrainStep, ArgmaxVariantActivatesEveryPixel) {
  const auto samples = generate(small_spec(7));
  TrainingConfig cfg = small_config(fresh_dir("argmax").string());
  apply_variant(cfg, "arg");

  TrainerState st = init_trainer(cfg, 3);
  for (int step = 0; step < 3; ++step) {
    const IterationRecord rec = train_step(st, make_batch(samples, {step % 6, (step + 1) % 6}));
    EXPECT_EQ(rec.pseudo_active_fraction, 1.0);
    EXPECT_EQ(rec.dcs_winner, "none");
  }
}

TEST(TrainStep, SchedulesAndDecompositionMatchClosedForms) {
  const auto samples = generate(small_spec(8));
  TrainingConfig cfg = small_config(fresh_dir("sched").string());
  TrainerState st = init_trainer(cfg, 3);
  const WarmupSchedule warmup{cfg.t_warm};
  const PolyLRSchedule poly{cfg.lr, cfg.max_iters};

  for (int step = 0; step < 6; ++step) {
    const IterationRecord rec = train_step(st, make_batch(samples, {step % 6, (step + 2) % 6}));
    EXPECT_EQ(rec.iter, step);
    EXPECT_EQ(rec.lambda, lambda_at(warmup, step));
    EXPECT_EQ(rec.lr, lr_at(poly, step));
    EXPECT_NEAR(rec.l_total, rec.l_sup + rec.lambda * rec.l_pl, 1e-6);
  }
  EXPECT_EQ(lambda_at(warmup, 0), std::exp(-5.0));
}

TEST(TrainStep, TeacherIsExactlyTheEmaRecurrenceOfLoggedStudents) {
  const auto samples = generate(small_spec(9));
  const TrainingConfig cfg = small_config(fresh_dir("purity").string());
  TrainerState st = init_trainer(cfg, 3);

  std::vector<float> replay = st.teacher.values;
  std::vector<std::vector<float>> student_log;
  for (int step = 0; step < 10; ++step) {
    train_step(st, make_batch(samples, {step % 6, (step + 3) % 6}));
    student_log.push_back(st.student.values);
  }
  for (int step = 0; step < 10; ++step) {
    ema_update(std::span<float>(replay), std::span<const float>(student_log[static_cast<size_t>(step)]),
               step, cfg.ema_decay);
  }
  EXPECT_EQ(replay, st.teacher.values);
}

TEST(TrainStep, NonFiniteLogitsAbortWithDiagnosticDump) {
  const auto samples = generate(small_spec(10));
  const fs::path out = fresh_dir("nanabort");
  const TrainingConfig cfg = small_config(out.string());
  TrainerState st = init_trainer(cfg, 3);
  // The classifier bias feeds the logits directly, so the poison cannot be
  // masked by an intervening rectifier.
  st.student.values.back() = std::numeric_limits<float>::quiet_NaN();

  EXPECT_THROW(train_step(st, make_batch(samples, {0, 1})), TrainingError);
  EXPECT_TRUE(fs::exists(out / "diagnostic_batch.json"));
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  const fs::path dir = fresh_dir("ckpt");
  Checkpoint cp;
  cp.net = UNetConfig{1, 3, 4, 2};
  cp.iter = 17;
  for (int i = 0; i < 50; ++i) {
    cp.student.push_back(0.25f * i);
    cp.teacher.push_back(-1.5f * i);
    cp.momentum.push_back(0.125f * i - 2.0f);
  }
  const std::string path = (dir / "cp.bin").string();
  save_checkpoint(path, cp);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.iter, 17);
  EXPECT_EQ(back.net.num_classes, 3);
  EXPECT_EQ(back.net.base_width, 4);
  EXPECT_EQ(back.net.depth, 2);
  EXPECT_EQ(back.student, cp.student);
  EXPECT_EQ(back.teacher, cp.teacher);
  EXPECT_EQ(back.momentum, cp.momentum);

  EXPECT_THROW(load_checkpoint((dir / "absent.bin").string()), IoError);
  std::ofstream junk(dir / "junk.bin", std::ios::binary);
  junk << "not a checkpoint at all";
  junk.close();
  EXPECT_THROW(load_checkpoint((dir / "junk.bin").string()), IoError);
}

TEST(Checkpoint, RestoreRejectsMismatchedTopology) {
  const auto samples = generate(small_spec(11));
  TrainingConfig cfg = small_config(fresh_dir("restore").string());
  TrainerState st = init_trainer(cfg, 3);
  train_step(st, make_batch(samples, {0, 1}));
  const Checkpoint cp = make_checkpoint(st, 1);

  TrainerState back = restore_trainer(cfg, cp);
  EXPECT_EQ(back.iter, 1);
  EXPECT_EQ(back.student.values, st.student.values);
  EXPECT_EQ(back.teacher.values, st.teacher.values);
  EXPECT_EQ(back.momentum, st.momentum);

  TrainingConfig wider = cfg;
  wider.net.base_width = 8;
  EXPECT_THROW(restore_trainer(wider, cp), ConfigError);
}

TEST(Train, EndToEndRunWritesLogCheckpointsAndEcho) {
  const fs::path data = fresh_dir("run_data");
  DatasetSpec spec = small_spec(12);
  save_dataset(data, generate(spec), assign_splits(spec), spec.num_classes);

  const fs::path out = fresh_dir("run_out");
  TrainingConfig cfg = small_config(out.string());
  cfg.data_dir = data.string();

  const TrainOutcome outcome = train(cfg);
  ASSERT_EQ(outcome.records.size(), 12u);
  EXPECT_EQ(outcome.records[0].iter, 0);
  EXPECT_EQ(outcome.records[0].lambda, std::exp(-5.0));
  for (const IterationRecord& rec : outcome.records) {
    EXPECT_TRUE(std::isfinite(rec.l_total));
    EXPECT_NEAR(rec.l_total, rec.l_sup + rec.lambda * rec.l_pl, 1e-6);
  }

  EXPECT_TRUE(fs::exists(out / "config_echo.json"));
  EXPECT_TRUE(fs::exists(out / "metrics.jsonl"));
  EXPECT_TRUE(fs::exists(out / "checkpoint_iter_000006.bin"));
  EXPECT_TRUE(fs::exists(out / "checkpoint_iter_000012.bin"));
  EXPECT_TRUE(fs::exists(out / "checkpoint_best.bin"));
  EXPECT_TRUE(fs::exists(out / "checkpoint_final.bin"));

  ASSERT_EQ(outcome.val_evals.size(), 2u);
  EXPECT_TRUE(outcome.has_test_eval);
  ASSERT_EQ(outcome.test_eval.dice_per_class.size(), 3u);
  // Foreground mean is consistent with the per-class table.
  const double fg =
      (outcome.test_eval.dice_per_class[1] + outcome.test_eval.dice_per_class[2]) / 2.0;
  EXPECT_NEAR(outcome.test_eval.mean_dice, fg, 1e-12);

  // The best checkpoint's validation score is the best of the eval records.
  double best = -1.0;
  for (const EvalRecord& ev : outcome.val_evals) best = std::max(best, ev.mean_dice);
  EXPECT_EQ(outcome.best_val_dice, best);

  const Checkpoint final_cp = load_checkpoint((out / "checkpoint_final.bin").string());
  EXPECT_EQ(final_cp.iter, 12);
}

TEST(Train, MetricsLogIsByteIdenticalAcrossReruns) {
  const fs::path data = fresh_dir("det_data");
  DatasetSpec spec = small_spec(13);
  save_dataset(data, generate(spec), assign_splits(spec), spec.num_classes);

  auto run = [&](const std::string& tag) {
    TrainingConfig cfg = small_config(fresh_dir(tag).string());
    cfg.data_dir = data.string();
    const TrainOutcome outcome = train(cfg);
    std::ifstream in(outcome.metrics_path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  const std::string first = run("det_a");
  const std::string second = run("det_b");
  ASSERT_FALSE(first.empty());
  EXPECT_EQ(first, second);
}

TEST(Train, TruncatedTrainSplitIsHonored) {
  const fs::path data = fresh_dir("trunc_data");
  DatasetSpec spec = small_spec(14);
  save_dataset(data, generate(spec), assign_splits(spec), spec.num_classes);

  TrainingConfig cfg = small_config(fresh_dir("trunc_out").string());
  cfg.data_dir = data.string();
  cfg.max_iters = 2;
  cfg.eval_every = 2;
  cfg.t_warm = 1;
  cfg.max_train_samples = 1;
  EXPECT_NO_THROW(train(cfg));

  cfg.max_train_samples = 0;
  cfg.data_dir = "/nonexistent/nowhere";
  EXPECT_THROW(train(cfg), IoError);
}
