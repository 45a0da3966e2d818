#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "alrec/cli/commands.hpp"
#include "alrec/cli/run_config.hpp"
#include "alrec/core/io.hpp"
#include "alrec/trajectory/corpus_io.hpp"

using namespace alrec;
using namespace alrec::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "alrec_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args, const std::string& env = "") {
  const auto out = work_dir() / "stdout.txt", err = work_dir() / "stderr.txt";
  const std::string cmd = "cd '" + work_dir().string() + "' && " + (env.empty() ? "" : env + " ") + "'" + ALREC_CLI_PATH +
                          "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

fs::path write(const std::string& name, const nlohmann::json& doc) {
  const auto p = work_dir() / name;
  write_text_file(p, dump_json(doc));
  return p;
}

/// A small scene and configuration that train in seconds.
nlohmann::json small_scene(bool shape = true) {
  nlohmann::json s = nlohmann::json(eval::default_scene_spec());
  s.erase("seed");
  s["normal_agents"] = {{"pedestrian", 4}, {"car", 4}, {"bike", 2}};
  s["abnormal_agents"] = {{"pedestrian", 1}, {"car", 1}, {"bike", 1}};
  s["duration"] = {120.0, 160.0};
  s["emit_shape"] = shape;
  return s;
}

nlohmann::json fast_config() {
  return {{"emax", 30},
          {"pipeline", {{"augment", {{"copies", 1}}}}},
          {"dae", {{"hidden_sizes", {16, 8}}, {"epochs", 2}}},
          {"alrec", {{"generator_hidden", {8}}, {"discriminator_hidden", {8}}, {"batch_size", 16}}}};
}

/// Synthesizes the small corpus and trains on it once per test binary.
const fs::path& trained_dir() {
  static const fs::path dir = [] {
    write("small_scene.json", small_scene());
    write("fast.json", fast_config());
    EXPECT_EQ(run("synth small_scene.json -o small.json").code, 0);
    const auto r = run("train small.json -o models --config fast.json");
    EXPECT_EQ(r.code, 0) << r.err;
    return work_dir() / "models";
  }();
  return dir;
}

}  // namespace

TEST(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run("").code, kExitValidation); }

TEST(Cli, MissingSpecFileFailsWithoutOutput) {
  const auto r = run("synth does_not_exist.json -o never.json");
  EXPECT_EQ(r.code, kExitIo);
  EXPECT_FALSE(fs::exists(work_dir() / "never.json"));
}

TEST(Cli, SynthCountsAndIsByteIdentical) {
  const auto spec = fs::path(ALREC_SOURCE_DIR) / "configs" / "default_scene.json";
  ASSERT_EQ(run("synth '" + spec.string() + "' -o a.json").code, 0);
  ASSERT_EQ(run("synth '" + spec.string() + "' -o b.json").code, 0);
  const auto a = read_text_file(work_dir() / "a.json");
  EXPECT_EQ(a, read_text_file(work_dir() / "b.json"));
  const auto corpus = trajectory::load_corpus(work_dir() / "a.json");
  EXPECT_EQ(corpus.trajectories.size(), 52u);
  EXPECT_EQ(corpus.provenance.at("seed").get<std::uint64_t>(), 1u);
  EXPECT_TRUE(corpus.provenance.contains("run_config"));
}

TEST(Cli, SeedPrecedence) {
  write("small_scene.json", small_scene());
  write("seeded_scene.json", [] {
    auto s = small_scene();
    s["seed"] = 5;
    return s;
  }());
  write("seed_config.json", {{"seed", 6}});
  auto seed_of = [](const std::string& file) {
    return trajectory::load_corpus(work_dir() / file).provenance.at("seed").get<std::uint64_t>();
  };
  ASSERT_EQ(run("synth small_scene.json -o s1.json", "ALREC_SEED=9").code, 0);
  EXPECT_EQ(seed_of("s1.json"), 9u);
  ASSERT_EQ(run("synth seeded_scene.json -o s2.json", "ALREC_SEED=9").code, 0);
  EXPECT_EQ(seed_of("s2.json"), 5u);
  ASSERT_EQ(run("synth seeded_scene.json -o s3.json --config seed_config.json").code, 0);
  EXPECT_EQ(seed_of("s3.json"), 6u);
  ASSERT_EQ(run("synth seeded_scene.json -o s4.json --config seed_config.json --seed 7").code, 0);
  EXPECT_EQ(seed_of("s4.json"), 7u);
  EXPECT_EQ(run("synth small_scene.json -o s5.json", "ALREC_SEED=abc").code, kExitValidation);
}

TEST(Cli, ConfigErrorsAreListedExhaustively) {
  write("bad.json", {{"emax", 0},
                     {"behavioural_threshold", 1.5},
                     {"typo", 1},
                     {"alrec", {{"max_epochs", 5}, {"pmse_blocks", 4}}}});
  write("small_scene.json", small_scene());
  ASSERT_EQ(run("synth small_scene.json -o small_for_bad.json").code, 0);
  const auto r = run("train small_for_bad.json -o bad_models --config bad.json");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("no training possible"), std::string::npos);
  EXPECT_NE(r.err.find("behavioural_threshold"), std::string::npos);
  EXPECT_NE(r.err.find("'typo'"), std::string::npos);
  EXPECT_NE(r.err.find("'emax'"), std::string::npos);
  EXPECT_NE(r.err.find("not divisible"), std::string::npos);
  EXPECT_FALSE(fs::exists(work_dir() / "bad_models"));
}

TEST(Cli, EmaxZeroRefused) {
  write("small_scene.json", small_scene());
  ASSERT_EQ(run("synth small_scene.json -o small_emax.json").code, 0);
  const auto r = run("train small_emax.json -o emax_models --emax 0");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("no training possible"), std::string::npos);
}

TEST(Cli, ExtendedModeOnBasicCorpusIsMismatch) {
  write("basic_scene.json", small_scene(false));
  ASSERT_EQ(run("synth basic_scene.json -o basic.json").code, 0);
  const auto r = run("train basic.json -o ext_models --feature-mode extended --m 33");
  EXPECT_EQ(r.code, kExitMismatch);
  EXPECT_NE(r.err.find("basic (position-only)"), std::string::npos);
}

TEST(Cli, TrainWritesBundleAndIsDeterministic) {
  const auto& dir = trained_dir();
  for (const char* f : {"dae.json", "scaler.json", "discriminator.json", "training_log.jsonl", "run_config.json",
                        "split.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto r = run("train small.json -o models_again --config fast.json");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("stop_reason: "), std::string::npos);
  for (const char* f : {"dae.json", "scaler.json", "discriminator.json", "training_log.jsonl"}) {
    EXPECT_EQ(read_text_file(dir / f), read_text_file(work_dir() / "models_again" / f)) << f;
  }
  // The embedded configuration reproduces the models.
  const auto r2 = run("train small.json -o models_replay --config models/run_config.json");
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(read_text_file(dir / "discriminator.json"), read_text_file(work_dir() / "models_replay" / "discriminator.json"));
}

TEST(Cli, ClassifyShortTrajectoryIsNoSamples) {
  trained_dir();
  trajectory::Corpus c;
  trajectory::CompleteTrajectory t;
  t.object_id = "short";
  t.road_user = trajectory::RoadUser::Car;
  t.has_shape = true;
  for (int i = 0; i < 5; ++i) t.points.push_back({i, 10.0 * i, 222.0, 0, 0, 20, 40, 0});
  trajectory::recompute_velocities(t.points);
  c.trajectories.push_back(t);
  trajectory::save_corpus(c, work_dir() / "short.json");
  const auto r = run("classify models short.json");
  EXPECT_EQ(r.code, kExitNoSamples);
  EXPECT_NE(r.err.find("no samples"), std::string::npos);
}

TEST(Cli, ClassifyRefusesConflictingWindowFlags) {
  trained_dir();
  EXPECT_EQ(run("classify models small.json --m 26").code, kExitMismatch);
  EXPECT_EQ(run("classify models small.json --feature-mode extended --m 33").code, kExitMismatch);
}

TEST(Cli, ClassifyHeldoutMatchesEvaluate) {
  trained_dir();
  const auto c = run("classify models small.json --heldout -o verdicts.json");
  ASSERT_TRUE(c.code == kExitOk || c.code == kExitAbnormal) << c.err;
  const auto verdicts = read_json_file(work_dir() / "verdicts.json");
  const auto e = run("evaluate small.json --models models -o report.json");
  ASSERT_EQ(e.code, 0) << e.err;
  const auto report = read_json_file(work_dir() / "report.json");
  nlohmann::json nda;
  for (const auto& row : report.at("samples")) {
    if (row.at("model") == "alrec" && row.at("road_user") == "all") nda = row.at("nda");
  }
  EXPECT_EQ(verdicts.at("metrics").at("nda"), nda);
  EXPECT_NE(report.at("notes").at(0).get<std::string>().find("held-out split"), std::string::npos);
}

TEST(Cli, TamperedScalerRefused) {
  trained_dir();
  fs::remove_all(work_dir() / "tampered");
  fs::copy(trained_dir(), work_dir() / "tampered");
  auto scaler = read_json_file(work_dir() / "tampered" / "scaler.json");
  scaler["max"][1] = scaler["max"][1].get<double>() + 1.0;
  write("tampered/scaler.json", scaler);
  const auto r = run("classify tampered small.json");
  EXPECT_EQ(r.code, kExitMismatch);
  EXPECT_NE(r.err.find("content hash"), std::string::npos);
}

TEST(Cli, EvaluateIsReproducibleAndSweeps) {
  trained_dir();
  ASSERT_EQ(run("evaluate small.json --models models -o r1.json --sweep-thresholds --plots").code, 0);
  ASSERT_EQ(run("evaluate small.json --models models -o r2.json --sweep-thresholds --plots").code, 0);
  EXPECT_EQ(read_text_file(work_dir() / "r1.json"), read_text_file(work_dir() / "r2.json"));
  EXPECT_TRUE(fs::exists(work_dir() / "r1.txt"));
  EXPECT_TRUE(fs::exists(work_dir() / "r1.svg"));
  const auto report = read_json_file(work_dir() / "r1.json");
  std::size_t alrec_rows = 0;
  for (const auto& row : report.at("sweep")) alrec_rows += row.at("model") == "alrec" ? 1 : 0;
  EXPECT_EQ(alrec_rows, 20u);
  EXPECT_EQ(report.at("run_config").at("seed"), 1);
}

TEST(Cli, EvaluateRefusesUnlabelledCorpus) {
  trained_dir();
  auto corpus = trajectory::load_corpus(work_dir() / "small.json");
  for (auto& t : corpus.trajectories) t.label = trajectory::TrajectoryLabel::Unlabelled;
  trajectory::save_corpus(corpus, work_dir() / "unlabelled.json");
  const auto r = run("evaluate unlabelled.json --models models -o never_report.json");
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("classify"), std::string::npos);
  EXPECT_FALSE(fs::exists(work_dir() / "never_report.json"));
  const auto c = run("classify models unlabelled.json -o unlabelled_verdicts.json");
  EXPECT_TRUE(c.code == kExitOk || c.code == kExitAbnormal);
  EXPECT_FALSE(read_json_file(work_dir() / "unlabelled_verdicts.json").contains("metrics"));
}

// ---- in-process configuration resolution ---------------------------------------

TEST(RunConfig, DefaultsPerMode) {
  const auto basic = resolve_run_config({});
  EXPECT_EQ(basic.seed, 1u);
  EXPECT_EQ(basic.pipeline.m, 31u);
  EXPECT_EQ(basic.alrec.pmse_blocks, 5u);
  EXPECT_EQ(basic.alrec.max_epochs, 200000u);
  Overrides ext;
  ext.feature_mode = "extended";
  ext.m = 33;
  const auto e = resolve_run_config(ext);
  EXPECT_EQ(e.alrec.pmse_blocks, 8u);
  EXPECT_TRUE(e.dae.extended_extra_layer);
  EXPECT_EQ(trajectory::sample_length(e.feature_mode(), e.pipeline.m) % e.alrec.pmse_blocks, 0u);
}

TEST(RunConfig, ExtendedWithBasicWindowLengthRejected) {
  Overrides ext;
  ext.feature_mode = "extended";  // m = 31 gives N = 218, not divisible by 8
  EXPECT_THROW(resolve_run_config(ext), ValidationError);
}

TEST(RunConfig, JsonRoundTripsThroughConfigFile) {
  Overrides o;
  o.seed = 77;
  o.emax = 1234;
  o.sweep_thresholds = true;
  const auto c = resolve_run_config(o);
  const auto path = write("roundtrip.json", to_json(c));
  Overrides from_file;
  from_file.config_path = path.string();
  const auto back = resolve_run_config(from_file);
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
}
