// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdlib>
#include <string>

#include "ektf/cli/app.hpp"
#include "ektf/cli/commands.hpp"
#include "ektf/cli/config.hpp"
#include "ektf/cli/results.hpp"
#include "ektf/error.hpp"
#include "gtest/gtest.h"
#include "json.hpp"
#include "test_support.hpp"

namespace ektf::cli {
namespace {

using ektf::testing::read_file;
using ektf::testing::TempDir;
using ektf::testing::write_file;
using nlohmann::json;

std::string small_config(const std::filesystem::path& out, const std::string& extra = "") {
  return R"([dataset]
source = synthetic
split = 0.7, 0.15, 0.15
split_seed = 3

[synthetic]
rows = 1500
fields = 3
vocab = 12
pairs = 2
rank = 2
seed = 5

[model]
k = 3
kinds = mlp, crossnet
embedding_dim = 2
hidden = 4
cross_layers = 1
init_std = 0.1

[objective]
variant = ektf

[training]
learning_rate = 0.01
batch_size = 256
max_epochs = 2
patience = 1
seed = 11

[output]
dir = )" + out.string() + "\n" + extra;
}

RunConfig parse(const std::string& text) { return parse_run_config(text, "test.cfg"); }

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "ektf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_app(static_cast<int>(argv.size()), argv.data());
}

TEST(Config, ParsesEverySection) {
  TempDir dir;
  const auto c = parse(small_config(dir.path(), R"(step_log = true
[sweep]
k = 1, 6
fusion = mean, sum
variant = vanilla, kd_ctr
seeds = 4, 5
[ablate]
seeds = 9
)"));
  EXPECT_EQ(c.num_students, 3u);
  EXPECT_EQ(c.synthetic.num_rows, 1500u);
  EXPECT_EQ(c.synthetic.vocab_sizes, (std::vector<std::uint32_t>{12}));
  EXPECT_EQ(c.synthetic_seed, 5u);
  EXPECT_DOUBLE_EQ(c.dataset.split.val, 0.15);
  EXPECT_EQ(c.train.model.hidden, (std::vector<std::size_t>{4}));
  EXPECT_EQ(c.train.objective.variant, objective::Variant::kEktf);
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_TRUE(c.step_log);
  EXPECT_EQ(c.sweep.k, (std::vector<std::size_t>{1, 6}));
  EXPECT_EQ(c.sweep.fusion.size(), 2u);
  EXPECT_EQ(c.sweep.variant[1], objective::Variant::kKdCtr);
  EXPECT_EQ(c.ablate.seeds, (std::vector<std::uint64_t>{9}));
}

TEST(Config, CommentsAndBlankLines) {
  const auto c = parse("# header\n\n[model]\nk = 2  # two students\n");
  EXPECT_EQ(c.num_students, 2u);
}

TEST(Config, UnknownKeyIsNamedWithLine) {
  const auto msg = error_of("[model]\nk = 2\nwidth = 3\n");
  EXPECT_NE(msg.find("test.cfg:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("model.width"), std::string::npos) << msg;
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_NE(error_of("[nope]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(error_of("k = 2\n").find("outside of a section"), std::string::npos);
  EXPECT_NE(error_of("[model]\nk = 2\nk = 3\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("[model]\nk\n").find("key = value"), std::string::npos);
  EXPECT_NE(error_of("[model]\nk =\n").find("empty value"), std::string::npos);
  EXPECT_NE(error_of("[model]\nk = two\n").find("integer"), std::string::npos);
  EXPECT_NE(error_of("[model]\nk = -1\n").find("integer"), std::string::npos);
  EXPECT_NE(error_of("[model]\nidentical_init = yes\n").find("true or false"),
            std::string::npos);
  EXPECT_NE(error_of("[training]\nlearning_rate = 1e-3x\n").find("number"), std::string::npos);
  EXPECT_NE(error_of("[model]\nhidden = 4,,4\n").find("empty list"), std::string::npos);
  EXPECT_NE(error_of("[objective]\nvariant = distill\n").find("distill"), std::string::npos);
  EXPECT_NE(error_of("[dataset]\nsplit = 0.5, 0.5\n").find("three"), std::string::npos);
  EXPECT_NE(error_of("[model]\n[section\n").find("malformed"), std::string::npos);
}

TEST(Config, SemanticValidation) {
  EXPECT_FALSE(error_of("[model]\nk = 0\n").empty());
  EXPECT_FALSE(error_of("[training]\npatience = 0\n").empty());
  EXPECT_FALSE(error_of("[dataset]\nsource = csv\n").empty());
  EXPECT_FALSE(error_of("[objective]\nvariant = ektf\nfusion = sum\n").empty());
  EXPECT_FALSE(error_of("[sweep]\nk = 0, 2\n").empty());
}

TEST(Config, KnownKeysCoverSections) {
  const auto keys = known_keys();
  for (const char* key : {"dataset.source", "synthetic.vocab", "model.kinds", "objective.use_exam",
                          "training.patience", "output.dir", "sweep.seeds", "ablate.seeds"}) {
    EXPECT_NE(std::find(keys.begin(), keys.end(), key), keys.end()) << key;
  }
}

TEST(Config, ExampleFileParses) {
  const auto c = load_run_config(EKTF_EXAMPLE_CONFIG);
  EXPECT_EQ(c.num_students, 6u);
  EXPECT_EQ(c.synthetic.num_rows, 200000u);
  EXPECT_EQ(c.ablate.seeds.size(), 5u);
}

TEST(Config, TrainConfigCyclesKindsAndEnablesConcatHead) {
  const auto c = parse("[model]\nkinds = mlp, crossnet\n");
  objective::ObjectiveSpec spec;
  spec.variant = objective::Variant::kVanilla;
  spec.fusion = objective::Fusion::kConcat;
  const auto tc = train_config_for(c, 3, spec, 77);
  EXPECT_EQ(tc.model.kinds, (std::vector<model::StudentKind>{
                                model::StudentKind::kMlp, model::StudentKind::kCrossNet,
                                model::StudentKind::kMlp}));
  EXPECT_TRUE(tc.model.concat_head);
  EXPECT_EQ(tc.seed, 77u);
  EXPECT_NO_THROW(tc.validate());
}

TEST(Results, RowRoundTrip) {
  ResultRow row;
  row.key = {6, "mean", "ektf", 3};
  row.ensemble = {0.4123456789012345, 0.7812345678901234};
  row.best = {0.41, 0.78};
  row.worst = {0.45, 0.70};
  row.gap = row.ensemble.auc - row.best.auc;
  row.error = "";
  const auto back = parse_row(format_row(row));
  EXPECT_EQ(back.key, row.key);
  EXPECT_EQ(back.ensemble, row.ensemble);
  EXPECT_EQ(back.best, row.best);
  EXPECT_EQ(back.worst, row.worst);
  EXPECT_EQ(back.gap, row.gap);
}

TEST(Results, ErrorRowsStayOneLine) {
  ResultRow row;
  row.key = {2, "sum", "ektf", 1};
  row.status = "config_error";
  row.ensemble = row.best = row.worst = {std::nan(""), std::nan("")};
  row.gap = std::nan("");
  row.error = "bad, worse\nworst";
  const auto line = format_row(row);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto back = parse_row(line);
  EXPECT_EQ(back.status, "config_error");
  EXPECT_TRUE(std::isnan(back.ensemble.auc));
  EXPECT_EQ(back.error, "bad; worse worst");
}

TEST(Results, FileHandling) {
  TempDir dir;
  EXPECT_TRUE(read_results(dir / "absent.csv").empty());
  ResultRow row;
  row.key = {1, "mean", "vanilla", 1};
  append_row(dir / "r.csv", row);
  row.key.seed = 2;
  append_row(dir / "r.csv", row);
  const auto text = read_file(dir / "r.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), kResultHeader);
  EXPECT_EQ(read_results(dir / "r.csv").size(), 2u);
  write_file(dir / "foreign.csv", "a,b\n1,2\n");
  EXPECT_THROW(read_results(dir / "foreign.csv"), DataError);
}

TEST(Results, Quartiles) {
  const auto q = quartiles({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(q.q1, 1.75);
  EXPECT_DOUBLE_EQ(q.median, 2.5);
  EXPECT_DOUBLE_EQ(q.q3, 3.25);
  EXPECT_DOUBLE_EQ(quartiles({5}).median, 5.0);
  EXPECT_DOUBLE_EQ(quartiles({1, 2, 10}).median, 2.0);
  EXPECT_THROW(quartiles({}), UsageError);
}

TEST(Results, SummaryAndTrend) {
  std::vector<ResultRow> rows;
  const auto add = [&](std::size_t k, std::string variant, std::uint64_t seed, double auc) {
    ResultRow r;
    r.key = {k, "mean", std::move(variant), seed};
    r.ensemble = {0.4, auc};
    r.best = {0.4, auc - 0.01};
    r.worst = {0.5, auc - 0.05};
    r.gap = 0.01;
    rows.push_back(r);
  };
  add(1, "vanilla", 1, 0.78);
  add(1, "vanilla", 2, 0.80);
  add(6, "vanilla", 1, 0.77);
  add(6, "vanilla", 2, 0.79);
  add(1, "ektf", 1, 0.78);
  add(6, "ektf", 1, 0.79);
  ResultRow failed;
  failed.key = {6, "mean", "ektf", 2};
  failed.status = "training_error";
  rows.push_back(failed);

  const auto groups = summarize(rows);
  ASSERT_EQ(groups.size(), 4u);
  EXPECT_EQ(groups[0].k, 1u);
  EXPECT_EQ(groups[0].variant, "ektf");
  const auto& v6 = groups[3];
  EXPECT_EQ(v6.variant, "vanilla");
  EXPECT_EQ(v6.runs, 2u);
  EXPECT_DOUBLE_EQ(v6.ensemble_auc.median, 0.78);
  EXPECT_EQ(groups[2].failures, 1u);

  const auto t = trends(groups, 0.002);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].variant, "ektf");
  EXPECT_FALSE(t[0].non_increasing);
  EXPECT_EQ(t[1].variant, "vanilla");
  EXPECT_TRUE(t[1].non_increasing);
  EXPECT_EQ(t[1].k_low, 1u);
  EXPECT_EQ(t[1].k_high, 6u);
}

TEST(Ablation, ArmsMatchDefinitions) {
  const auto arms = ablation_arms(objective::ObjectiveSpec{});
  ASSERT_EQ(arms.size(), 5u);
  EXPECT_EQ(arms[0].name, "ektf");
  EXPECT_EQ(arms[1].name, "only_kd");
  EXPECT_FALSE(arms[1].objective.include_dml);
  EXPECT_TRUE(arms[1].objective.include_kd);
  EXPECT_EQ(arms[2].name, "only_dml");
  EXPECT_FALSE(arms[2].objective.include_kd);
  EXPECT_EQ(arms[3].name, "wo_em");
  EXPECT_FALSE(arms[3].objective.use_exam);
  EXPECT_EQ(arms[4].name, "wo_all");
  EXPECT_EQ(arms[4].objective.variant, objective::Variant::kVanilla);
  EXPECT_EQ(arms[4].objective.fusion, objective::Fusion::kMean);
}

class Commands : public ::testing::Test {
 protected:
  TempDir dir;
  std::filesystem::path cfg() const { return dir / "run.cfg"; }
  void write_config(const std::string& extra = "") {
    write_file(cfg(), small_config(dir / "out", extra));
  }
};

TEST_F(Commands, PreprocessWritesCacheAndSummary) {
  write_config();
  ASSERT_EQ(run({"preprocess", "-c", cfg().string()}), kExitOk);
  const auto cache = read_file(dir / "out" / "dataset.cache");
  const auto doc = json::parse(read_file(dir / "out" / "preprocess.json"));
  EXPECT_EQ(doc["source"], "synthetic");
  EXPECT_EQ(doc["fields"].size(), 3u);
  EXPECT_EQ(doc["fields"][0]["vocab_size"], 12);
  EXPECT_TRUE(doc["oov_rate"].is_null());
  const std::size_t n = 1500;
  EXPECT_EQ(doc["rows"]["train"].get<std::size_t>() + doc["rows"]["val"].get<std::size_t>() +
                doc["rows"]["test"].get<std::size_t>(),
            n);
  // Overall positive rate against the generator's mean click probability.
  const double train_n = doc["rows"]["train"], val_n = doc["rows"]["val"],
               test_n = doc["rows"]["test"];
  const double rate = (doc["positive_rate"]["train"].get<double>() * train_n +
                       doc["positive_rate"]["val"].get<double>() * val_n +
                       doc["positive_rate"]["test"].get<double>() * test_n) /
                      static_cast<double>(n);
  const double mean_ctr = doc["mean_true_ctr"];
  EXPECT_NEAR(rate, mean_ctr, 3.0 * std::sqrt(0.25 / static_cast<double>(n)));

  ASSERT_EQ(run({"preprocess", "-c", cfg().string()}), kExitOk);
  EXPECT_EQ(read_file(dir / "out" / "dataset.cache"), cache);
}

TEST_F(Commands, CsvUnknownColumnIsNamed) {
  write_file(dir / "d.csv", "click,user\n1,a\n0,b\n");
  write_file(cfg(), "[dataset]\nsource = csv\npath = " + (dir / "d.csv").string() +
                        "\nfields = user:categorical, price:numeric\nlabel = click\n"
                        "[output]\ndir = " + (dir / "out").string() + "\n");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"preprocess", "-c", cfg().string()}), kExitData);
  const auto err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("price"), std::string::npos) << err;
}

TEST_F(Commands, CsvPreprocessReportsOov) {
  std::string text = "click,user,price\n";
  for (int i = 0; i < 40; ++i) {
    text += std::to_string(i % 2) + "," + (i % 10 == 0 ? "rare" + std::to_string(i) : "u" + std::to_string(i % 3)) +
            "," + std::to_string(i) + "\n";
  }
  write_file(dir / "d.csv", text);
  write_file(cfg(), "[dataset]\nsource = csv\npath = " + (dir / "d.csv").string() +
                        "\nfields = user:categorical:user, price:numeric:context\nlabel = click\n"
                        "min_count = 2\n[output]\ndir = " + (dir / "out").string() + "\n");
  ASSERT_EQ(run({"preprocess", "-c", cfg().string()}), kExitOk);
  const auto doc = json::parse(read_file(dir / "out" / "preprocess.json"));
  EXPECT_EQ(doc["source"], "csv");
  ASSERT_TRUE(doc["oov_rate"].is_object());
  EXPECT_GT(doc["oov_rate"]["train"][0].get<double>(), 0.0);
  EXPECT_EQ(doc["fields"][1]["kind"], "numeric");
}

TEST_F(Commands, TrainWritesArtifactsAndIsDeterministicInStrictMode) {
  write_config("step_log = true\n");
  ASSERT_EQ(run({"--strict-deterministic", "train", "-c", cfg().string()}), kExitOk);
  const auto out = dir / "out";
  const auto summary = read_file(out / "summary.json");
  const auto epochs = read_file(out / "epochs.csv");
  const auto steps = read_file(out / "steps.csv");
  const auto ckpt = read_file(out / "model.ckpt");
  const auto doc = json::parse(summary);
  EXPECT_EQ(doc["K"], 3);
  EXPECT_EQ(doc["test"]["students"].size(), 3u);
  EXPECT_TRUE(doc["test"]["ensemble"].contains("auc"));
  EXPECT_FALSE(doc.contains("wall_seconds"));
  EXPECT_EQ(epochs.substr(0, epochs.find('\n')),
            "epoch,train_loss,val_logloss_ensemble,val_auc_ensemble,val_logloss_1,val_auc_1,"
            "val_logloss_2,val_auc_2,val_logloss_3,val_auc_3");
  EXPECT_EQ(steps.substr(0, steps.find(',', steps.find(',') + 1)), "step,epoch");

  ASSERT_EQ(run({"--strict-deterministic", "train", "-c", cfg().string()}), kExitOk);
  EXPECT_EQ(read_file(out / "summary.json"), summary);
  EXPECT_EQ(read_file(out / "epochs.csv"), epochs);
  EXPECT_EQ(read_file(out / "steps.csv"), steps);
  EXPECT_EQ(read_file(out / "model.ckpt"), ckpt);

  ASSERT_EQ(run({"train", "-c", cfg().string()}), kExitOk);
  EXPECT_TRUE(json::parse(read_file(out / "summary.json")).contains("wall_seconds"));
}

TEST_F(Commands, VanillaSingleStudentEnsembleIsTheStudent) {
  write_file(cfg(), small_config(dir / "out") + "[objective]\n");
  auto text = small_config(dir / "out");
  text.replace(text.find("k = 3"), 5, "k = 1");
  text.replace(text.find("variant = ektf"), 14, "variant = vanilla");
  write_file(cfg(), text);
  ASSERT_EQ(run({"train", "-c", cfg().string()}), kExitOk);
  const auto doc = json::parse(read_file(dir / "out" / "summary.json"));
  EXPECT_EQ(doc["test"]["ensemble"], doc["test"]["students"][0]);
}

TEST_F(Commands, SeedFlagAndOutputDirEnvironment) {
  write_config();
  const auto env_dir = dir / "env_out";
  ::setenv(kOutputDirEnv, env_dir.c_str(), 1);
  const int code = run({"--seed", "99", "--strict-deterministic", "train", "-c", cfg().string()});
  ::unsetenv(kOutputDirEnv);
  ASSERT_EQ(code, kExitOk);
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "summary.json"));
  EXPECT_EQ(json::parse(read_file(env_dir / "summary.json"))["seed"], 99);
}

TEST_F(Commands, ExitCodes) {
  EXPECT_EQ(run({"train", "-c", (dir / "missing.cfg").string()}), kExitConfig);
  write_file(cfg(), "[model]\nwidth = 3\n");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"train", "-c", cfg().string()}), kExitConfig);
  EXPECT_NE(::testing::internal::GetCapturedStderr().find("model.width"), std::string::npos);
  EXPECT_EQ(run({"bogus"}), kExitConfig);
  EXPECT_EQ(run({"report", (dir / "none.csv").string()}), kExitData);
}

TEST_F(Commands, DivergenceExitsWithTrainingCodeAndLastGoodCheckpoint) {
  auto text = small_config(dir / "out");
  text.replace(text.find("learning_rate = 0.01"), 20, "learning_rate = 1e300");
  text.replace(text.find("max_epochs = 2"), 14, "max_epochs = 3");
  write_file(cfg(), text);
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"train", "-c", cfg().string()}), kExitTraining);
  ::testing::internal::GetCapturedStderr();
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "model.last_good.ckpt"));
}

TEST_F(Commands, SweepCountsResumesAndRecordsFailures) {
  write_config("[sweep]\nk = 1, 3\nfusion = mean\nvariant = vanilla, ektf\nseeds = 1, 2\n");
  ::testing::internal::CaptureStderr();
  ASSERT_EQ(run({"sweep", "-c", cfg().string()}), kExitOk);
  const auto path = dir / "out" / "sweep.csv";
  auto rows = read_results(path);
  EXPECT_EQ(rows.size(), 8u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.ok()) << r.error;
    EXPECT_GE(r.best.auc, r.worst.auc);
  }
  const auto full = read_file(path);

  // Rerun: every key is present, nothing is appended.
  ASSERT_EQ(run({"sweep", "-c", cfg().string()}), kExitOk);
  EXPECT_EQ(read_file(path), full);

  // Drop the last row; the rerun recomputes exactly that cell.
  const auto cut = full.rfind('\n', full.size() - 2);
  write_file(path, full.substr(0, cut + 1));
  ASSERT_EQ(run({"sweep", "-c", cfg().string()}), kExitOk);
  EXPECT_EQ(read_file(path), full);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(Commands, SweepRecordsInvalidCombinationsAsErrors) {
  write_config("[sweep]\nk = 2\nfusion = sum\nvariant = vanilla, ektf\nseeds = 1\n");
  ::testing::internal::CaptureStderr();
  ASSERT_EQ(run({"sweep", "-c", cfg().string()}), kExitOk);
  ::testing::internal::GetCapturedStderr();
  const auto rows = read_results(dir / "out" / "sweep.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].ok());
  EXPECT_EQ(rows[1].status, "config_error");
}

TEST_F(Commands, AblateRowsAndWithoutAllEqualsVanilla) {
  write_config("[ablate]\nseeds = 1, 2\n");
  ::testing::internal::CaptureStderr();
  ASSERT_EQ(run({"ablate", "-c", cfg().string()}), kExitOk);
  ::testing::internal::GetCapturedStderr();
  const auto rows = read_results(dir / "out" / "ablation.csv");
  ASSERT_EQ(rows.size(), 10u);
  const auto config = load_run_config(cfg());
  const auto data = prepare_data(config);
  objective::ObjectiveSpec vanilla;
  vanilla.variant = objective::Variant::kVanilla;
  const auto direct = run_cell(config, data.splits, 3, vanilla, "wo_all", 2);
  const auto it = std::find_if(rows.begin(), rows.end(), [](const ResultRow& r) {
    return r.key.variant == "wo_all" && r.key.seed == 2;
  });
  ASSERT_NE(it, rows.end());
  EXPECT_EQ(format_row(*it), format_row(direct));
}

TEST_F(Commands, ReportAggregates) {
  write_config("[sweep]\nk = 1, 2\nfusion = mean\nvariant = vanilla\nseeds = 1, 2, 3\n");
  ::testing::internal::CaptureStderr();
  ASSERT_EQ(run({"sweep", "-c", cfg().string()}), kExitOk);
  ::testing::internal::GetCapturedStderr();
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run({"report", (dir / "out" / "sweep.csv").string(), "-o",
                 (dir / "rep").string()}),
            kExitOk);
  const auto printed = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(printed.find("vanilla/mean"), std::string::npos);
  const auto doc = json::parse(read_file(dir / "rep" / "report.json"));
  ASSERT_EQ(doc["groups"].size(), 2u);
  EXPECT_EQ(doc["groups"][0]["runs"], 3);
  ASSERT_EQ(doc["trends"].size(), 1u);
  EXPECT_EQ(doc["trends"][0]["k_high"], 2);
  const auto csv = read_file(dir / "rep" / "report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

}  // namespace
}  // namespace ektf::cli
