// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <set>

#include "ektf/datapipe/cache.hpp"
#include "ektf/datapipe/csv.hpp"
#include "ektf/datapipe/discretize.hpp"
#include "ektf/datapipe/synthetic.hpp"
#include "ektf/error.hpp"
#include "ektf/numkit/rng.hpp"
#include "ektf/trainer/metrics.hpp"
#include "gtest/gtest.h"
#include "test_support.hpp"

namespace ektf::datapipe {
namespace {

using ektf::testing::TempDir;
using ektf::testing::write_file;

TEST(Discretize, SmallValuesMapToOne) {
  EXPECT_EQ(numeric_bucket(2.0), 1);
  EXPECT_EQ(numeric_bucket(1.0), 1);
  EXPECT_EQ(numeric_bucket(0.0), 1);
  EXPECT_EQ(numeric_bucket(-5.0), 1);
}

TEST(Discretize, LogSquaredFloor) {
  // (ln 9)^2 = 4.8278, (ln 100)^2 = 21.2076 (high-precision values).
  EXPECT_EQ(numeric_bucket(9.0), 4);
  EXPECT_EQ(numeric_bucket(100.0), 21);
  EXPECT_EQ(discretize_numeric(9.0), "4");
}

TEST(Discretize, NanIsAnError) {
  EXPECT_THROW(numeric_bucket(std::nan("")), DataError);
}

TEST(Discretize, MonotoneAboveTwo) {
  numkit::Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double a = 2.0 + std::exp(rng.uniform() * 12.0) - 1.0 + 1e-9;
    const double b = a + rng.uniform() * 1000.0;
    EXPECT_LE(numeric_bucket(a), numeric_bucket(b));
  }
}

TEST(Vocab, ThresholdSemantics) {
  std::vector<std::string> tokens(12, "a");
  tokens.insert(tokens.end(), 3, "b");
  const Vocab v = Vocab::build(tokens, 10);
  EXPECT_EQ(v.encode("a"), 1u);
  EXPECT_EQ(v.encode("b"), 0u);
  EXPECT_EQ(v.encode("never_seen"), 0u);
  EXPECT_EQ(v.size(), 2u);
}

TEST(Vocab, ThresholdIsInclusive) {
  std::vector<std::string> tokens(10, "x");
  tokens.insert(tokens.end(), 9, "y");
  const Vocab v = Vocab::build(tokens, 10);
  EXPECT_EQ(v.encode("x"), 1u);
  EXPECT_EQ(v.encode("y"), Vocab::kOovId);
}

TEST(Vocab, MinCountOneKeepsEverything) {
  const std::vector<std::string> tokens = {"c", "a", "b", "a"};
  const Vocab v = Vocab::build(tokens, 1);
  std::set<std::uint32_t> ids;
  for (const auto& t : tokens) {
    EXPECT_NE(v.encode(t), 0u);
    ids.insert(v.encode(t));
  }
  EXPECT_EQ(ids.size(), 3u);
  EXPECT_EQ(v.encode("a"), 1u);  // most frequent first
}

TEST(Vocab, EncodeDecodeConsistency) {
  numkit::Rng rng(4);
  std::vector<std::string> tokens;
  for (int i = 0; i < 500; ++i) tokens.push_back("t" + std::to_string(rng.uniform_int(60)));
  const Vocab v = Vocab::build(tokens, 5);
  for (std::uint32_t id = 1; id < v.size(); ++id) {
    const auto& raw = v.token(id);
    EXPECT_EQ(v.encode(raw), id);
    const auto n = std::count(tokens.begin(), tokens.end(), raw);
    EXPECT_GE(n, 5);
  }
  EXPECT_THROW(v.token(0), UsageError);
}

FeatureSchema fixture_schema() {
  FeatureSchema s;
  s.fields = {{"user", FieldKind::kCategorical, FieldRole::kUser},
              {"price", FieldKind::kNumeric, FieldRole::kItem}};
  s.label_column = "click";
  return s;
}

TEST(Csv, HandEncodedFixture) {
  TempDir dir;
  write_file(dir / "d.csv",
             "click,user,price,extra\n"
             "1,u1,9,x\n"
             "0,u2,1.5,y\n"
             "1,u1,100,z\n");
  const auto r = ingest_csv(dir / "d.csv", fixture_schema(), 1);
  // user: u1 (2) -> 1, u2 (1) -> 2. price tokens "4","1","21" once each,
  // ordered by token bytes: "1" -> 1, "21" -> 2, "4" -> 3.
  const std::vector<std::uint32_t> expected = {1, 3, 2, 1, 1, 2};
  EXPECT_EQ(r.dataset.ids, expected);
  EXPECT_EQ(r.dataset.labels, (std::vector<std::uint8_t>{1, 0, 1}));
  EXPECT_EQ(r.dataset.vocab_sizes, (std::vector<std::uint32_t>{3, 4}));
  r.dataset.validate();
}

TEST(Csv, EmptyFileIsAnError) {
  TempDir dir;
  write_file(dir / "empty.csv", "");
  EXPECT_THROW(ingest_csv(dir / "empty.csv", fixture_schema(), 1), DataError);
  write_file(dir / "header.csv", "click,user,price\n");
  EXPECT_THROW(ingest_csv(dir / "header.csv", fixture_schema(), 1), DataError);
}

TEST(Csv, MissingColumnIsNamed) {
  TempDir dir;
  write_file(dir / "d.csv", "click,user\n1,a\n");
  try {
    ingest_csv(dir / "d.csv", fixture_schema(), 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("price"), std::string::npos);
  }
}

TEST(Csv, BadLabelReportsLine) {
  TempDir dir;
  write_file(dir / "d.csv", "click,user,price\n1,a,3\nmaybe,b,4\n");
  try {
    ingest_csv(dir / "d.csv", fixture_schema(), 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Csv, NanNumericReportsLine) {
  TempDir dir;
  write_file(dir / "d.csv", "click,user,price\n1,a,3\n0,b,nan\n");
  try {
    ingest_csv(dir / "d.csv", fixture_schema(), 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Csv, TruthyTokensConfigurable) {
  TempDir dir;
  write_file(dir / "d.csv", "click,user,price\nyes,a,3\nno,b,4\n");
  CsvOptions opts;
  opts.truthy = {"yes"};
  opts.falsy = {"no"};
  const auto r = ingest_csv(dir / "d.csv", fixture_schema(), 1, opts);
  EXPECT_EQ(r.dataset.labels, (std::vector<std::uint8_t>{1, 0}));
}

TEST(Csv, UnseenValidationCategoryIsOov) {
  TempDir dir;
  std::string text = "click,user,price\n";
  for (int i = 0; i < 9; ++i) text += "1,common,3\n";
  text += "0,rare_only_once,3\n";
  write_file(dir / "d.csv", text);
  // Search for a split seed that keeps the singleton (the only label 0) out of train.
  const auto in_train = [](const DatasetSplits& s) {
    for (std::size_t i = 0; i < s.train.num_rows(); ++i) {
      if (s.train.labels[i] == 0) return true;
    }
    return false;
  };
  std::uint64_t seed = 1;
  while (in_train(ingest_csv_split(dir / "d.csv", fixture_schema(), 1, {0.8, 0.1, 0.1}, seed).splits)) {
    ASSERT_LT(++seed, 200u);
  }
  const auto r = ingest_csv_split(dir / "d.csv", fixture_schema(), 1, {0.8, 0.1, 0.1}, seed);
  const auto& splits = r.splits;
  const auto all_rows = splits.train.num_rows() + splits.val.num_rows() + splits.test.num_rows();
  EXPECT_EQ(all_rows, 10u);
  EXPECT_EQ(r.splits.train.vocab_sizes[0], 2u);  // OOV + "common"
  for (const auto* part : {&splits.val, &splits.test}) {
    for (std::size_t i = 0; i < part->num_rows(); ++i) {
      if (part->labels[i] == 0) {
        EXPECT_EQ(part->row(i)[0], Vocab::kOovId);
      } else {
        EXPECT_EQ(part->row(i)[0], r.vocabs[0].encode("common"));
      }
    }
  }
}

TEST(Split, SizesAndPartition) {
  const auto idx = split_indices(10, {0.8, 0.1, 0.1}, 9);
  EXPECT_EQ(idx.train.size(), 8u);
  EXPECT_EQ(idx.val.size(), 1u);
  EXPECT_EQ(idx.test.size(), 1u);
  std::vector<std::size_t> all = idx.train;
  all.insert(all.end(), idx.val.begin(), idx.val.end());
  all.insert(all.end(), idx.test.begin(), idx.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
}

TEST(Split, SeedDeterminism) {
  const auto a = split_indices(1000, {0.7, 0.2, 0.1}, 5);
  const auto b = split_indices(1000, {0.7, 0.2, 0.1}, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  const auto c = split_indices(1000, {0.7, 0.2, 0.1}, 6);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, BadFractions) {
  EXPECT_THROW(split_indices(10, {0.8, 0.1, 0.2}, 1), ConfigError);
  EXPECT_THROW(split_indices(10, {1.0, 0.0, 0.0}, 1), ConfigError);
}

EncodedDataset tiny_dataset(std::size_t n) {
  SyntheticConfig c;
  c.num_rows = n;
  c.num_fields = 3;
  c.vocab_sizes = {5};
  return synthesize(c, 1).dataset;
}

TEST(Batcher, SizesAndCoverage) {
  const auto ds = tiny_dataset(10);
  const Batcher batcher(ds, 4, 3, true);
  ASSERT_EQ(batcher.num_batches(), 3u);
  EXPECT_EQ(batcher.batch(0).size(), 4u);
  EXPECT_EQ(batcher.batch(1).size(), 4u);
  EXPECT_EQ(batcher.batch(2).size(), 2u);
  std::vector<std::size_t> seen;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto batch = batcher.batch(b);
    seen.insert(seen.end(), batch.rows.begin(), batch.rows.end());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      EXPECT_EQ(batch.labels[i], ds.labels[batch.rows[i]]);
      EXPECT_EQ(batch.id(i, 2), ds.row(batch.rows[i])[2]);
    }
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(seen[i], i);
}

TEST(Batcher, NoShuffleKeepsFileOrder) {
  const auto ds = tiny_dataset(10);
  const Batcher batcher(ds, 4, 3, false);
  EXPECT_EQ(batcher.batch(0).rows, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(batcher.batch(2).rows, (std::vector<std::size_t>{8, 9}));
}

TEST(Batcher, SameSeedSameOrder) {
  const auto ds = tiny_dataset(50);
  const Batcher a(ds, 7, 11, true), b(ds, 7, 11, true);
  for (std::size_t i = 0; i < a.num_batches(); ++i) EXPECT_EQ(a.batch(i).rows, b.batch(i).rows);
}

TEST(Synthetic, NoSignalGivesHalf) {
  SyntheticConfig c;
  c.num_rows = 200;
  c.interaction_strength = 0.0;
  c.bias_scale = 0.0;
  c.base_logit = 0.0;
  const auto d = synthesize(c, 3);
  for (double p : d.dataset.true_ctr) EXPECT_EQ(p, 0.5);
}

TEST(Synthetic, SameSeedSameData) {
  SyntheticConfig c;
  c.num_rows = 500;
  EXPECT_EQ(synthesize(c, 8).dataset, synthesize(c, 8).dataset);
  EXPECT_NE(synthesize(c, 8).dataset.labels, synthesize(c, 9).dataset.labels);
}

TEST(Synthetic, LabelRateMatchesTrueCtr) {
  SyntheticConfig c;
  c.num_rows = 60000;
  c.base_logit = -1.0;
  const auto d = synthesize(c, 21);
  d.dataset.validate();
  double mean = 0.0, var = 0.0;
  for (double p : d.dataset.true_ctr) {
    mean += p;
    var += p * (1 - p);
  }
  const double n = static_cast<double>(c.num_rows);
  mean /= n;
  const double se = std::sqrt(var) / n;
  EXPECT_LE(std::abs(d.dataset.positive_rate() - mean), 3 * se);
}

TEST(Synthetic, ModelReproducesTrueCtr) {
  SyntheticConfig c;
  c.num_rows = 100;
  const auto d = synthesize(c, 2);
  for (std::size_t i = 0; i < 100; ++i) {
    const double z = d.model.logit(d.dataset.row(i));
    EXPECT_DOUBLE_EQ(1.0 / (1.0 + std::exp(-z)), d.dataset.true_ctr[i]);
  }
}

TEST(Synthetic, BayesAucAboveChance) {
  SyntheticConfig c;
  c.num_rows = 100000;
  const auto d = synthesize(c, 5);
  std::vector<double> y(d.dataset.labels.begin(), d.dataset.labels.end());
  const double bayes = trainer::auc(d.dataset.true_ctr, y);
  EXPECT_GT(bayes, 0.7);
  EXPECT_LT(bayes, 1.0);
}

TEST(Cache, RoundTrip) {
  TempDir dir;
  SyntheticConfig c;
  c.num_rows = 300;
  const auto splits = split(synthesize(c, 4).dataset, {0.8, 0.1, 0.1}, 4);
  write_cache(dir / "c.bin", splits);
  const auto back = read_cache(dir / "c.bin");
  EXPECT_EQ(back.train, splits.train);
  EXPECT_EQ(back.val, splits.val);
  EXPECT_EQ(back.test, splits.test);
}

TEST(Cache, RejectsForeignFile) {
  TempDir dir;
  write_file(dir / "junk.bin", "not a cache at all");
  EXPECT_THROW(read_cache(dir / "junk.bin"), DataError);
}

}  // namespace
}  // namespace ektf::datapipe
