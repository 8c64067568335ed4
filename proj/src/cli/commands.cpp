// SPDX-License-Identifier: Apache-2.0
#include "ektf/cli/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "ektf/datapipe/cache.hpp"
#include "ektf/datapipe/csv.hpp"
#include "ektf/error.hpp"
#include "ektf/model/checkpoint.hpp"
#include "json.hpp"

namespace ektf::cli {

using nlohmann::ordered_json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const ordered_json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::filesystem::path make_output_dir(const RunConfig& config) {
  auto dir = resolve_output_dir(config);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

ordered_json metric_json(const trainer::MetricPair& m) {
  return {{"logloss", m.logloss}, {"auc", m.auc}};
}

ordered_json evaluation_json(const trainer::Evaluation& e) {
  ordered_json students = ordered_json::array();
  for (const auto& s : e.students) students.push_back(metric_json(s));
  return {{"ensemble", metric_json(e.ensemble)}, {"students", students}};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> oov_rates(const datapipe::EncodedDataset& ds) {
  std::vector<double> rates(ds.num_fields(), 0.0);
  if (ds.num_rows() == 0) return rates;
  for (std::size_t i = 0; i < ds.num_rows(); ++i) {
    const auto row = ds.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) rates[j] += row[j] == datapipe::Vocab::kOovId;
  }
  for (double& r : rates) r /= static_cast<double>(ds.num_rows());
  return rates;
}

std::string epoch_header(std::size_t k) {
  std::string h = "epoch,train_loss,val_logloss_ensemble,val_auc_ensemble";
  for (std::size_t i = 1; i <= k; ++i) {
    h += ",val_logloss_" + std::to_string(i) + ",val_auc_" + std::to_string(i);
  }
  return h;
}

std::string epoch_line(const trainer::EpochRecord& r) {
  std::string line = std::to_string(r.epoch) + "," + format_double(r.train.total) + "," +
                     format_double(r.val.ensemble.logloss) + "," +
                     format_double(r.val.ensemble.auc);
  for (const auto& s : r.val.students) {
    line += "," + format_double(s.logloss) + "," + format_double(s.auc);
  }
  return line;
}

std::string step_header(std::size_t k) {
  std::string h = "step,epoch,loss_total";
  for (const char* part : {"ctr", "kd", "dml", "lambda", "score"}) {
    for (std::size_t i = 1; i <= k; ++i) h += std::string(",") + part + "_" + std::to_string(i);
  }
  return h;
}

std::string step_line(const trainer::StepRecord& r) {
  const auto& l = *r.loss;
  std::string line =
      std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + format_double(l.total);
  for (const auto* v : {&l.ctr_student, &l.kd, &l.dml, &l.weights.lambda, &l.weights.scores}) {
    for (double x : *v) line += "," + format_double(x);
  }
  return line;
}

std::uint64_t data_hash(const datapipe::DatasetSplits& data) {
  return datapipe::schema_hash(data.train.schema, data.train.vocab_sizes);
}

/// Cells of a grid run, skipping keys already in `path`.
template <typename Cell, typename Run>
void run_grid(const std::filesystem::path& path, const std::vector<Cell>& cells, Run&& run) {
  std::set<ResultKey> done;
  for (const auto& row : read_results(path)) done.insert(row.key);
  std::size_t index = 0;
  for (const auto& cell : cells) {
    ++index;
    if (done.contains(cell.key)) {
      std::cerr << "[" << index << "/" << cells.size() << "] skip " << cell.key.variant
                << " K=" << cell.key.k << " seed=" << cell.key.seed << "\n";
      continue;
    }
    const ResultRow row = run(cell);
    append_row(path, row);
    done.insert(cell.key);
    std::cerr << "[" << index << "/" << cells.size() << "] " << row.key.variant
              << " K=" << row.key.k << " fusion=" << row.key.fusion << " seed=" << row.key.seed
              << " " << row.status;
    if (row.ok()) std::cerr << " auc=" << format_double(row.ensemble.auc);
    std::cerr << "\n";
  }
}

struct GridCell {
  ResultKey key;
  objective::ObjectiveSpec objective;
};

}  // namespace

std::filesystem::path resolve_output_dir(const RunConfig& config) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return config.output_dir;
}

PreparedData prepare_data(const RunConfig& config) {
  const auto& ds = config.dataset;
  PreparedData out;
  out.has_oov = ds.source == DataSource::kCsv;
  if (!ds.cache.empty() && std::filesystem::exists(ds.cache)) {
    out.splits = datapipe::read_cache(ds.cache);
    return out;
  }
  if (ds.source == DataSource::kSynthetic) {
    const auto synth = datapipe::synthesize(config.synthetic, config.synthetic_seed);
    out.splits = datapipe::split(synth.dataset, ds.split, ds.split_seed);
  } else {
    datapipe::FeatureSchema schema{ds.fields, ds.label};
    out.splits =
        datapipe::ingest_csv_split(ds.path, schema, ds.min_count, ds.split, ds.split_seed, ds.csv)
            .splits;
  }
  return out;
}

std::vector<AblationArm> ablation_arms(const objective::ObjectiveSpec& base) {
  objective::ObjectiveSpec ektf = base;
  ektf.variant = objective::Variant::kEktf;
  ektf.fusion = objective::Fusion::kMean;
  ektf.include_kd = true;
  ektf.include_dml = true;
  ektf.use_exam = true;
  auto only_kd = ektf;
  only_kd.include_dml = false;
  auto only_dml = ektf;
  only_dml.include_kd = false;
  auto wo_em = ektf;
  wo_em.use_exam = false;
  auto wo_all = ektf;
  wo_all.variant = objective::Variant::kVanilla;
  return {{"ektf", ektf},
          {"only_kd", only_kd},
          {"only_dml", only_dml},
          {"wo_em", wo_em},
          {"wo_all", wo_all}};
}

ResultRow run_cell(const RunConfig& config, const datapipe::DatasetSplits& data, std::size_t k,
                   const objective::ObjectiveSpec& objective, const std::string& variant_label,
                   std::uint64_t seed) {
  ResultKey key{k, std::string(objective::to_string(objective.fusion)), variant_label, seed};
  try {
    const auto tc = train_config_for(config, k, objective, seed);
    const auto result = trainer::train(tc, data);
    return make_row(std::move(key), result.report.test);
  } catch (const Error& e) {
    ResultRow row;
    row.key = std::move(key);
    row.status = dynamic_cast<const ConfigError*>(&e) != nullptr ? "config_error"
                 : dynamic_cast<const TrainingError*>(&e) != nullptr ? "training_error"
                                                                     : "data_error";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.ensemble = row.best = row.worst = {nan, nan};
    row.gap = nan;
    row.error = e.what();
    return row;
  }
}

void cmd_preprocess(const RunConfig& config, const RunOptions&) {
  const auto dir = make_output_dir(config);
  const auto data = prepare_data(config);
  datapipe::write_cache(dir / "dataset.cache", data.splits);

  const auto& train = data.splits.train;
  ordered_json fields = ordered_json::array();
  for (std::size_t j = 0; j < train.num_fields(); ++j) {
    const auto& f = train.schema.fields[j];
    fields.push_back({{"name", f.name},
                      {"kind", datapipe::to_string(f.kind)},
                      {"role", datapipe::to_string(f.role)},
                      {"vocab_size", train.vocab_sizes[j]}});
  }
  ordered_json doc;
  doc["command"] = "preprocess";
  doc["source"] = config.dataset.source == DataSource::kCsv ? "csv" : "synthetic";
  doc["label"] = train.schema.label_column;
  doc["rows"] = {{"train", train.num_rows()},
                 {"val", data.splits.val.num_rows()},
                 {"test", data.splits.test.num_rows()}};
  doc["fields"] = fields;
  doc["positive_rate"] = {{"train", train.positive_rate()},
                          {"val", data.splits.val.positive_rate()},
                          {"test", data.splits.test.positive_rate()}};
  if (data.has_oov) {
    doc["oov_rate"] = {{"train", oov_rates(train)},
                       {"val", oov_rates(data.splits.val)},
                       {"test", oov_rates(data.splits.test)}};
  } else {
    doc["oov_rate"] = nullptr;
  }
  if (train.has_true_ctr()) {
    std::vector<double> all = train.true_ctr;
    all.insert(all.end(), data.splits.val.true_ctr.begin(), data.splits.val.true_ctr.end());
    all.insert(all.end(), data.splits.test.true_ctr.begin(), data.splits.test.true_ctr.end());
    doc["mean_true_ctr"] = mean_of(all);
  } else {
    doc["mean_true_ctr"] = nullptr;
  }
  write_json(dir / "preprocess.json", doc);
  std::cerr << "wrote " << (dir / "dataset.cache").string() << " and preprocess.json\n";
}

void cmd_train(const RunConfig& config, const RunOptions& options) {
  const auto dir = make_output_dir(config);
  const auto data = prepare_data(config);
  const std::uint64_t seed = options.seed.value_or(config.train.seed);
  const auto tc = train_config_for(config, config.num_students, config.train.objective, seed);
  tc.validate();
  const std::size_t k = tc.num_students();

  std::ofstream epochs(dir / "epochs.csv", std::ios::binary | std::ios::trunc);
  if (!epochs) throw DataError("cannot write " + (dir / "epochs.csv").string());
  epochs << epoch_header(k) << '\n';
  std::ofstream steps;
  if (config.step_log) {
    steps.open(dir / "steps.csv", std::ios::binary | std::ios::trunc);
    if (!steps) throw DataError("cannot write " + (dir / "steps.csv").string());
    steps << step_header(k) << '\n';
  }

  trainer::TrainHooks hooks;
  hooks.on_epoch = [&](const trainer::EpochRecord& r) {
    epochs << epoch_line(r) << '\n';
    epochs.flush();
    std::cerr << "epoch " << r.epoch << " train_loss=" << format_double(r.train.total)
              << " val_auc=" << format_double(r.val.ensemble.auc) << "\n";
  };
  if (config.step_log) {
    hooks.on_step = [&](const trainer::StepRecord& r) { steps << step_line(r) << '\n'; };
  }

  const auto hash = data_hash(data.splits);
  trainer::TrainResult result = [&] {
    try {
      return trainer::train(tc, data.splits, hooks);
    } catch (const trainer::DivergedError& e) {
      if (e.last_good()) {
        model::write_checkpoint(dir / "model.last_good.ckpt", *e.last_good(), hash);
        std::cerr << "diverged; last good parameters in "
                  << (dir / "model.last_good.ckpt").string() << "\n";
      }
      throw;
    }
  }();
  model::write_checkpoint(dir / "model.ckpt", result.model, hash);

  ordered_json doc;
  doc["command"] = "train";
  doc["K"] = k;
  ordered_json kinds = ordered_json::array();
  for (auto kind : tc.model.kinds) kinds.push_back(model::to_string(kind));
  doc["student_kinds"] = kinds;
  doc["variant"] = objective::to_string(tc.objective.variant);
  doc["fusion"] = objective::to_string(tc.objective.fusion);
  doc["use_exam"] = tc.objective.use_exam;
  doc["seed"] = seed;
  doc["epochs_run"] = result.report.epochs.size();
  doc["best_epoch"] = result.report.best_epoch;
  doc["steps"] = result.report.steps;
  doc["val"] = evaluation_json(result.report.epochs[result.report.best_epoch - 1].val);
  doc["test"] = evaluation_json(result.report.test);
  if (!options.strict) doc["wall_seconds"] = result.report.wall_seconds;
  write_json(dir / "summary.json", doc);
  std::cerr << "test ensemble auc=" << format_double(result.report.test.ensemble.auc)
            << " logloss=" << format_double(result.report.test.ensemble.logloss) << "\n";
}

void cmd_sweep(const RunConfig& config, const RunOptions& options) {
  const auto dir = make_output_dir(config);
  const auto data = prepare_data(config);
  const auto seeds = options.seed ? std::vector<std::uint64_t>{*options.seed} : config.sweep.seeds;
  std::vector<GridCell> cells;
  for (auto k : config.sweep.k) {
    for (auto fusion : config.sweep.fusion) {
      for (auto variant : config.sweep.variant) {
        for (auto seed : seeds) {
          objective::ObjectiveSpec spec = config.train.objective;
          spec.variant = variant;
          spec.fusion = fusion;
          cells.push_back({{k, std::string(objective::to_string(fusion)),
                            std::string(objective::to_string(variant)), seed},
                           spec});
        }
      }
    }
  }
  run_grid(dir / "sweep.csv", cells, [&](const GridCell& c) {
    return run_cell(config, data.splits, c.key.k, c.objective, c.key.variant, c.key.seed);
  });
}

void cmd_ablate(const RunConfig& config, const RunOptions& options) {
  const auto dir = make_output_dir(config);
  const auto data = prepare_data(config);
  const auto seeds =
      options.seed ? std::vector<std::uint64_t>{*options.seed} : config.ablate.seeds;
  std::vector<GridCell> cells;
  for (const auto& arm : ablation_arms(config.train.objective)) {
    for (auto seed : seeds) {
      cells.push_back({{config.num_students, "mean", arm.name, seed}, arm.objective});
    }
  }
  run_grid(dir / "ablation.csv", cells, [&](const GridCell& c) {
    return run_cell(config, data.splits, c.key.k, c.objective, c.key.variant, c.key.seed);
  });
}

void cmd_report(const std::vector<std::filesystem::path>& inputs,
                const std::filesystem::path& out_dir, double trend_tolerance) {
  if (inputs.empty()) throw UsageError("report needs at least one result CSV");
  std::vector<ResultRow> rows;
  for (const auto& p : inputs) {
    if (!std::filesystem::exists(p)) throw DataError("no such result file: " + p.string());
    auto part = read_results(p);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto groups = summarize(rows);
  const auto curves = trends(groups, trend_tolerance);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string());

  const auto q_json = [](const Quartiles& q) {
    return ordered_json{{"median", q.median}, {"q1", q.q1}, {"q3", q.q3}, {"iqr", q.iqr()}};
  };
  ordered_json doc;
  doc["command"] = "report";
  doc["trend_tolerance"] = trend_tolerance;
  ordered_json g_json = ordered_json::array();
  std::string csv =
      "K,fusion,variant,runs,failures,ensemble_auc_median,ensemble_auc_iqr,"
      "ensemble_logloss_median,ensemble_logloss_iqr,best_auc_median,best_auc_iqr,"
      "worst_auc_median,worst_auc_iqr,gap_median,gap_iqr\n";
  for (const auto& g : groups) {
    ordered_json j{{"K", g.k},
                   {"fusion", g.fusion},
                   {"variant", g.variant},
                   {"runs", g.runs},
                   {"failures", g.failures}};
    if (g.runs > 0) {
      j["ensemble_auc"] = q_json(g.ensemble_auc);
      j["ensemble_logloss"] = q_json(g.ensemble_logloss);
      j["best_auc"] = q_json(g.best_auc);
      j["worst_auc"] = q_json(g.worst_auc);
      j["gap"] = q_json(g.gap);
    }
    g_json.push_back(j);
    csv += std::to_string(g.k) + "," + g.fusion + "," + g.variant + "," +
           std::to_string(g.runs) + "," + std::to_string(g.failures);
    for (const auto* q : {&g.ensemble_auc, &g.ensemble_logloss, &g.best_auc, &g.worst_auc, &g.gap}) {
      csv += g.runs > 0 ? "," + format_double(q->median) + "," + format_double(q->iqr())
                        : std::string(",nan,nan");
    }
    csv += "\n";
  }
  doc["groups"] = g_json;
  ordered_json t_json = ordered_json::array();
  for (const auto& t : curves) {
    t_json.push_back({{"fusion", t.fusion},
                      {"variant", t.variant},
                      {"k_low", t.k_low},
                      {"k_high", t.k_high},
                      {"median_auc_low", t.median_low},
                      {"median_auc_high", t.median_high},
                      {"non_increasing", t.non_increasing}});
    std::cout << t.variant << "/" << t.fusion << ": median ensemble AUC K=" << t.k_low << " "
              << format_double(t.median_low) << " -> K=" << t.k_high << " "
              << format_double(t.median_high)
              << (t.non_increasing ? " [non-increasing]" : " [increasing]") << "\n";
  }
  doc["trends"] = t_json;
  write_json(out_dir / "report.json", doc);
  write_text(out_dir / "report.csv", csv);
}

}  // namespace ektf::cli
