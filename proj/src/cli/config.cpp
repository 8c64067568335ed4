// SPDX-License-Identifier: Apache-2.0
#include "ektf/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ektf/error.hpp"

namespace ektf::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    const auto item = trim(value.substr(start, comma - start));
    if (item.empty()) throw ConfigError("empty list element");
    out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::uint64_t parse_uint(std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view text) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(v)) {
    throw ConfigError("expected a finite number, got '" + s + "'");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("expected true or false, got '" + std::string(text) + "'");
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view value, F&& parse_one) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) out.push_back(parse_one(item));
  return out;
}

std::uint32_t parse_u32(std::string_view text) {
  const auto v = parse_uint(text);
  if (v > UINT32_MAX) throw ConfigError("value out of range: " + std::string(text));
  return static_cast<std::uint32_t>(v);
}

char parse_delimiter(std::string_view text) {
  if (text == "comma") return ',';
  if (text == "tab") return '\t';
  if (text == "semicolon") return ';';
  if (text == "pipe") return '|';
  throw ConfigError("delimiter must be comma, tab, semicolon or pipe");
}

objective::UniformPeerWeight parse_peer(std::string_view text) {
  if (text == "k_minus_1") return objective::UniformPeerWeight::kOneOverKMinusOne;
  if (text == "k") return objective::UniformPeerWeight::kOneOverK;
  throw ConfigError("uniform_peer must be k_minus_1 or k");
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset.source",
       [](RunConfig& c, std::string_view v) {
         if (v == "synthetic") {
           c.dataset.source = DataSource::kSynthetic;
         } else if (v == "csv") {
           c.dataset.source = DataSource::kCsv;
         } else {
           throw ConfigError("source must be synthetic or csv");
         }
       }},
      {"dataset.path", [](RunConfig& c, std::string_view v) { c.dataset.path = std::string(v); }},
      {"dataset.fields",
       [](RunConfig& c, std::string_view v) {
         c.dataset.fields = parse_list<datapipe::FieldSpec>(
             v, [](const std::string& s) { return datapipe::parse_field_spec(s); });
       }},
      {"dataset.label", [](RunConfig& c, std::string_view v) { c.dataset.label = std::string(v); }},
      {"dataset.delimiter",
       [](RunConfig& c, std::string_view v) { c.dataset.csv.delimiter = parse_delimiter(v); }},
      {"dataset.truthy",
       [](RunConfig& c, std::string_view v) { c.dataset.csv.truthy = split_list(v); }},
      {"dataset.falsy", [](RunConfig& c, std::string_view v) { c.dataset.csv.falsy = split_list(v); }},
      {"dataset.min_count",
       [](RunConfig& c, std::string_view v) { c.dataset.min_count = parse_u32(v); }},
      {"dataset.split",
       [](RunConfig& c, std::string_view v) {
         const auto f = parse_list<double>(v, parse_double);
         if (f.size() != 3) throw ConfigError("split needs three fractions");
         c.dataset.split = {f[0], f[1], f[2]};
       }},
      {"dataset.split_seed",
       [](RunConfig& c, std::string_view v) { c.dataset.split_seed = parse_uint(v); }},
      {"dataset.cache", [](RunConfig& c, std::string_view v) { c.dataset.cache = std::string(v); }},

      {"synthetic.rows",
       [](RunConfig& c, std::string_view v) { c.synthetic.num_rows = parse_uint(v); }},
      {"synthetic.fields",
       [](RunConfig& c, std::string_view v) { c.synthetic.num_fields = parse_uint(v); }},
      {"synthetic.vocab",
       [](RunConfig& c, std::string_view v) {
         c.synthetic.vocab_sizes = parse_list<std::uint32_t>(v, parse_u32);
       }},
      {"synthetic.interaction_strength",
       [](RunConfig& c, std::string_view v) { c.synthetic.interaction_strength = parse_double(v); }},
      {"synthetic.pairs",
       [](RunConfig& c, std::string_view v) { c.synthetic.num_pairs = parse_uint(v); }},
      {"synthetic.rank",
       [](RunConfig& c, std::string_view v) { c.synthetic.interaction_rank = parse_uint(v); }},
      {"synthetic.bias_scale",
       [](RunConfig& c, std::string_view v) { c.synthetic.bias_scale = parse_double(v); }},
      {"synthetic.base_logit",
       [](RunConfig& c, std::string_view v) { c.synthetic.base_logit = parse_double(v); }},
      {"synthetic.seed", [](RunConfig& c, std::string_view v) { c.synthetic_seed = parse_uint(v); }},

      {"model.k", [](RunConfig& c, std::string_view v) { c.num_students = parse_uint(v); }},
      {"model.kinds",
       [](RunConfig& c, std::string_view v) {
         c.train.model.kinds = parse_list<model::StudentKind>(
             v, [](const std::string& s) { return model::parse_student_kind(s); });
       }},
      {"model.embedding_dim",
       [](RunConfig& c, std::string_view v) { c.train.model.embedding_dim = parse_uint(v); }},
      {"model.hidden",
       [](RunConfig& c, std::string_view v) {
         c.train.model.hidden = parse_list<std::size_t>(v, parse_uint);
       }},
      {"model.cross_layers",
       [](RunConfig& c, std::string_view v) { c.train.model.cross_layers = parse_uint(v); }},
      {"model.sharing",
       [](RunConfig& c, std::string_view v) { c.train.model.sharing = model::parse_sharing(v); }},
      {"model.init_std",
       [](RunConfig& c, std::string_view v) { c.train.model.init_std = parse_double(v); }},
      {"model.identical_init",
       [](RunConfig& c, std::string_view v) { c.train.model.identical_init = parse_bool(v); }},

      {"objective.variant",
       [](RunConfig& c, std::string_view v) { c.train.objective.variant = objective::parse_variant(v); }},
      {"objective.use_exam",
       [](RunConfig& c, std::string_view v) { c.train.objective.use_exam = parse_bool(v); }},
      {"objective.fusion",
       [](RunConfig& c, std::string_view v) { c.train.objective.fusion = objective::parse_fusion(v); }},
      {"objective.stop_gradient",
       [](RunConfig& c, std::string_view v) {
         c.train.objective.stop_gradient_targets = parse_bool(v);
       }},
      {"objective.include_kd",
       [](RunConfig& c, std::string_view v) { c.train.objective.include_kd = parse_bool(v); }},
      {"objective.include_dml",
       [](RunConfig& c, std::string_view v) { c.train.objective.include_dml = parse_bool(v); }},
      {"objective.teacher_ctr",
       [](RunConfig& c, std::string_view v) { c.train.objective.teacher_ctr = parse_bool(v); }},
      {"objective.uniform_peer",
       [](RunConfig& c, std::string_view v) { c.train.objective.uniform_peer = parse_peer(v); }},

      {"training.learning_rate",
       [](RunConfig& c, std::string_view v) { c.train.learning_rate = parse_double(v); }},
      {"training.batch_size",
       [](RunConfig& c, std::string_view v) { c.train.batch_size = parse_uint(v); }},
      {"training.max_epochs",
       [](RunConfig& c, std::string_view v) { c.train.max_epochs = parse_uint(v); }},
      {"training.patience",
       [](RunConfig& c, std::string_view v) { c.train.patience = parse_uint(v); }},
      {"training.seed", [](RunConfig& c, std::string_view v) { c.train.seed = parse_uint(v); }},
      {"training.eval_batch_size",
       [](RunConfig& c, std::string_view v) { c.train.eval_batch_size = parse_uint(v); }},

      {"output.dir", [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); }},
      {"output.step_log", [](RunConfig& c, std::string_view v) { c.step_log = parse_bool(v); }},

      {"sweep.k",
       [](RunConfig& c, std::string_view v) { c.sweep.k = parse_list<std::size_t>(v, parse_uint); }},
      {"sweep.fusion",
       [](RunConfig& c, std::string_view v) {
         c.sweep.fusion = parse_list<objective::Fusion>(
             v, [](const std::string& s) { return objective::parse_fusion(s); });
       }},
      {"sweep.variant",
       [](RunConfig& c, std::string_view v) {
         c.sweep.variant = parse_list<objective::Variant>(
             v, [](const std::string& s) { return objective::parse_variant(s); });
       }},
      {"sweep.seeds",
       [](RunConfig& c, std::string_view v) {
         c.sweep.seeds = parse_list<std::uint64_t>(v, parse_uint);
       }},
      {"ablate.seeds",
       [](RunConfig& c, std::string_view v) {
         c.ablate.seeds = parse_list<std::uint64_t>(v, parse_uint);
       }},
  };
  return table;
}

void validate(const RunConfig& c) {
  if (c.num_students == 0) throw ConfigError("model.k must be at least 1");
  if (c.train.model.kinds.empty()) throw ConfigError("model.kinds must not be empty");
  if (c.dataset.source == DataSource::kCsv) {
    if (c.dataset.path.empty()) throw ConfigError("dataset.path is required for csv sources");
    if (c.dataset.fields.empty()) throw ConfigError("dataset.fields is required for csv sources");
  }
  if (c.sweep.k.empty() || c.sweep.fusion.empty() || c.sweep.variant.empty() ||
      c.sweep.seeds.empty()) {
    throw ConfigError("sweep lists must not be empty");
  }
  for (auto k : c.sweep.k) {
    if (k == 0) throw ConfigError("sweep.k entries must be at least 1");
  }
  if (c.ablate.seeds.empty()) throw ConfigError("ablate.seeds must not be empty");
  trainer::TrainConfig probe = train_config_for(c, c.num_students, c.train.objective, c.train.seed);
  probe.validate();
}

}  // namespace

RunConfig parse_run_config(std::string_view text, std::string_view origin) {
  RunConfig config;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  const auto fail = [&](const std::string& msg) {
    throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> sections = {"dataset", "synthetic", "model", "objective",
                                                     "training", "output", "sweep", "ablate"};
      if (!sections.contains(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) fail("unknown key '" + key + "'");
    if (!seen.insert(key).second) fail("duplicate key '" + key + "'");
    if (value.empty()) fail("empty value for '" + key + "'");
    try {
      it->second(config, value);
    } catch (const ConfigError& e) {
      fail(key + ": " + e.what());
    }
  }
  config.train.model.seed = config.train.seed;
  validate(config);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string());
}

trainer::TrainConfig train_config_for(const RunConfig& config, std::size_t k,
                                      const objective::ObjectiveSpec& objective,
                                      std::uint64_t seed) {
  trainer::TrainConfig tc = config.train;
  const auto& kinds = config.train.model.kinds;
  tc.model.kinds.clear();
  for (std::size_t i = 0; i < k; ++i) tc.model.kinds.push_back(kinds[i % kinds.size()]);
  tc.objective = objective;
  tc.model.concat_head = objective.fusion == objective::Fusion::kConcat;
  tc.seed = seed;
  tc.model.seed = seed;
  return tc;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& [key, setter] : setters()) out.push_back(key);
  return out;
}

}  // namespace ektf::cli
