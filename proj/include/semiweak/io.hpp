// Copyright 2026 The semiweak Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// File formats: JSON-lines datasets with a manifest, JSON checkpoints,
// JSON-lines training logs, and benchmark results (JSON + CSV).
//
// Doubles are written with 17 significant digits, so every file round-trips
// bit-exactly.

#pragma once

#include "semiweak/config.hpp"
#include "semiweak/eval.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace semiweak {

using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kDatasetVersion = 1;

// Writes to a sibling temp file and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Bags and datasets.

inline json bag_to_json(const Bag& bag) {
  json features = json::array();
  for (Eigen::Index i = 0; i < bag.features.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < bag.features.cols(); ++c) row.push_back(bag.features(i, c));
    features.push_back(std::move(row));
  }
  json j{{"bag_id", bag.bag_id}, {"counts", bag.label.values()}, {"features", std::move(features)}};
  if (bag.true_instance_labels) {
    json labels = json::array();
    for (ClassId c : *bag.true_instance_labels) labels.push_back(c.value);
    j["labels"] = std::move(labels);
  }
  return j;
}

inline Bag bag_from_json(const json& j) {
  try {
    Bag bag;
    bag.bag_id = j.at("bag_id").get<std::int64_t>();
    const auto& rows = j.at("features");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = n > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    bag.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != d) throw ShapeError("ragged feature rows");
      for (Eigen::Index c = 0; c < d; ++c) bag.features(i, c) = rows[i][c].get<double>();
    }
    bag.label = CountVector(j.at("counts").get<std::vector<int>>());
    if (j.contains("labels") && !j["labels"].is_null()) {
      bag.true_instance_labels = to_class_ids(j["labels"].get<std::vector<int>>());
    }
    return bag;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed bag record: ") + e.what());
  }
}

inline json to_json(const DatasetConfig& d) {
  return json{{"id", d.dataset_id},
              {"distribution", std::string(to_string(d.distribution))},
              {"bag_size", d.bag_size},
              {"lambda", d.lambda},
              {"n_train_bags", d.n_train_bags},
              {"n_test_bags", d.n_test_bags},
              {"num_classes", d.num_classes},
              {"feature_dim", d.feature_dim},
              {"cluster_separation", d.cluster_separation},
              {"reuse_cap", d.reuse_cap},
              {"pool_per_class", d.pool_per_class},
              {"seed", d.seed.value}};
}

inline json to_json(const TrainConfig& t) {
  return json{{"lr0", t.lr0},
              {"epochs", t.epochs},
              {"lr_milestones", t.lr_milestones},
              {"lr_decay", t.lr_decay},
              {"weight_decay", t.weight_decay},
              {"batch_bags", t.batch_bags},
              {"momentum", t.momentum},
              {"hidden_layers", t.hidden_layers},
              {"reg_kind", std::string(to_string(t.loss.reg_kind))},
              {"beta", t.loss.beta},
              {"use_reg", t.loss.use_reg},
              {"use_cls", t.loss.use_cls},
              {"seed", t.seed.value}};
}

inline json to_json(const PipelineFlags& p) {
  return json{{"decoder", p.decoder}, {"alg1_literal", p.alg1_literal}};
}

inline json to_json(const DatasetStats& s) {
  return json{{"avg_count", s.avg_count},
              {"avg_sparsity", s.avg_sparsity},
              {"std_sparsity", s.std_sparsity},
              {"forced_fills", s.forced_fills}};
}

inline std::string to_jsonl(const std::vector<Bag>& bags) {
  std::string out;
  for (const Bag& b : bags) {
    out += bag_to_json(b).dump();
    out += '\n';
  }
  return out;
}

inline json dataset_manifest(const DatasetConfig& config, const GeneratedDataset& data) {
  return json{{"format", "semiweak-dataset"},
              {"version", kDatasetVersion},
              {"num_classes", config.num_classes},
              {"feature_dim", config.feature_dim},
              {"n_train", data.train.size()},
              {"n_test", data.test.size()},
              {"files", {{"train", "train.jsonl"}, {"test", "test.jsonl"}}},
              {"config", to_json(config)},
              {"stats", to_json(data.stats)}};
}

inline void write_dataset(const std::filesystem::path& dir, const DatasetConfig& config,
                          const GeneratedDataset& data) {
  write_file_atomic(dir / "train.jsonl", to_jsonl(data.train.bags));
  write_file_atomic(dir / "test.jsonl", to_jsonl(data.test.bags));
  write_file_atomic(dir / "manifest.json", dataset_manifest(config, data).dump(2) + "\n");
}

inline BagDataset read_bags_jsonl(const std::filesystem::path& path, int num_classes, int feature_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  BagDataset data;
  data.num_classes = num_classes;
  data.feature_dim = feature_dim;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    data.bags.push_back(bag_from_json(parse_json(line, path.string())));
  }
  validate_dataset(data);
  return data;
}

// `split` is "train" or "test".
inline BagDataset read_dataset(const std::filesystem::path& dir, const std::string& split) {
  if (split != "train" && split != "test") throw ValidationError("split must be train or test");
  const json manifest = parse_json(read_file(dir / "manifest.json"), "manifest");
  try {
    if (manifest.at("format") != "semiweak-dataset") throw IoError("not a dataset manifest");
    return read_bags_jsonl(dir / manifest.at("files").at(split).get<std::string>(),
                           manifest.at("num_classes").get<int>(), manifest.at("feature_dim").get<int>());
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Checkpoints: shapes plus row-major weights.

namespace detail {

inline json layer_to_json(const DenseLayer& l) {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(l.weight.size()));
  for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
  }
  return json{{"rows", l.weight.rows()},
              {"cols", l.weight.cols()},
              {"activation", std::string(to_string(l.activation))},
              {"weight", std::move(w)},
              {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}};
}

inline DenseLayer layer_from_json(const json& j) {
  DenseLayer l;
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto w = j.at("weight").get<std::vector<double>>();
  const auto b = j.at("bias").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
    throw ShapeError("checkpoint layer size does not match its shape");
  }
  l.weight.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
  }
  l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
  l.activation = parse_activation(j.at("activation").get<std::string>());
  return l;
}

}  // namespace detail

inline json checkpoint_to_json(const ModelParams& p) {
  json layers = json::array();
  for (const DenseLayer& l : p.extractor) layers.push_back(detail::layer_to_json(l));
  return json{{"format", "semiweak-checkpoint"},
              {"version", kCheckpointVersion},
              {"input_dim", p.input_dim()},
              {"num_classes", p.num_classes()},
              {"extractor", std::move(layers)},
              {"head", detail::layer_to_json(p.head)}};
}

inline ModelParams checkpoint_from_json(const json& j) {
  try {
    if (j.at("format") != "semiweak-checkpoint") throw IoError("not a checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw IoError("unsupported checkpoint version");
    ModelParams p;
    for (const json& l : j.at("extractor")) p.extractor.push_back(detail::layer_from_json(l));
    p.head = detail::layer_from_json(j.at("head"));
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline ModelParams read_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(parse_json(read_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Metrics, training logs, benchmark results.

inline json to_json(const Metrics& m) {
  return json{{"bag_precision_macro", m.bag_precision_macro},
              {"instance_precision_macro", m.instance_precision_macro},
              {"bag_precision_micro", m.bag_precision_micro},
              {"instance_precision_micro", m.instance_precision_micro},
              {"per_class_bag_precision", m.per_class_bag_precision},
              {"per_class_instance_precision", m.per_class_instance_precision},
              {"n_bags", m.n_bags},
              {"n_instances", m.n_instances}};
}

inline json to_json(const EpochRecord& r) {
  json j{{"epoch", r.epoch},
         {"lr", r.lr},
         {"train_loss", r.train_loss},
         {"train_reg", r.train_reg},
         {"train_cls", r.train_cls},
         {"train_l1", r.train_l1}};
  if (r.validation) {
    j["val_bag_precision"] = r.validation->bag_precision_macro;
    j["val_instance_precision"] = r.validation->instance_precision_macro;
    j["val_instance_precision_micro"] = r.validation->instance_precision_micro;
  }
  return j;
}

inline json to_json(const MetricAggregate& a) { return json{{"mean", a.mean}, {"std", a.std}}; }

inline json to_json(const ScenarioResult& r) {
  json per_seed = json::array();
  for (const SeedOutcome& s : r.per_seed) {
    json j{{"seed", s.seed}, {"best_epoch", s.best_epoch}, {"dataset_stats", to_json(s.dataset_stats)}};
    if (s.metrics) j["metrics"] = to_json(*s.metrics);
    else j["error"] = s.error;
    per_seed.push_back(std::move(j));
  }
  return json{{"scenario_id", r.scenario_id},
              {"config",
               {{"dataset", to_json(r.scenario.dataset)},
                {"train", to_json(r.scenario.train)},
                {"pipeline", to_json(r.scenario.pipeline)}}},
              {"seeds", r.seeds},
              {"per_seed", std::move(per_seed)},
              {"n_failed", r.n_failed},
              {"aggregate",
               {{"bag_precision", to_json(r.bag_precision)},
                {"instance_precision", to_json(r.instance_precision)},
                {"bag_precision_micro", to_json(r.bag_precision_micro)},
                {"instance_precision_micro", to_json(r.instance_precision_micro)}}}};
}

inline json results_to_json(const std::vector<ScenarioResult>& results) {
  json arr = json::array();
  for (const auto& r : results) arr.push_back(to_json(r));
  return json{{"format", "semiweak-results"}, {"version", 1}, {"scenarios", std::move(arr)}};
}

// One row per scenario, precisions in percent.
inline std::string results_to_csv(const std::vector<ScenarioResult>& results) {
  std::ostringstream os;
  os << "dataset_id,bag_prec,bag_prec_std,inst_prec,inst_prec_std,n_seeds,n_failed\n";
  os.setf(std::ios::fixed);
  os.precision(2);
  for (const auto& r : results) {
    os << r.scenario_id << ',' << 100.0 * r.bag_precision.mean << ',' << 100.0 * r.bag_precision.std << ','
       << 100.0 * r.instance_precision.mean << ',' << 100.0 * r.instance_precision.std << ','
       << r.seeds.size() << ',' << r.n_failed << '\n';
  }
  return os.str();
}

}  // namespace semiweak
