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

// semiweak: generate bag datasets, train count-supervised models, decode,
// assign, evaluate and benchmark.
//
// Exit codes:
//   0 success
//   1 unexpected failure
//   2 configuration or usage error
//   3 I/O error
//   4 training diverged
//   5 shape mismatch between model and data
//   6 at least one benchmark scenario failed on every seed

#include "semiweak/semiweak.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using namespace semiweak;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kDiverged = 4,
  kShapeMismatch = 5,
  kScenarioFailed = 6,
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("semiweak");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("SEMIWEAK_LOG")) {
    const std::string level = env;
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else if (level != "info") spdlog::warn("ignoring SEMIWEAK_LOG={} (error, info, debug)", level);
  }
}

struct LossOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> reg_kind;
  std::optional<double> beta;
  std::optional<double> momentum;
  bool no_cls = false;
  bool no_reg = false;
  bool no_decoder = false;
  bool alg1_literal = false;
};

void add_override_flags(CLI::App* cmd, LossOverrides& o) {
  cmd->add_option("--reg-kind", o.reg_kind, "Count regression loss")
      ->check(CLI::IsMember({"poisson", "kl", "l1"}));
  cmd->add_option("--beta", o.beta, "Weight of the sparsity regularizer");
  cmd->add_option("--momentum", o.momentum, "SGD momentum (default 0)");
  cmd->add_flag("--no-cls", o.no_cls, "Drop the presence classification loss");
  cmd->add_flag("--no-reg", o.no_reg, "Drop the count regression loss (weak-label baseline)");
  cmd->add_flag("--no-decoder", o.no_decoder, "Per-instance argmax instead of count decoding");
  cmd->add_flag("--alg1-literal", o.alg1_literal, "Use raw pmf-difference gains in the count decoder");
}

void apply_overrides(const LossOverrides& o, RunConfig& cfg) {
  if (o.reg_kind) cfg.train.loss.reg_kind = parse_reg_kind(*o.reg_kind);
  if (o.beta) cfg.train.loss.beta = *o.beta;
  if (o.momentum) cfg.train.momentum = *o.momentum;
  if (o.no_cls) cfg.train.loss.use_cls = false;
  if (o.no_reg) cfg.train.loss.use_reg = false;
  if (o.no_decoder) cfg.pipeline.decoder = false;
  if (o.alg1_literal) cfg.pipeline.alg1_literal = true;
  cfg.train.pipeline = cfg.pipeline;
  try {
    cfg.train.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

RunConfig load_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path);
}

void echo_config(const RunConfig& cfg, const fs::path& out_dir) {
  const std::string text = to_toml(cfg);
  write_file_atomic(out_dir / "config.resolved.toml", text);
  spdlog::info("resolved config:\n{}", text);
}

int cmd_gen(const std::string& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_run_config(config_path);
  if (seed) cfg.dataset.seed = RngSeed{*seed};
  echo_config(cfg, out);
  const GeneratedDataset data = generate_dataset(cfg.dataset);
  write_dataset(out, cfg.dataset, data);
  spdlog::info("wrote {} train / {} test bags to {}", data.train.size(), data.test.size(), out.string());
  if (data.stats.forced_fills > 0) {
    spdlog::warn("{} bags hit the draw cap and were force-filled", data.stats.forced_fills);
  }
  std::cout << dataset_manifest(cfg.dataset, data).dump(2) << "\n";
  return kOk;
}

int cmd_train(const fs::path& data_dir, const std::string& config_path, const fs::path& out,
              const LossOverrides& overrides) {
  RunConfig cfg = load_or_default(config_path);
  if (overrides.seed) cfg.train.seed = RngSeed{*overrides.seed};
  apply_overrides(overrides, cfg);
  echo_config(cfg, out);

  const BagDataset train_set = read_dataset(data_dir, "train");
  const BagDataset val_set = read_dataset(data_dir, "test");
  std::string log_lines;
  const TrainResult result = train(train_set, &val_set, cfg.train, [&](const EpochRecord& r) {
    log_lines += to_json(r).dump() + "\n";
    spdlog::debug("epoch {} lr {} loss {:.6f} val_inst {:.4f}", r.epoch, r.lr, r.train_loss,
                  r.validation ? r.validation->instance_precision_macro : 0.0);
  });
  write_file_atomic(out / "metrics.jsonl", log_lines);
  write_file_atomic(out / "checkpoint.json", checkpoint_to_json(result.params).dump() + "\n");
  const EpochRecord& best = result.log[static_cast<std::size_t>(result.best_epoch)];
  json summary{{"best_epoch", result.best_epoch},
               {"epochs", result.log.size()},
               {"checkpoint", (out / "checkpoint.json").string()},
               {"best", to_json(best)}};
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data_dir, const std::string& split,
             const LossOverrides& flags, const std::string& out) {
  const ModelParams params = read_checkpoint(checkpoint);
  const BagDataset data = read_dataset(data_dir, split);
  PipelineFlags pipeline;
  pipeline.decoder = !flags.no_decoder;
  pipeline.alg1_literal = flags.alg1_literal;
  const Metrics m = evaluate_model(params, data, pipeline);
  json j{{"split", split}, {"pipeline", to_json(pipeline)}, {"metrics", to_json(m)}};
  const std::string text = j.dump(2) + "\n";
  if (!out.empty()) write_file_atomic(out, text);
  std::cout << text;
  return kOk;
}

int cmd_bench(const std::string& config_path, const fs::path& out, int jobs, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_run_config(config_path);
  if (seed) cfg.bench_seed = RngSeed{*seed};
  if (cfg.scenarios.empty()) throw ConfigError("bench config has no [[scenario]] entries");
  echo_config(cfg, out);
  spdlog::info("running {} scenarios x {} seeds on {} workers", cfg.scenarios.size(), cfg.n_seeds, jobs);
  const auto results = run_scenarios(cfg.scenarios, cfg.n_seeds, cfg.bench_seed, jobs);
  write_file_atomic(out / "results.json", results_to_json(results).dump(2) + "\n");
  write_file_atomic(out / "results.csv", results_to_csv(results));
  std::cout << results_to_csv(results);
  int code = kOk;
  for (const auto& r : results) {
    for (const auto& s : r.per_seed) {
      if (!s.error.empty()) spdlog::warn("scenario {} seed {} failed: {}", r.scenario_id, s.seed, s.error);
    }
    if (r.failed()) {
      spdlog::error("scenario {} failed on every seed", r.scenario_id);
      code = kScenarioFailed;
    }
  }
  return code;
}

// Reads JSON lines from a file, or stdin for "-".
template <class Fn>
void for_each_json_line(const std::string& input, Fn&& fn) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (input != "-") {
    file.open(input);
    if (!file) throw IoError("cannot read '" + input + "'");
    in = &file;
  }
  std::string line;
  while (std::getline(*in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(parse_json(line, input));
  }
}

json decode_record(const ExpectedCounts& lambdas, int bag_size, bool literal) {
  const DecodeResult r = greedy_decode(lambdas, bag_size, literal ? GainRule::kPmfLiteral : GainRule::kLogPmf);
  return json{{"counts", r.counts.values()}, {"log_posterior", r.log_posterior}};
}

int cmd_decode(const std::string& input, const std::vector<double>& lambdas, int bag_size, bool literal) {
  if (!lambdas.empty()) {
    std::cout << decode_record(ExpectedCounts(lambdas), bag_size, literal).dump() << "\n";
    return kOk;
  }
  for_each_json_line(input, [&](const json& j) {
    try {
      const ExpectedCounts lam(j.at("lambdas").get<std::vector<double>>());
      std::cout << decode_record(lam, j.at("bag_size").get<int>(), literal).dump() << "\n";
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed decode record: ") + e.what());
    }
  });
  return kOk;
}

int cmd_assign(const std::string& input, bool no_decoder) {
  for_each_json_line(input, [&](const json& j) {
    ProbMatrix probs;
    std::vector<int> counts;
    try {
      probs = ProbMatrix::from_rows(j.at("probs").get<std::vector<std::vector<double>>>());
      if (!no_decoder) counts = j.at("counts").get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed assign record: ") + e.what());
    }
    std::vector<ClassId> labels;
    double objective;
    if (no_decoder) {
      labels = greedy_argmax_labels(probs);
      objective = labeling_objective(probs, labels);
    } else {
      InstanceLabeling r = assign_labels(probs, CountVector(std::move(counts)));
      labels = std::move(r.labels);
      objective = r.objective;
    }
    json out_labels = json::array();
    for (ClassId c : labels) out_labels.push_back(c.value);
    std::cout << json{{"labels", out_labels}, {"objective", objective}}.dump() << "\n";
  });
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"semiweak: learning instance classifiers from per-bag class counts"};
  app.require_subcommand(1);

  std::string config_path, out, data_dir, checkpoint, split = "test", input = "-", eval_out;
  std::optional<std::uint64_t> seed;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  LossOverrides overrides;
  std::vector<double> lambdas;
  int bag_size = 0;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic bag dataset");
  gen->add_option("--config", config_path, "Run config (TOML)")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Override dataset.seed");

  auto* tr = app.add_subcommand("train", "Train a model on a generated dataset");
  tr->add_option("--data", data_dir, "Dataset directory")->required();
  tr->add_option("--config", config_path, "Run config (TOML); defaults if omitted");
  tr->add_option("--out", out, "Output directory")->required();
  tr->add_option("--seed", overrides.seed, "Override train.seed");
  add_override_flags(tr, overrides);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  ev->add_option("--data", data_dir, "Dataset directory")->required();
  ev->add_option("--split", split, "Split to evaluate")->check(CLI::IsMember({"train", "test"}));
  ev->add_option("--out", eval_out, "Also write the metrics JSON here");
  ev->add_flag("--no-decoder", overrides.no_decoder, "Per-instance argmax instead of count decoding");
  ev->add_flag("--alg1-literal", overrides.alg1_literal, "Use raw pmf-difference gains in the count decoder");

  auto* bench = app.add_subcommand("bench", "Run a scenario grid over several seeds");
  bench->add_option("--config", config_path, "Scenario file (TOML)")->required();
  bench->add_option("--out", out, "Output directory")->required();
  bench->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "Override bench.seed");

  auto* dec = app.add_subcommand("decode", "Expected counts -> exact counts");
  dec->add_option("--input", input, "JSON lines {\"lambdas\": [...], \"bag_size\": n}; - for stdin");
  dec->add_option("--lambdas", lambdas, "Inline expected counts")->delimiter(',');
  dec->add_option("--bag-size", bag_size, "Bag size for --lambdas");
  dec->add_flag("--alg1-literal", overrides.alg1_literal, "Use raw pmf-difference gains");

  auto* asg = app.add_subcommand("assign", "Probabilities + counts -> instance labels");
  asg->add_option("--input", input, "JSON lines {\"probs\": [[...]], \"counts\": [...]}; - for stdin");
  asg->add_flag("--no-decoder", overrides.no_decoder, "Ignore counts and take the per-row argmax");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*gen) return cmd_gen(config_path, out, seed);
    if (*tr) return cmd_train(data_dir, config_path, out, overrides);
    if (*ev) return cmd_eval(checkpoint, data_dir, split, overrides, eval_out);
    if (*bench) return cmd_bench(config_path, out, jobs, seed);
    if (*dec) {
      if (!lambdas.empty() && bag_size <= 0) throw ConfigError("--lambdas needs --bag-size");
      return cmd_decode(input, lambdas, bag_size, overrides.alg1_literal);
    }
    if (*asg) return cmd_assign(input, overrides.no_decoder);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIoError;
  } catch (const DivergenceError& e) {
    spdlog::error("training diverged: {}", e.what());
    return kDiverged;
  } catch (const ShapeError& e) {
    spdlog::error("shape mismatch: {}", e.what());
    return kShapeMismatch;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kFailure;
}
