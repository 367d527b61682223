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

// Run configuration files.
//
// A small TOML subset: `[table]` headers, `[[scenario]]` array-of-tables
// headers, dotted bare keys, and values that are strings, booleans,
// integers, floats or single-line arrays of numbers. Comments start with #.
//
//   [dataset]                 # DatasetConfig fields
//   [train]                   # TrainConfig fields, plus reg_kind/beta/use_reg/use_cls
//   [pipeline]                # decoder, alg1_literal
//   [bench]                   # n_seeds, seed
//   [[scenario]]              # id + dotted overrides, e.g. dataset.bag_size = 16
//
// Unknown keys are errors. to_toml() writes every field explicitly; parsing
// that output reproduces the same configuration.

#pragma once

#include "semiweak/eval.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace semiweak {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TomlScalar = std::variant<bool, long long, double, std::string>;
using TomlValue = std::variant<bool, long long, double, std::string, std::vector<TomlScalar>>;
using TomlTable = std::map<std::string, TomlValue>;  // dotted key -> value

struct TomlDocument {
  TomlTable root;
  std::map<std::string, std::vector<TomlTable>> table_arrays;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return key.find("..") == std::string_view::npos;
}

inline TomlScalar parse_scalar(const std::string& text, int line_no) {
  auto fail = [&](const std::string& why) -> ConfigError {
    return ConfigError("line " + std::to_string(line_no) + ": " + why + ": '" + text + "'");
  };
  if (text.empty()) throw fail("missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') throw fail("unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      if (text[i] != '\\') {
        out += text[i];
        continue;
      }
      if (i + 2 >= text.size()) throw fail("bad escape");
      const char c = text[++i];
      out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
    }
    return out;
  }
  if (text == "true") return true;
  if (text == "false") return false;
  const bool is_float = text.find_first_of(".eE") != std::string::npos || text == "inf" ||
                        text == "+inf" || text == "-inf" || text == "nan";
  const char* first = text.data() + (text.front() == '+' ? 1 : 0);
  const char* last = text.data() + text.size();
  if (is_float) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) throw fail("bad number");
    return v;
  }
  long long v = 0;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last) throw fail("bad value");
  return v;
}

inline TomlValue parse_value(const std::string& text, int line_no) {
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
    std::vector<TomlScalar> items;
    std::stringstream ss(text.substr(1, text.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      items.push_back(parse_scalar(item, line_no));
    }
    return items;
  }
  return std::visit([](auto&& v) -> TomlValue { return v; }, parse_scalar(text, line_no));
}

}  // namespace detail

inline TomlDocument parse_toml(std::istream& in) {
  TomlDocument doc;
  TomlTable* target = &doc.root;
  std::string prefix;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.rfind("[[", 0) == 0) {
      if (line.size() < 4 || line.substr(line.size() - 2) != "]]") {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed table array header");
      }
      const std::string name = detail::trim(line.substr(2, line.size() - 4));
      if (!detail::valid_key(name)) throw ConfigError("line " + std::to_string(line_no) + ": bad table name");
      auto& arr = doc.table_arrays[name];
      arr.emplace_back();
      target = &arr.back();
      prefix.clear();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed table header");
      const std::string name = detail::trim(line.substr(1, line.size() - 2));
      if (!detail::valid_key(name)) throw ConfigError("line " + std::to_string(line_no) + ": bad table name");
      target = &doc.root;
      prefix = name + ".";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (!detail::valid_key(key)) throw ConfigError("line " + std::to_string(line_no) + ": bad key '" + key + "'");
    const std::string full = prefix + key;
    if (target->count(full)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
    (*target)[full] = detail::parse_value(detail::trim(line.substr(eq + 1)), line_no);
  }
  return doc;
}

// Everything a command needs. Scenarios inherit the top-level sections and
// apply their own overrides.
struct RunConfig {
  DatasetConfig dataset;
  TrainConfig train;
  PipelineFlags pipeline;
  int n_seeds = 5;
  RngSeed bench_seed{1};
  std::vector<Scenario> scenarios;
};

namespace detail {

inline std::string describe(const TomlValue& v) {
  return std::visit(
      [](auto&& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) return "string";
        else if constexpr (std::is_same_v<T, bool>) return "boolean";
        else if constexpr (std::is_same_v<T, long long>) return "integer";
        else if constexpr (std::is_same_v<T, double>) return "float";
        else return "array";
      },
      v);
}

inline double as_real(const std::string& key, const TomlValue& v) {
  if (auto p = std::get_if<double>(&v)) return *p;
  if (auto p = std::get_if<long long>(&v)) return static_cast<double>(*p);
  throw ConfigError("'" + key + "' must be a number, got " + describe(v));
}

inline long long as_integer(const std::string& key, const TomlValue& v) {
  if (auto p = std::get_if<long long>(&v)) return *p;
  throw ConfigError("'" + key + "' must be an integer, got " + describe(v));
}

inline int as_int(const std::string& key, const TomlValue& v) {
  const long long x = as_integer(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError("'" + key + "' out of range");
  }
  return static_cast<int>(x);
}

inline std::uint64_t as_seed(const std::string& key, const TomlValue& v) {
  const long long x = as_integer(key, v);
  if (x < 0) throw ConfigError("'" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(x);
}

inline bool as_bool(const std::string& key, const TomlValue& v) {
  if (auto p = std::get_if<bool>(&v)) return *p;
  throw ConfigError("'" + key + "' must be true or false, got " + describe(v));
}

inline std::string as_string(const std::string& key, const TomlValue& v) {
  if (auto p = std::get_if<std::string>(&v)) return *p;
  throw ConfigError("'" + key + "' must be a string, got " + describe(v));
}

inline std::vector<int> as_int_list(const std::string& key, const TomlValue& v) {
  const auto* arr = std::get_if<std::vector<TomlScalar>>(&v);
  if (!arr) throw ConfigError("'" + key + "' must be an array of integers");
  std::vector<int> out;
  for (const TomlScalar& s : *arr) {
    const auto* i = std::get_if<long long>(&s);
    if (!i) throw ConfigError("'" + key + "' must be an array of integers");
    out.push_back(static_cast<int>(*i));
  }
  return out;
}

template <class Fn>
inline void wrap_domain_errors(const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    throw ConfigError("'" + key + "': " + e.what());
  }
}

// Applies one "section.field" key to the three config sections.
inline void apply_setting(const std::string& key, const TomlValue& v, DatasetConfig& d, TrainConfig& t,
                          PipelineFlags& p) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError("unknown key '" + key + "'");
  const std::string section = key.substr(0, dot), field = key.substr(dot + 1);
  if (section == "dataset") {
    if (field == "id") d.dataset_id = as_string(key, v);
    else if (field == "distribution") wrap_domain_errors(key, [&] { d.distribution = parse_distribution(as_string(key, v)); });
    else if (field == "bag_size") d.bag_size = as_int(key, v);
    else if (field == "lambda") d.lambda = as_real(key, v);
    else if (field == "n_train_bags") d.n_train_bags = as_int(key, v);
    else if (field == "n_test_bags") d.n_test_bags = as_int(key, v);
    else if (field == "num_classes") d.num_classes = as_int(key, v);
    else if (field == "feature_dim") d.feature_dim = as_int(key, v);
    else if (field == "cluster_separation") d.cluster_separation = as_real(key, v);
    else if (field == "reuse_cap") d.reuse_cap = as_int(key, v);
    else if (field == "pool_per_class") d.pool_per_class = as_int(key, v);
    else if (field == "seed") d.seed = RngSeed{as_seed(key, v)};
    else throw ConfigError("unknown key '" + key + "'");
  } else if (section == "train") {
    if (field == "lr0") t.lr0 = as_real(key, v);
    else if (field == "epochs") t.epochs = as_int(key, v);
    else if (field == "lr_milestones") t.lr_milestones = as_int_list(key, v);
    else if (field == "lr_decay") t.lr_decay = as_real(key, v);
    else if (field == "weight_decay") t.weight_decay = as_real(key, v);
    else if (field == "batch_bags") t.batch_bags = as_int(key, v);
    else if (field == "momentum") t.momentum = as_real(key, v);
    else if (field == "hidden_layers") t.hidden_layers = as_int_list(key, v);
    else if (field == "reg_kind") wrap_domain_errors(key, [&] { t.loss.reg_kind = parse_reg_kind(as_string(key, v)); });
    else if (field == "beta") t.loss.beta = as_real(key, v);
    else if (field == "use_reg") t.loss.use_reg = as_bool(key, v);
    else if (field == "use_cls") t.loss.use_cls = as_bool(key, v);
    else if (field == "seed") t.seed = RngSeed{as_seed(key, v)};
    else throw ConfigError("unknown key '" + key + "'");
  } else if (section == "pipeline") {
    if (field == "decoder") p.decoder = as_bool(key, v);
    else if (field == "alg1_literal") p.alg1_literal = as_bool(key, v);
    else throw ConfigError("unknown key '" + key + "'");
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

inline void validate_sections(const std::string& where, const DatasetConfig& d, const TrainConfig& t) {
  try {
    d.validate();
    t.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(where + e.what());
  }
}

}  // namespace detail

inline RunConfig build_run_config(const TomlDocument& doc) {
  RunConfig cfg;
  for (const auto& [key, value] : doc.root) {
    if (key == "bench.n_seeds") {
      cfg.n_seeds = detail::as_int(key, value);
      if (cfg.n_seeds < 1) throw ConfigError("'bench.n_seeds' must be >= 1");
    } else if (key == "bench.seed") {
      cfg.bench_seed = RngSeed{detail::as_seed(key, value)};
    } else {
      detail::apply_setting(key, value, cfg.dataset, cfg.train, cfg.pipeline);
    }
  }
  cfg.train.pipeline = cfg.pipeline;
  detail::validate_sections("", cfg.dataset, cfg.train);

  for (const auto& [name, tables] : doc.table_arrays) {
    if (name != "scenario") throw ConfigError("unknown table array [[" + name + "]]");
    for (const TomlTable& table : tables) {
      Scenario s{"", cfg.dataset, cfg.train, cfg.pipeline};
      for (const auto& [key, value] : table) {
        if (key == "id") s.id = detail::as_string(key, value);
        else detail::apply_setting(key, value, s.dataset, s.train, s.pipeline);
      }
      if (s.id.empty()) throw ConfigError("scenario without an id");
      s.train.pipeline = s.pipeline;
      if (s.dataset.dataset_id == cfg.dataset.dataset_id) s.dataset.dataset_id = s.id;
      detail::validate_sections("scenario '" + s.id + "': ", s.dataset, s.train);
      for (const Scenario& other : cfg.scenarios) {
        if (other.id == s.id) throw ConfigError("duplicate scenario id '" + s.id + "'");
      }
      cfg.scenarios.push_back(std::move(s));
    }
  }
  return cfg;
}

inline RunConfig parse_run_config(std::istream& in) { return build_run_config(parse_toml(in)); }

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_run_config(in);
}

// ---------------------------------------------------------------------------
// Echo.

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string format_list(const std::vector<int>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + std::to_string(xs[i]);
  return s + "]";
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline void emit_sections(std::ostream& os, const std::string& prefix, const DatasetConfig& d,
                          const TrainConfig& t, const PipelineFlags& p, bool headers) {
  auto key = [&](const char* section, const char* field) {
    return headers ? std::string(field) : prefix + section + "." + field;
  };
  if (headers) os << "[dataset]\n";
  os << key("dataset", "id") << " = " << quote(d.dataset_id) << "\n"
     << key("dataset", "distribution") << " = " << quote(std::string(to_string(d.distribution))) << "\n"
     << key("dataset", "bag_size") << " = " << d.bag_size << "\n"
     << key("dataset", "lambda") << " = " << format_real(d.lambda) << "\n"
     << key("dataset", "n_train_bags") << " = " << d.n_train_bags << "\n"
     << key("dataset", "n_test_bags") << " = " << d.n_test_bags << "\n"
     << key("dataset", "num_classes") << " = " << d.num_classes << "\n"
     << key("dataset", "feature_dim") << " = " << d.feature_dim << "\n"
     << key("dataset", "cluster_separation") << " = " << format_real(d.cluster_separation) << "\n"
     << key("dataset", "reuse_cap") << " = " << d.reuse_cap << "\n"
     << key("dataset", "pool_per_class") << " = " << d.pool_per_class << "\n"
     << key("dataset", "seed") << " = " << d.seed.value << "\n";
  if (headers) os << "\n[train]\n";
  os << key("train", "lr0") << " = " << format_real(t.lr0) << "\n"
     << key("train", "epochs") << " = " << t.epochs << "\n"
     << key("train", "lr_milestones") << " = " << format_list(t.lr_milestones) << "\n"
     << key("train", "lr_decay") << " = " << format_real(t.lr_decay) << "\n"
     << key("train", "weight_decay") << " = " << format_real(t.weight_decay) << "\n"
     << key("train", "batch_bags") << " = " << t.batch_bags << "\n"
     << key("train", "momentum") << " = " << format_real(t.momentum) << "\n"
     << key("train", "hidden_layers") << " = " << format_list(t.hidden_layers) << "\n"
     << key("train", "reg_kind") << " = " << quote(std::string(to_string(t.loss.reg_kind))) << "\n"
     << key("train", "beta") << " = " << format_real(t.loss.beta) << "\n"
     << key("train", "use_reg") << " = " << (t.loss.use_reg ? "true" : "false") << "\n"
     << key("train", "use_cls") << " = " << (t.loss.use_cls ? "true" : "false") << "\n"
     << key("train", "seed") << " = " << t.seed.value << "\n";
  if (headers) os << "\n[pipeline]\n";
  os << key("pipeline", "decoder") << " = " << (p.decoder ? "true" : "false") << "\n"
     << key("pipeline", "alg1_literal") << " = " << (p.alg1_literal ? "true" : "false") << "\n";
}

}  // namespace detail

inline std::string to_toml(const RunConfig& cfg) {
  std::ostringstream os;
  detail::emit_sections(os, "", cfg.dataset, cfg.train, cfg.pipeline, true);
  os << "\n[bench]\n"
     << "n_seeds = " << cfg.n_seeds << "\n"
     << "seed = " << cfg.bench_seed.value << "\n";
  for (const Scenario& s : cfg.scenarios) {
    os << "\n[[scenario]]\n"
       << "id = " << detail::quote(s.id) << "\n";
    detail::emit_sections(os, "", s.dataset, s.train, s.pipeline, false);
  }
  return os.str();
}

}  // namespace semiweak
