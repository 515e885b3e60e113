// Copyright 2026 The CLEO Authors. All Rights Reserved.
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

// Experiment plumbing behind the command-line tool: configuration, dataset
// files, runs and their reports.
//
// Config file schema (every key optional unless noted):
//
//   {
//     "preset": "cs_ex2",            // exactly one of preset / sequence
//     "sequence": "path/to/seq.json",
//     "method": "moon",              // finetune|joint|kd_standard|mib|moon
//     "seed": 0,
//     "out": "runs/moon",
//     "data": "datasets/cs_ex2",     // run: existing dataset directory
//     "epochs": 50,                  // default 50 for cs_*, 30 otherwise
//     "lambda": 1.0,
//     "train": {"lr_first", "lr_later", "batch_pixels", "momentum",
//               "head_init", "hidden", "supervision"},
//     "synth": {"dim", "anchor_sep", "child_radius", "sigma",
//               "scenes_per_task", "eval_scenes", "height", "width",
//               "regions", "min_side", "task_bias", "min_eval_pixels"}
//   }
//
// Command-line flags override file values.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cleo/error.hpp"
#include "cleo/hash.hpp"
#include "cleo/learner.hpp"
#include "cleo/metrics.hpp"
#include "cleo/ontology.hpp"
#include "cleo/presets.hpp"
#include "cleo/sequence_io.hpp"
#include "cleo/synthdata.hpp"
#include "json.hpp"

namespace cleo {

namespace fs = std::filesystem;
using nlohmann::json;

struct ExperimentConfig {
  std::string preset;
  std::string sequence_path;
  Method method = Method::kMoon;
  std::uint64_t seed = 0;
  std::string out;
  std::string data_dir;
  std::optional<std::size_t> epochs;
  TrainConfig train;
  BenchmarkConfig synth;

  std::size_t resolved_epochs() const {
    if (epochs) return *epochs;
    return default_epochs(preset);
  }
};

namespace detail {

template <class T>
void read_key(const json& obj, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> keys,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown config key '" + where + k + "'");
  }
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
}

inline json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline std::string dump(const json& j) { return j.dump(1) + "\n"; }

}  // namespace detail

inline ExperimentConfig config_from_json(const json& doc) {
  detail::reject_unknown(doc,
                         {"preset", "sequence", "method", "seed", "out", "data",
                          "epochs", "lambda", "train", "synth"},
                         "");
  ExperimentConfig cfg;
  detail::read_key(doc, "preset", cfg.preset);
  detail::read_key(doc, "sequence", cfg.sequence_path);
  std::string method = std::string(to_string(cfg.method));
  detail::read_key(doc, "method", method);
  cfg.method = parse_method(method);
  detail::read_key(doc, "seed", cfg.seed);
  detail::read_key(doc, "out", cfg.out);
  detail::read_key(doc, "data", cfg.data_dir);
  if (doc.contains("epochs")) {
    std::size_t e = 0;
    detail::read_key(doc, "epochs", e);
    cfg.epochs = e;
  }
  detail::read_key(doc, "lambda", cfg.train.lambda);
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    detail::reject_unknown(t,
                           {"lr_first", "lr_later", "batch_pixels", "momentum",
                            "head_init", "hidden", "supervision"},
                           "train.");
    detail::read_key(t, "lr_first", cfg.train.lr_first);
    detail::read_key(t, "lr_later", cfg.train.lr_later);
    detail::read_key(t, "batch_pixels", cfg.train.batch_pixels);
    detail::read_key(t, "momentum", cfg.train.momentum);
    detail::read_key(t, "hidden", cfg.train.hidden);
    std::string head = std::string(to_string(cfg.train.head_init));
    detail::read_key(t, "head_init", head);
    cfg.train.head_init = parse_head_init(head);
    std::string sup = std::string(to_string(cfg.train.supervision));
    detail::read_key(t, "supervision", sup);
    cfg.train.supervision = parse_supervision(sup);
  }
  if (doc.contains("synth")) {
    const json& s = doc.at("synth");
    detail::reject_unknown(s,
                           {"dim", "anchor_sep", "child_radius", "sigma",
                            "scenes_per_task", "eval_scenes", "height", "width",
                            "regions", "min_side", "task_bias",
                            "min_eval_pixels"},
                           "synth.");
    detail::read_key(s, "dim", cfg.synth.dim);
    detail::read_key(s, "anchor_sep", cfg.synth.anchor_sep);
    detail::read_key(s, "child_radius", cfg.synth.child_radius);
    detail::read_key(s, "sigma", cfg.synth.sigma);
    detail::read_key(s, "scenes_per_task", cfg.synth.scenes_per_task);
    detail::read_key(s, "eval_scenes", cfg.synth.eval_scenes);
    detail::read_key(s, "height", cfg.synth.scene.height);
    detail::read_key(s, "width", cfg.synth.scene.width);
    detail::read_key(s, "regions", cfg.synth.scene.regions);
    detail::read_key(s, "min_side", cfg.synth.scene.min_side);
    detail::read_key(s, "task_bias", cfg.synth.task_bias);
    detail::read_key(s, "min_eval_pixels", cfg.synth.min_eval_pixels);
  }
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  try {
    return config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
}

/// The fully resolved configuration, as recorded next to every output.
inline json config_to_json(const ExperimentConfig& cfg) {
  json doc;
  if (!cfg.preset.empty()) doc["preset"] = cfg.preset;
  if (!cfg.sequence_path.empty()) doc["sequence"] = cfg.sequence_path;
  doc["method"] = std::string(to_string(cfg.method));
  doc["seed"] = cfg.seed;
  if (!cfg.data_dir.empty()) doc["data"] = cfg.data_dir;
  doc["epochs"] = cfg.resolved_epochs();
  doc["lambda"] = cfg.train.lambda;
  doc["train"] = {{"lr_first", cfg.train.lr_first},
                  {"lr_later", cfg.train.lr_later},
                  {"batch_pixels", cfg.train.batch_pixels},
                  {"momentum", cfg.train.momentum},
                  {"head_init", std::string(to_string(cfg.train.head_init))},
                  {"hidden", cfg.train.hidden},
                  {"supervision", std::string(to_string(cfg.train.supervision))}};
  doc["synth"] = {{"dim", cfg.synth.dim},
                  {"anchor_sep", cfg.synth.anchor_sep},
                  {"child_radius", cfg.synth.child_radius},
                  {"sigma", cfg.synth.sigma},
                  {"scenes_per_task", cfg.synth.scenes_per_task},
                  {"eval_scenes", cfg.synth.eval_scenes},
                  {"height", cfg.synth.scene.height},
                  {"width", cfg.synth.scene.width},
                  {"regions", cfg.synth.scene.regions},
                  {"min_side", cfg.synth.scene.min_side},
                  {"task_bias", cfg.synth.task_bias},
                  {"min_eval_pixels", cfg.synth.min_eval_pixels}};
  return doc;
}

/// Loads and validates the configured task sequence.
inline TaskSequence load_experiment_sequence(const ExperimentConfig& cfg) {
  if (cfg.preset.empty() == cfg.sequence_path.empty())
    throw ConfigError("give exactly one of a preset or a sequence file");
  TaskSequence seq = cfg.preset.empty() ? load_sequence_file(cfg.sequence_path)
                                        : load_preset(cfg.preset);
  const auto check = validate_sequence(seq);
  if (!check.ok()) {
    std::string msg = "invalid task sequence:";
    for (const auto& v : check.violations)
      msg += "\n  task " + std::to_string(v.task) + ": " + v.kind + ": " +
             v.detail;
    throw ConfigError(msg);
  }
  return seq;
}

/// Seeds for data generation and training, both derived from the run seed.
inline std::uint64_t data_seed(std::uint64_t seed) {
  return substream_seed(seed, 0xda7a);
}
inline std::uint64_t train_seed(std::uint64_t seed) {
  return substream_seed(seed, 0x7ea1);
}

inline Benchmark build_benchmark(const TaskSequence& seq,
                                 const ExperimentConfig& cfg) {
  const std::uint64_t s = data_seed(cfg.seed);
  const auto model = build_class_model(seq.ontology, cfg.synth.dim,
                                       cfg.synth.anchor_sep,
                                       cfg.synth.child_radius, cfg.synth.sigma,
                                       substream_seed(s, 1));
  BenchmarkConfig bc = cfg.synth;
  bc.seed = substream_seed(s, 2);
  return generate_benchmark(seq, model, bc);
}

inline std::vector<PixelSet> pixel_sets(const Benchmark& bench) {
  std::vector<PixelSet> out;
  for (const auto& scenes : bench.tasks) {
    PixelSet ps;
    for (const auto& s : scenes) {
      if (ps.dim == 0) ps.dim = s.features.dim;
      if (s.features.dim != ps.dim || s.features.pixels() != s.labels.size() ||
          s.labels.size() != s.finest.size())
        throw DataError("task " + std::to_string(out.size()) +
                        ": scenes with inconsistent dimensions");
      ps.features.insert(ps.features.end(), s.features.values.begin(),
                         s.features.values.end());
      ps.labels.insert(ps.labels.end(), s.labels.labels.begin(),
                       s.labels.labels.end());
      ps.finest.insert(ps.finest.end(), s.finest.labels.begin(),
                       s.finest.labels.end());
    }
    out.push_back(std::move(ps));
  }
  return out;
}

/// Predicted class ids for one scene.
inline LabelGrid predict_scene(const ModelParams& m,
                               std::span<const ClassId> space,
                               const FeatureGrid& features) {
  const auto idx = predict(m, features.values);
  LabelGrid out(features.height, features.width);
  for (std::size_t i = 0; i < idx.size(); ++i) out.labels[i] = space[idx[i]];
  return out;
}

struct Evaluation {
  ConfusionMatrix cm;
  GroupReport groups;
  TaskwiseReport taskwise;
};

/// Scores the final model on the eval scenes.
inline Evaluation evaluate(const TaskSequence& seq, const ModelParams& m,
                           std::span<const LabelledScene> eval) {
  const auto space = label_space_at(seq, seq.last_task());
  if (space.size() != m.classes)
    throw DataError("final model head does not cover the final label space");
  Evaluation ev{ConfusionMatrix(space, seq.ontology.size()), {}, {}};
  for (const auto& s : eval)
    ev.cm.accumulate(predict_scene(m, space, s.features), s.labels);
  const auto groups = class_groups(seq);
  ev.groups = group_report(ev.cm, groups);
  ev.taskwise = taskwise_report(ev.cm, seq, groups);
  return ev;
}

/// mIoU of an intermediate model over the classes evaluated after its task.
inline std::optional<double> checkpoint_miou(const TaskSequence& seq,
                                             const Checkpoint& ck,
                                             std::span<const LabelledScene> eval) {
  const auto map = eval_map_at(seq, ck.task);
  ConfusionMatrix cm(ck.label_space, seq.ontology.size());
  for (const auto& s : eval) {
    LabelGrid truth(s.finest.height, s.finest.width);
    for (std::size_t i = 0; i < truth.size(); ++i)
      truth.labels[i] = map[s.finest.labels[i]];
    cm.accumulate(predict_scene(ck.params, ck.label_space, s.features), truth);
  }
  std::vector<std::optional<double>> v;
  for (ClassId c : evaluated_classes_at(seq, ck.task)) v.push_back(cm.iou(c));
  return mean_iou(v);
}

inline double effective_lambda(Method m, double lambda) {
  return distill_mode(m) ? lambda : 0.0;
}

struct RunOutcome {
  RunResult run;
  Evaluation eval;
};

/// Trains `method` on the benchmark and evaluates the final model.
inline RunOutcome run_benchmark(const TaskSequence& seq, const Benchmark& bench,
                                Method method, TrainConfig train) {
  train.lambda = effective_lambda(method, train.lambda);
  const auto data = pixel_sets(bench);
  RunOutcome out;
  out.run = run_sequence(seq, data, method, train);
  out.eval = evaluate(seq, out.run.final_params, bench.eval);
  return out;
}

inline TrainConfig resolved_train(const ExperimentConfig& cfg) {
  TrainConfig t = cfg.train;
  t.epochs = cfg.resolved_epochs();
  t.seed = train_seed(cfg.seed);
  return t;
}

// Dataset directory layout:
//   sequence.json, receipt.json,
//   task_<t>/manifest.json, task_<t>/scene_<s>.{features,labels,finest},
//   eval/manifest.json, eval/scene_<s>.{features,labels,finest}

namespace detail {

inline std::string scene_stem(std::size_t s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04zu", s);
  return buf;
}

inline json write_scenes(const fs::path& root, const std::string& sub,
                         std::span<const LabelledScene> scenes,
                         std::map<std::string, std::string>& hashes) {
  json list = json::array();
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const std::string stem = sub + "/" + scene_stem(s);
    std::ostringstream f;
    write_feature_grid(f, scenes[s].features);
    const std::map<std::string, std::string> files{
        {stem + ".features", f.str()},
        {stem + ".labels", label_grid_to_string(scenes[s].labels)},
        {stem + ".finest", label_grid_to_string(scenes[s].finest)}};
    for (const auto& [rel, bytes] : files) {
      write_file(root / rel, bytes);
      hashes[rel] = sha256_hex(bytes);
    }
    list.push_back({{"features", stem + ".features"},
                    {"labels", stem + ".labels"},
                    {"finest", stem + ".finest"}});
  }
  return list;
}

inline std::vector<LabelledScene> read_scenes(const fs::path& root,
                                              const json& manifest,
                                              const std::string& where) {
  std::vector<LabelledScene> out;
  try {
    for (const auto& entry : manifest.at("scenes")) {
      LabelledScene s;
      std::ifstream f(root / entry.at("features").get<std::string>(),
                      std::ios::binary);
      if (!f) throw DataError(where + ": missing feature file");
      s.features = read_feature_grid(f);
      s.labels = parse_label_grid(
          read_text_file((root / entry.at("labels").get<std::string>()).string()));
      s.finest = parse_label_grid(
          read_text_file((root / entry.at("finest").get<std::string>()).string()));
      if (s.labels.size() != s.features.pixels() ||
          s.finest.size() != s.features.pixels())
        throw DataError(where + ": label and feature grids differ in size");
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError(where + ": malformed manifest: " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
  return out;
}

inline json read_json_file(const fs::path& path, const std::string& what) {
  try {
    return json::parse(read_text_file(path.string()));
  } catch (const json::exception& e) {
    throw DataError(what + " is corrupt: " + e.what());
  }
}

}  // namespace detail

/// Writes the benchmark files and returns the receipt that was written.
inline json write_dataset(const fs::path& dir, const TaskSequence& seq,
                          const Benchmark& bench, const ExperimentConfig& cfg) {
  std::map<std::string, std::string> hashes;
  const std::string seq_text = serialize_sequence(seq);
  detail::write_file(dir / "sequence.json", seq_text);
  hashes["sequence.json"] = sha256_hex(seq_text);
  for (std::size_t t = 0; t < bench.tasks.size(); ++t) {
    const std::string sub = "task_" + std::to_string(t);
    json manifest{{"task", t},
                  {"scenes", detail::write_scenes(dir, sub, bench.tasks[t], hashes)}};
    const std::string text = detail::dump(manifest);
    detail::write_file(dir / sub / "manifest.json", text);
    hashes[sub + "/manifest.json"] = sha256_hex(text);
  }
  json eval{{"task", seq.last_task()},
            {"split", "eval"},
            {"scenes", detail::write_scenes(dir, "eval", bench.eval, hashes)}};
  const std::string eval_text = detail::dump(eval);
  detail::write_file(dir / "eval" / "manifest.json", eval_text);
  hashes["eval/manifest.json"] = sha256_hex(eval_text);

  json receipt{{"seed", cfg.seed},
               {"parameters", config_to_json(cfg)["synth"]},
               {"sequence_sha256", sha256_hex(seq_text)},
               {"files", hashes}};
  if (!cfg.preset.empty()) receipt["preset"] = cfg.preset;
  detail::write_file(dir / "receipt.json", detail::dump(receipt));
  return receipt;
}

inline Benchmark load_dataset(const fs::path& dir, const TaskSequence& seq) {
  if (!fs::is_directory(dir))
    throw DataError("dataset directory '" + dir.string() + "' does not exist");
  const std::string stored = read_text_file((dir / "sequence.json").string());
  if (stored != serialize_sequence(seq))
    throw DataError("dataset was generated for a different task sequence");
  Benchmark bench;
  for (std::size_t t = 0; t < seq.tasks.size(); ++t) {
    const std::string where = "task " + std::to_string(t);
    const fs::path manifest = dir / ("task_" + std::to_string(t)) / "manifest.json";
    if (!fs::exists(manifest)) throw DataError(where + ": missing manifest");
    bench.tasks.push_back(
        detail::read_scenes(dir, detail::read_json_file(manifest, where), where));
  }
  bench.eval = detail::read_scenes(
      dir, detail::read_json_file(dir / "eval" / "manifest.json", "eval manifest"),
      "eval");
  return bench;
}

inline json cmd_generate(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("generate needs an output directory");
  const auto seq = load_experiment_sequence(cfg);
  const auto bench = build_benchmark(seq, cfg);
  return write_dataset(cfg.out, seq, bench, cfg);
}

/// Runs one experiment and writes checkpoints, CSV reports, summary.json and
/// receipt.json into cfg.out. Returns the summary.
inline json cmd_run(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("run needs an output directory");
  const auto seq = load_experiment_sequence(cfg);
  const TrainConfig train = resolved_train(cfg);
  train.validate();
  const Benchmark bench =
      cfg.data_dir.empty() ? build_benchmark(seq, cfg) : load_dataset(cfg.data_dir, seq);
  const RunOutcome outcome = run_benchmark(seq, bench, cfg.method, train);

  const fs::path out(cfg.out);
  std::map<std::string, std::string> hashes;
  auto emit = [&](const std::string& rel, const std::string& bytes) {
    detail::write_file(out / rel, bytes);
    hashes[rel] = sha256_hex(bytes);
  };
  const std::string seq_text = serialize_sequence(seq);
  emit("config.json", detail::dump(config_to_json(cfg)));
  emit("sequence.json", seq_text);

  json checkpoints = json::array();
  for (const Checkpoint& ck : outcome.run.checkpoints) {
    std::vector<std::string> names;
    for (ClassId c : ck.label_space) names.push_back(seq.ontology.name(c));
    std::ostringstream bytes;
    write_checkpoint(bytes, ck.params, names);
    const std::string rel = "checkpoints/task_" + std::to_string(ck.task) + ".ckpt";
    emit(rel, bytes.str());
    checkpoints.push_back({{"task", ck.task},
                           {"file", rel},
                           {"all_miou", detail::optional_number(
                                            checkpoint_miou(seq, ck, bench.eval))}});
  }

  const std::string method = std::string(to_string(cfg.method));
  std::ostringstream group_csv, task_csv;
  write_group_csv(group_csv, outcome.eval.groups, seq.ontology);
  write_taskwise_header(task_csv, seq.tasks.size());
  write_taskwise_row(task_csv, method, outcome.eval.taskwise);
  emit("report.csv", group_csv.str());
  emit("taskwise.csv", task_csv.str());

  const GroupReport& g = outcome.eval.groups;
  json taskwise = json::array();
  for (const auto& v : outcome.eval.taskwise.tasks)
    taskwise.push_back(detail::optional_number(v));
  json traces = json::array();
  for (const TaskResult& r : outcome.run.tasks)
    traces.push_back({{"lr", r.lr}, {"loss", r.loss_trace}});
  json summary{
      {"method", method},
      {"seed", cfg.seed},
      {"lambda", effective_lambda(cfg.method, train.lambda)},
      {"epochs", train.epochs},
      {"head_init", std::string(to_string(train.head_init))},
      {"sequence_sha256", sha256_hex(seq_text)},
      {"groups",
       {{"unsplit", detail::optional_number(g.unsplit_miou)},
        {"split", detail::optional_number(g.split_miou)},
        {"retained", detail::optional_number(g.retained_miou)},
        {"split_retained", detail::optional_number(g.split_retained_miou)},
        {"all", detail::optional_number(g.all_miou)}}},
      {"taskwise", taskwise},
      {"checkpoints", checkpoints},
      {"training", traces}};
  summary["preset"] = cfg.preset.empty() ? json(nullptr) : json(cfg.preset);
  summary["data"] = cfg.data_dir.empty() ? json("generated") : json(cfg.data_dir);
  if (!cfg.data_dir.empty()) {
    const fs::path r = fs::path(cfg.data_dir) / "receipt.json";
    if (fs::exists(r)) summary["data_receipt_sha256"] = sha256_file(r.string());
  }
  emit("summary.json", detail::dump(summary));
  detail::write_file(out / "receipt.json",
                     detail::dump(json{{"seed", cfg.seed}, {"files", hashes}}));
  return summary;
}

/// Merges the summaries of completed runs into one CSV.
inline void cmd_report(std::span<const std::string> run_dirs, std::ostream& out) {
  if (run_dirs.empty()) throw ConfigError("report needs at least one run directory");
  out << "run,preset,method,seed,unsplit,split,retained,all\n";
  for (const std::string& dir : run_dirs) {
    const fs::path path = fs::path(dir) / "summary.json";
    if (!fs::exists(path))
      throw DataError("missing summary in '" + dir + "'");
    const json s = detail::read_json_file(path, path.string());
    try {
      auto num = [&](const char* key) {
        const json& v = s.at("groups").at(key);
        return v.is_null() ? std::optional<double>() : std::optional(v.get<double>());
      };
      out << csv::field(dir) << ','
          << csv::field(s.at("preset").is_null() ? "" : s.at("preset").get<std::string>())
          << ',' << csv::field(s.at("method").get<std::string>()) << ','
          << s.at("seed").get<std::uint64_t>() << ',' << csv::number(num("unsplit"))
          << ',' << csv::number(num("split")) << ',' << csv::number(num("retained"))
          << ',' << csv::number(num("all")) << '\n';
    } catch (const json::exception& e) {
      throw DataError("corrupt summary in '" + dir + "': " + e.what());
    }
  }
}

/// One line per shipped preset: task count, class count and group sizes.
inline void cmd_presets(std::ostream& out, bool list_groups = false) {
  for (const std::string& name : preset_names()) {
    const TaskSequence seq = load_preset(name);
    const auto groups = class_groups(seq);
    out << name << "  tasks=" << seq.tasks.size()
        << "  classes=" << seq.ontology.size()
        << "  unsplit=" << groups.unsplit.size()
        << "  split=" << groups.split.size()
        << "  retained=" << groups.retained.size()
        << "  evaluated=" << groups.evaluated.size() << '\n';
    if (!list_groups) continue;
    auto list = [&](const char* label, std::span<const ClassId> ids) {
      out << "  " << label << ":";
      for (ClassId c : ids) out << " [" << seq.ontology.name(c) << "]";
      out << '\n';
    };
    list("unsplit", groups.unsplit);
    list("split", groups.split);
    out << "  retained:";
    for (const auto& [parent, leaves] : groups.retained) {
      out << " [" << seq.ontology.name(parent) << " (";
      for (std::size_t i = 0; i < leaves.size(); ++i)
        out << (i ? ", " : "") << seq.ontology.name(leaves[i]);
      out << ")]";
    }
    out << '\n';
  }
}

}  // namespace cleo
