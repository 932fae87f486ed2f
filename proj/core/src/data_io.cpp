#include "muphirm/data_io.hpp"
#include <cstdio>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace muphirm {
namespace {

using nlohmann::json;

json parse_json_line(const std::string& line, std::string_view origin, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string(origin) + ":" + std::to_string(line_no) +
                             ": invalid JSON: " + e.what());
  }
}

[[noreturn]] void field_error(std::string_view origin, std::size_t line_no,
                              const std::string& field, const std::string& why) {
  throw std::runtime_error(std::string(origin) + ":" + std::to_string(line_no) + ": field '" +
                           field + "' " + why);
}

std::string required_string(const json& record, const char* field, std::string_view origin,
                            std::size_t line_no) {
  if (!record.contains(field)) field_error(origin, line_no, field, "is missing");
  if (!record.at(field).is_string()) field_error(origin, line_no, field, "must be a string");
  return record.at(field).get<std::string>();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

template <typename Fn>
void for_each_jsonl_record(std::istream& in, std::string_view origin, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) continue;
    fn(parse_json_line(line, origin, line_no), line_no);
  }
}

}  // namespace

std::vector<Sample> parse_dataset(std::istream& in, std::string_view origin) {
  std::vector<Sample> samples;
  std::unordered_map<std::string, std::size_t> index_by_id;
  std::unordered_map<std::string, std::size_t> line_by_id;

  for_each_jsonl_record(in, origin, [&](const json& record, std::size_t line_no) {
    Sample s;
    s.id = required_string(record, "id", origin, line_no);
    if (s.id.empty()) field_error(origin, line_no, "id", "must be non-empty");
    if (index_by_id.count(s.id) > 0) field_error(origin, line_no, "id", "duplicates '" + s.id + "'");
    s.embedded_text = required_string(record, "embedded_text", origin, line_no);

    if (!record.contains("label") || !record.at("label").is_number_integer()) {
      field_error(origin, line_no, "label", "must be an integer 0 or 1");
    }
    int label = record.at("label").get<int>();
    if (label != 0 && label != 1) field_error(origin, line_no, "label", "must be 0 or 1");
    s.label = label;

    if (record.contains("harm_class")) {
      std::string raw = required_string(record, "harm_class", origin, line_no);
      auto parsed = harm_class_from_string(raw);
      if (!parsed) {
        field_error(origin, line_no, "harm_class",
                    "must be one of hate_speech, physical_harm, porn, fraud");
      }
      s.harm_class = *parsed;
    }
    if (record.contains("harm_subclass")) {
      s.harm_subclass = required_string(record, "harm_subclass", origin, line_no);
    }
    if (record.contains("gold_rationale")) {
      s.gold_rationale = required_string(record, "gold_rationale", origin, line_no);
    }
    if (record.contains("dataset")) {
      s.dataset = DatasetId::from_string(required_string(record, "dataset", origin, line_no));
    }
    if (record.contains("counterfactual_pair_id")) {
      s.counterfactual_pair_id =
          required_string(record, "counterfactual_pair_id", origin, line_no);
    }
    if (record.contains("feature_id")) {
      if (!record.at("feature_id").is_number_integer()) {
        field_error(origin, line_no, "feature_id", "must be a non-negative integer");
      }
      s.feature_id = record.at("feature_id").get<int>();
      if (s.feature_id < 0) {
        field_error(origin, line_no, "feature_id", "must be a non-negative integer");
      }
    }

    if (s.dataset.kind == DatasetId::Kind::kMuPHI) {
      if (s.label == 1 && !s.harm_class.has_value()) {
        field_error(origin, line_no, "harm_class", "is required for harmful MuPHI samples");
      }
      if (s.label == 0 && s.harm_class.has_value()) {
        field_error(origin, line_no, "harm_class", "must be absent for benign MuPHI samples");
      }
    }

    index_by_id.emplace(s.id, samples.size());
    line_by_id.emplace(s.id, line_no);
    samples.push_back(std::move(s));
  });

  for (const Sample& s : samples) {
    if (!s.counterfactual_pair_id.has_value()) continue;
    auto it = index_by_id.find(*s.counterfactual_pair_id);
    std::size_t line_no = line_by_id.at(s.id);
    if (it == index_by_id.end()) {
      field_error(origin, line_no, "counterfactual_pair_id",
                  "references unknown sample '" + *s.counterfactual_pair_id + "'");
    }
    if (samples[it->second].label == s.label) {
      field_error(origin, line_no, "counterfactual_pair_id",
                  "references same-label sample '" + *s.counterfactual_pair_id + "'");
    }
  }
  return samples;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
  return parse_dataset(in, path.string());
}

void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ostringstream out;
  for (const Sample& s : samples) {
    json record;
    record["id"] = s.id;
    record["embedded_text"] = s.embedded_text;
    record["label"] = s.label;
    if (s.harm_class) record["harm_class"] = std::string(to_string(*s.harm_class));
    if (s.harm_subclass) record["harm_subclass"] = *s.harm_subclass;
    if (s.gold_rationale) record["gold_rationale"] = *s.gold_rationale;
    record["dataset"] = s.dataset.name;
    if (s.counterfactual_pair_id) record["counterfactual_pair_id"] = *s.counterfactual_pair_id;
    record["feature_id"] = s.feature_id;
    out << record.dump() << "\n";
  }
  atomic_write_file(path, out.str());
}

std::vector<CompletionRecord> load_completions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open completions file: " + path.string());
  std::vector<CompletionRecord> records;
  std::unordered_set<std::string> seen;
  for_each_jsonl_record(in, path.string(), [&](const json& record, std::size_t line_no) {
    CompletionRecord r;
    r.sample_id = required_string(record, "sample_id", path.string(), line_no);
    r.completion = required_string(record, "completion", path.string(), line_no);
    if (!seen.insert(r.sample_id).second) {
      field_error(path.string(), line_no, "sample_id", "duplicates '" + r.sample_id + "'");
    }
    records.push_back(std::move(r));
  });
  return records;
}

void write_completions(const std::filesystem::path& path,
                       std::span<const CompletionRecord> records) {
  std::ostringstream out;
  for (const CompletionRecord& r : records) {
    json record;
    record["sample_id"] = r.sample_id;
    record["completion"] = r.completion;
    out << record.dump() << "\n";
  }
  atomic_write_file(path, out.str());
}

std::vector<RubricScore> load_rubric_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rubric scores file: " + path.string());
  std::vector<RubricScore> scores;
  for_each_jsonl_record(in, path.string(), [&](const json& record, std::size_t line_no) {
    auto read_int = [&](const char* field) {
      if (!record.contains(field) || !record.at(field).is_number_integer()) {
        field_error(path.string(), line_no, field, "must be an integer");
      }
      return record.at(field).get<int>();
    };
    RubricScore s;
    s.visual_grounding = read_int("vg");
    s.text_grounding = read_int("tg");
    s.cross_modal = read_int("cm");
    s.harm_mechanism = read_int("hm");
    s.verdict_consistency = read_int("vc");
    try {
      s.validate();
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    scores.push_back(s);
  });
  return scores;
}

TrainConfig parse_train_config(std::string_view json_text, const std::filesystem::path& base_dir,
                               bool check_paths, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string(origin) + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error(std::string(origin) + ": config must be a JSON object");
  }

  TrainConfig config;
  auto resolve = [&](const std::filesystem::path& p) {
    return p.is_absolute() ? p : base_dir / p;
  };

  if (doc.contains("grpo")) {
    const json& g = doc.at("grpo");
    if (g.contains("group_size")) config.grpo.group_size = g.at("group_size").get<int>();
    if (g.contains("kl_coefficient")) {
      config.grpo.kl_coefficient = g.at("kl_coefficient").get<double>();
    }
    if (g.contains("epsilon")) config.grpo.epsilon = g.at("epsilon").get<double>();
    if (g.contains("learning_rate")) {
      config.grpo.learning_rate = g.at("learning_rate").get<double>();
    }
    if (g.contains("ppo_epochs")) config.grpo.ppo_epochs = g.at("ppo_epochs").get<int>();
    if (g.contains("temperature")) config.grpo.temperature = g.at("temperature").get<double>();
    if (g.contains("max_response_length")) {
      config.grpo.max_response_length = g.at("max_response_length").get<int>();
    }
  }
  if (doc.contains("reward_weights")) {
    const json& w = doc.at("reward_weights");
    if (w.contains("outcome")) config.reward_weights.outcome = w.at("outcome").get<double>();
    if (w.contains("format")) config.reward_weights.format = w.at("format").get<double>();
    if (w.contains("evidence")) config.reward_weights.evidence = w.at("evidence").get<double>();
    if (w.contains("consistency")) {
      config.reward_weights.consistency = w.at("consistency").get<double>();
    }
  }
  if (doc.contains("evidence_weights")) {
    const json& w = doc.at("evidence_weights");
    if (w.contains("a")) config.evidence_weights.visual = w.at("a").get<double>();
    if (w.contains("b")) config.evidence_weights.textual = w.at("b").get<double>();
    if (w.contains("c")) config.evidence_weights.bridge = w.at("c").get<double>();
    if (w.contains("d")) config.evidence_weights.all = w.at("d").get<double>();
    if (w.contains("e")) config.evidence_weights.generic = w.at("e").get<double>();
  }

  if (!doc.contains("lexicon_path") || !doc.at("lexicon_path").is_string()) {
    throw std::runtime_error(std::string(origin) + ": field 'lexicon_path' must be a string");
  }
  config.lexicon_path = resolve(doc.at("lexicon_path").get<std::string>());

  if (doc.contains("dataset_paths")) {
    const json& paths = doc.at("dataset_paths");
    if (!paths.is_object()) {
      throw std::runtime_error(std::string(origin) + ": field 'dataset_paths' must be an object");
    }
    for (const auto& [name, value] : paths.items()) {
      if (!value.is_string()) {
        throw std::runtime_error(std::string(origin) + ": dataset path '" + name +
                                 "' must be a string");
      }
      config.dataset_paths[name] = resolve(value.get<std::string>());
    }
  }

  if (doc.contains("sft_epochs")) config.sft_epochs = doc.at("sft_epochs").get<int>();
  if (doc.contains("sft_learning_rate")) {
    config.sft_learning_rate = doc.at("sft_learning_rate").get<double>();
  }
  if (doc.contains("grpo_steps")) config.grpo_steps = doc.at("grpo_steps").get<int>();
  if (doc.contains("batch_size")) config.batch_size = doc.at("batch_size").get<int>();
  if (doc.contains("output_dir")) {
    config.output_dir = resolve(doc.at("output_dir").get<std::string>());
  }
  if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
  config.grpo.seed = config.seed;

  config.grpo.validate();
  if (config.sft_epochs < 1) {
    throw std::runtime_error(std::string(origin) + ": field 'sft_epochs' must be positive");
  }
  if (config.grpo_steps < 1 || config.batch_size < 1) {
    throw std::runtime_error(std::string(origin) +
                             ": fields 'grpo_steps' and 'batch_size' must be positive");
  }

  if (check_paths) {
    if (!std::filesystem::exists(config.lexicon_path)) {
      throw std::runtime_error(std::string(origin) + ": field 'lexicon_path' references missing file " +
                               config.lexicon_path.string());
    }
    for (const auto& [name, p] : config.dataset_paths) {
      if (!std::filesystem::exists(p)) {
        throw std::runtime_error(std::string(origin) + ": dataset path '" + name +
                                 "' references missing file " + p.string());
      }
    }
  }
  return config;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::string text = read_file(path);
  std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
  return parse_train_config(text, base, /*check_paths=*/true, path.string());
}

std::string train_config_to_json(const TrainConfig& config) {
  json doc;
  doc["grpo"] = {
      {"group_size", config.grpo.group_size},
      {"kl_coefficient", config.grpo.kl_coefficient},
      {"epsilon", config.grpo.epsilon},
      {"learning_rate", config.grpo.learning_rate},
      {"ppo_epochs", config.grpo.ppo_epochs},
      {"temperature", config.grpo.temperature},
      {"max_response_length", config.grpo.max_response_length},
  };
  doc["reward_weights"] = {
      {"outcome", config.reward_weights.outcome},
      {"format", config.reward_weights.format},
      {"evidence", config.reward_weights.evidence},
      {"consistency", config.reward_weights.consistency},
  };
  doc["evidence_weights"] = {
      {"a", config.evidence_weights.visual}, {"b", config.evidence_weights.textual},
      {"c", config.evidence_weights.bridge}, {"d", config.evidence_weights.all},
      {"e", config.evidence_weights.generic},
  };
  doc["lexicon_path"] = config.lexicon_path.string();
  json paths = json::object();
  for (const auto& [name, p] : config.dataset_paths) paths[name] = p.string();
  doc["dataset_paths"] = paths;
  doc["sft_epochs"] = config.sft_epochs;
  doc["sft_learning_rate"] = config.sft_learning_rate;
  doc["grpo_steps"] = config.grpo_steps;
  doc["batch_size"] = config.batch_size;
  doc["output_dir"] = config.output_dir.string();
  doc["seed"] = config.seed;
  return doc.dump(2) + "\n";
}

std::string step_record_to_json(const TrainStepRecord& record) {
  json doc;
  doc["step"] = record.step;
  doc["mean_reward"] = record.mean_reward;
  doc["mean_kl"] = record.mean_kl;
  doc["objective"] = record.objective;
  doc["greedy_accuracy"] = record.greedy_accuracy;
  doc["greedy_mean_format"] = record.greedy_mean_format;
  return doc.dump();
}

TrainStepRecord step_record_from_json(std::string_view json_text) {
  json doc = json::parse(json_text);
  TrainStepRecord record;
  record.step = doc.at("step").get<int>();
  record.mean_reward = doc.at("mean_reward").get<double>();
  record.mean_kl = doc.at("mean_kl").get<double>();
  record.objective = doc.at("objective").get<double>();
  record.greedy_accuracy = doc.at("greedy_accuracy").get<double>();
  record.greedy_mean_format = doc.at("greedy_mean_format").get<double>();
  return record;
}

std::string reward_record_to_json(std::string_view sample_id, const RewardBreakdown& breakdown) {
  json doc;
  doc["sample_id"] = std::string(sample_id);
  doc["outcome"] = breakdown.outcome;
  doc["format"] = breakdown.format;
  doc["evidence"] = breakdown.evidence;
  doc["consistency"] = breakdown.consistency;
  doc["total"] = breakdown.total;
  return doc.dump();
}

std::vector<Sample> make_desk_corpus(int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("make_desk_corpus: need at least two samples");
  std::vector<Sample> corpus;
  corpus.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    Sample s;
    char id[32];
    std::snprintf(id, sizeof(id), "desk-%04d", i + 1);
    s.id = id;
    int cls = i % 2;
    s.feature_id = cls;
    s.label = cls;
    s.embedded_text = cls == 1 ? "unleash the storm " + std::to_string(i)
                               : "enjoy the sunshine " + std::to_string(i);
    s.dataset = DatasetId::from_string("desk");
    corpus.push_back(std::move(s));
  }
  for (int i = 0; i + 1 < std::min(n_samples, 8); i += 2) {
    corpus[static_cast<std::size_t>(i)].counterfactual_pair_id =
        corpus[static_cast<std::size_t>(i + 1)].id;
    corpus[static_cast<std::size_t>(i + 1)].counterfactual_pair_id =
        corpus[static_cast<std::size_t>(i)].id;
  }
  return corpus;
}

void atomic_write_file(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out.flush()) throw std::runtime_error("failed writing file: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::filesystem::path prepare_run_dir(const TrainConfig& config, std::string_view run_name) {
  std::filesystem::path dir = config.output_dir / run_name;
  std::filesystem::create_directories(dir);
  atomic_write_file(dir / "config.json", train_config_to_json(config));
  return dir;
}

}  // namespace muphirm
