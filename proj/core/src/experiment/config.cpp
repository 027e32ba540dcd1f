#include "selfedit/experiment/config.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "selfedit/core/error.hpp"
#include "selfedit/core/json.hpp"
#include "selfedit/knowledge/knowledge.hpp"
#include "selfedit/toy/backend.hpp"

namespace selfedit::experiment {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Domain domain) noexcept {
  switch (domain) {
    case Domain::kKnowledge: return "knowledge";
    case Domain::kFewshot: return "fewshot";
    case Domain::kToy: return "toy";
    case Domain::kContinual: return "continual";
  }
  return "toy";
}

std::string_view to_string(BackendKind backend) noexcept {
  return backend == BackendKind::kToy ? "toy" : "remote";
}

namespace {

Domain domain_from_string(std::string_view s, const std::string& path) {
  for (Domain d : {Domain::kKnowledge, Domain::kFewshot, Domain::kToy, Domain::kContinual}) {
    if (to_string(d) == s) return d;
  }
  throw SchemaError(path, "unknown domain '" + std::string(s) + "'");
}

BackendKind backend_from_string(std::string_view s, const std::string& path) {
  if (s == "toy") return BackendKind::kToy;
  if (s == "remote") return BackendKind::kRemote;
  throw SchemaError(path, "unknown backend '" + std::string(s) + "'");
}

FinetuneConfig fewshot_m_step_config() {
  FinetuneConfig c;
  c.rank = 16;
  c.scale = 16.0;
  c.learning_rate = 5e-5;
  c.epochs = 8;
  c.batch_size = 5;
  return c;
}

// Typed readers: missing keys leave `out` untouched.
const json* find(const json& obj, std::string_view key) {
  auto it = obj.find(std::string(key));
  return it == obj.end() ? nullptr : &*it;
}

void read(const json& obj, std::string_view key, const std::string& path, int& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_number_integer()) throw SchemaError(join_path(path, key), "expected an integer");
    out = v->get<int>();
  }
}

void read(const json& obj, std::string_view key, const std::string& path, std::uint64_t& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<long long>() < 0))
      throw SchemaError(join_path(path, key), "expected a non-negative integer");
    out = v->get<std::uint64_t>();
  }
}

void read(const json& obj, std::string_view key, const std::string& path, double& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_number()) throw SchemaError(join_path(path, key), "expected a number");
    out = v->get<double>();
  }
}

void read(const json& obj, std::string_view key, const std::string& path, bool& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_boolean()) throw SchemaError(join_path(path, key), "expected true or false");
    out = v->get<bool>();
  }
}

void read(const json& obj, std::string_view key, const std::string& path, std::string& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_string()) throw SchemaError(join_path(path, key), "expected a string");
    out = v->get<std::string>();
  }
}

template <typename Parse>
void read_enum(const json& obj, std::string_view key, const std::string& path, Parse parse) {
  if (const json* v = find(obj, key)) {
    if (!v->is_string()) throw SchemaError(join_path(path, key), "expected a string");
    try {
      parse(v->get<std::string>());
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      throw SchemaError(join_path(path, key), e.what());
    }
  }
}

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw SchemaError(path, "expected an object");
}

void read_sampling(const json& v, const std::string& path, SamplingParams& s) {
  require_object(v, path);
  check_object_keys(v, {"temperature", "max_tokens"}, path);
  read(v, "temperature", path, s.temperature);
  read(v, "max_tokens", path, s.max_tokens);
}

void read_loop(const json& v, const std::string& path, restem::LoopConfig& loop) {
  require_object(v, path);
  check_object_keys(v,
                    {"contexts_per_round", "samples_per_context", "seeds_per_sample", "reward_mode", "rounds",
                     "workers", "sampling", "inner", "m_step"},
                    path);
  read(v, "contexts_per_round", path, loop.contexts_per_round);
  read(v, "samples_per_context", path, loop.samples_per_context);
  read(v, "seeds_per_sample", path, loop.seeds_per_sample);
  read(v, "rounds", path, loop.rounds);
  read(v, "workers", path, loop.workers);
  read_enum(v, "reward_mode", path, [&](const std::string& s) { loop.reward_mode = reward_mode_from_string(s); });
  if (const json* s = find(v, "sampling")) read_sampling(*s, join_path(path, "sampling"), loop.sampling);
  if (const json* f = find(v, "inner")) loop.inner = finetune_config_from_json(*f, loop.inner, join_path(path, "inner"));
  if (const json* f = find(v, "m_step"))
    loop.m_step = finetune_config_from_json(*f, loop.m_step, join_path(path, "m_step"));
  try {
    loop.validate();
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
}

void read_ttt(const json& v, const std::string& path, fewshot::TttOptions& t) {
  require_object(v, path);
  check_object_keys(v, {"rank", "scale", "batch_size", "step_budget", "target_layers", "max_decode_tokens"}, path);
  read(v, "rank", path, t.rank);
  read(v, "scale", path, t.scale);
  read(v, "batch_size", path, t.batch_size);
  read(v, "step_budget", path, t.step_budget);
  read(v, "max_decode_tokens", path, t.max_decode_tokens);
  if (const json* layers = find(v, "target_layers")) {
    if (!layers->is_array()) throw SchemaError(join_path(path, "target_layers"), "expected an array of strings");
    t.target_layers.clear();
    for (const auto& l : *layers) {
      if (!l.is_string()) throw SchemaError(join_path(path, "target_layers"), "expected an array of strings");
      t.target_layers.push_back(l.get<std::string>());
    }
  }
}

void check_path_exists(const std::string& p, const std::string& key) {
  if (!p.empty() && !std::filesystem::exists(p)) throw SchemaError(key, "path does not exist: " + p);
}

}  // namespace

RunConfig default_config(Domain domain, BackendKind backend) {
  RunConfig c;
  c.domain = domain;
  c.backend = backend;
  const bool toy_backend = backend == BackendKind::kToy;
  c.loop.sampling = SamplingParams{1.0, 1024, 0};
  c.loop.inner = toy_backend ? toy::toy_inner_config() : knowledge::default_single_passage_config();
  c.loop.m_step = toy_backend ? toy::toy_m_step_config() : knowledge::default_m_step_config();
  c.continual.finetune = c.loop.inner;
  switch (domain) {
    case Domain::kToy:
      c.loop.contexts_per_round = 10;
      c.loop.samples_per_context = 5;
      c.loop.seeds_per_sample = 1;
      c.loop.reward_mode = RewardMode::kThreshold;
      c.loop.rounds = 2;
      break;
    case Domain::kKnowledge:
      c.loop.contexts_per_round = 50;
      c.loop.samples_per_context = 5;
      c.loop.seeds_per_sample = 3;
      c.loop.reward_mode = RewardMode::kArgmax;
      c.loop.rounds = 2;
      break;
    case Domain::kFewshot:
      c.loop.contexts_per_round = c.fewshot.synthetic_train_tasks;
      c.loop.samples_per_context = 15;
      c.loop.seeds_per_sample = 1;
      c.loop.reward_mode = RewardMode::kThreshold;
      c.loop.rounds = 1;
      if (!toy_backend) c.loop.m_step = fewshot_m_step_config();
      break;
    case Domain::kContinual:
      c.loop.contexts_per_round = 1;
      c.loop.samples_per_context = 1;
      c.loop.seeds_per_sample = 1;
      c.loop.rounds = 1;
      break;
  }
  return c;
}

RunConfig config_from_json(const json& value) {
  require_object(value, "");
  check_object_keys(value,
                    {"domain", "backend", "endpoint", "grader_endpoint", "seed", "output_dir", "loop", "dataset",
                     "toy", "knowledge", "fewshot", "continual"},
                    "");
  Domain domain = Domain::kToy;
  BackendKind backend = BackendKind::kToy;
  read_enum(value, "domain", "", [&](const std::string& s) { domain = domain_from_string(s, "domain"); });
  read_enum(value, "backend", "", [&](const std::string& s) { backend = backend_from_string(s, "backend"); });
  RunConfig c = default_config(domain, backend);

  read(value, "seed", "", c.seed);
  read(value, "output_dir", "", c.output_dir);
  if (const json* e = find(value, "endpoint")) c.endpoint = remote::endpoint_config_from_json(*e, "endpoint");
  if (const json* e = find(value, "grader_endpoint"))
    c.grader_endpoint = remote::endpoint_config_from_json(*e, "grader_endpoint");
  if (c.backend == BackendKind::kRemote && !c.endpoint)
    throw SchemaError("endpoint", "required when backend is remote");
  for (const auto* e : {&c.endpoint, &c.grader_endpoint}) {
    if (!*e) continue;
    try {
      (*e)->validate();
    } catch (const Error& err) {
      throw SchemaError(e == &c.endpoint ? "endpoint" : "grader_endpoint", err.what());
    }
  }

  if (const json* t = find(value, "toy")) {
    const std::string p = "toy";
    require_object(*t, p);
    check_object_keys(*t,
                      {"facts", "facts_per_context", "templates", "entities", "attributes", "values", "init_scale",
                       "world_seed"},
                      p);
    read(*t, "facts", p, c.toy.facts);
    read(*t, "facts_per_context", p, c.toy.facts_per_context);
    read(*t, "templates", p, c.toy.templates);
    read(*t, "entities", p, c.toy.alphabet.entities);
    read(*t, "attributes", p, c.toy.alphabet.attributes);
    read(*t, "values", p, c.toy.alphabet.values);
    read(*t, "init_scale", p, c.toy.init_scale);
    if (find(*t, "world_seed")) {
      std::uint64_t ws = 0;
      read(*t, "world_seed", p, ws);
      c.toy.world_seed = ws;
    }
  }

  if (const json* d = find(value, "dataset")) {
    const std::string p = "dataset";
    require_object(*d, p);
    check_object_keys(*d, {"path", "format", "max_items"}, p);
    read(*d, "path", p, c.dataset.path);
    read(*d, "format", p, c.dataset.format);
    read(*d, "max_items", p, c.dataset.max_items);
    if (!c.dataset.format.empty() && c.dataset.format != "knowledge-json" && c.dataset.format != "squad" &&
        c.dataset.format != "arc-dir")
      throw SchemaError("dataset.format", "expected knowledge-json, squad or arc-dir");
    check_path_exists(c.dataset.path, "dataset.path");
  }

  if (const json* k = find(value, "knowledge")) {
    const std::string p = "knowledge";
    require_object(*k, p);
    check_object_keys(*k, {"prompt_variant", "source", "include_passage"}, p);
    read_enum(*k, "prompt_variant", p,
              [&](const std::string& s) { c.knowledge.variant = knowledge::prompt_variant_from_string(s); });
    read_enum(*k, "source", p,
              [&](const std::string& s) { c.knowledge.source = knowledge::self_edit_source_from_string(s); });
    read(*k, "include_passage", p, c.knowledge.include_passage);
  }

  if (const json* f = find(value, "fewshot")) {
    const std::string p = "fewshot";
    require_object(*f, p);
    check_object_keys(*f,
                      {"eval_samples", "eval_path", "synthetic_train_tasks", "synthetic_eval_tasks",
                       "synthetic_train_pairs", "synthetic_grid_size", "ttt"},
                      p);
    read(*f, "eval_samples", p, c.fewshot.eval_samples);
    read(*f, "eval_path", p, c.fewshot.eval_path);
    const int before = c.fewshot.synthetic_train_tasks;
    read(*f, "synthetic_train_tasks", p, c.fewshot.synthetic_train_tasks);
    read(*f, "synthetic_eval_tasks", p, c.fewshot.synthetic_eval_tasks);
    read(*f, "synthetic_train_pairs", p, c.fewshot.synthetic_train_pairs);
    read(*f, "synthetic_grid_size", p, c.fewshot.synthetic_grid_size);
    if (const json* t = find(*f, "ttt")) read_ttt(*t, join_path(p, "ttt"), c.fewshot.ttt);
    check_path_exists(c.fewshot.eval_path, "fewshot.eval_path");
    if (c.domain == Domain::kFewshot && c.loop.contexts_per_round == before)
      c.loop.contexts_per_round = c.fewshot.synthetic_train_tasks;
    if (c.fewshot.eval_samples < 1) throw SchemaError("fewshot.eval_samples", "must be >= 1");
  }

  if (const json* cont = find(value, "continual")) {
    const std::string p = "continual";
    require_object(*cont, p);
    check_object_keys(*cont, {"runs", "tasks", "finetune"}, p);
    read(*cont, "runs", p, c.continual.runs);
    read(*cont, "tasks", p, c.continual.tasks);
    if (const json* f = find(*cont, "finetune"))
      c.continual.finetune = finetune_config_from_json(*f, c.continual.finetune, join_path(p, "finetune"));
    if (c.continual.runs < 1) throw SchemaError("continual.runs", "must be >= 1");
    if (c.continual.tasks < 1) throw SchemaError("continual.tasks", "must be >= 1");
  }

  if (const json* l = find(value, "loop")) read_loop(*l, "loop", c.loop);
  return c;
}

json to_json(const RunConfig& c) {
  ordered_json out;
  out["domain"] = std::string(to_string(c.domain));
  out["backend"] = std::string(to_string(c.backend));
  if (c.endpoint) out["endpoint"] = remote::to_json(*c.endpoint);
  if (c.grader_endpoint) out["grader_endpoint"] = remote::to_json(*c.grader_endpoint);
  out["seed"] = c.seed;
  out["output_dir"] = c.output_dir;
  ordered_json loop;
  loop["contexts_per_round"] = c.loop.contexts_per_round;
  loop["samples_per_context"] = c.loop.samples_per_context;
  loop["seeds_per_sample"] = c.loop.seeds_per_sample;
  loop["reward_mode"] = std::string(to_string(c.loop.reward_mode));
  loop["rounds"] = c.loop.rounds;
  loop["workers"] = c.loop.workers;
  loop["sampling"] = {{"temperature", c.loop.sampling.temperature}, {"max_tokens", c.loop.sampling.max_tokens}};
  loop["inner"] = selfedit::to_json(c.loop.inner);
  loop["m_step"] = selfedit::to_json(c.loop.m_step);
  out["loop"] = loop;
  out["dataset"] = {{"path", c.dataset.path}, {"format", c.dataset.format}, {"max_items", c.dataset.max_items}};
  ordered_json toy;
  toy["facts"] = c.toy.facts;
  toy["facts_per_context"] = c.toy.facts_per_context;
  toy["templates"] = c.toy.templates;
  toy["entities"] = c.toy.alphabet.entities;
  toy["attributes"] = c.toy.alphabet.attributes;
  toy["values"] = c.toy.alphabet.values;
  toy["init_scale"] = c.toy.init_scale;
  if (c.toy.world_seed) toy["world_seed"] = *c.toy.world_seed;
  out["toy"] = toy;
  out["knowledge"] = {{"prompt_variant", std::string(knowledge::to_string(c.knowledge.variant))},
                      {"source", std::string(knowledge::to_string(c.knowledge.source))},
                      {"include_passage", c.knowledge.include_passage}};
  ordered_json fs;
  fs["eval_samples"] = c.fewshot.eval_samples;
  fs["eval_path"] = c.fewshot.eval_path;
  fs["synthetic_train_tasks"] = c.fewshot.synthetic_train_tasks;
  fs["synthetic_eval_tasks"] = c.fewshot.synthetic_eval_tasks;
  fs["synthetic_train_pairs"] = c.fewshot.synthetic_train_pairs;
  fs["synthetic_grid_size"] = c.fewshot.synthetic_grid_size;
  fs["ttt"] = {{"rank", c.fewshot.ttt.rank},
               {"scale", c.fewshot.ttt.scale},
               {"batch_size", c.fewshot.ttt.batch_size},
               {"step_budget", c.fewshot.ttt.step_budget},
               {"target_layers", c.fewshot.ttt.target_layers},
               {"max_decode_tokens", c.fewshot.ttt.max_decode_tokens}};
  out["fewshot"] = fs;
  out["continual"] = {{"runs", c.continual.runs},
                      {"tasks", c.continual.tasks},
                      {"finetune", selfedit::to_json(c.continual.finetune)}};
  return json(out);
}

namespace {

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      static const std::regex integer(R"([-+]?[0-9]+)");
      static const std::regex number(R"([-+]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][-+]?[0-9]+)?)");
      if (s == "true" || s == "True") return true;
      if (s == "false" || s == "False") return false;
      if (s == "null" || s == "~") return nullptr;
      if (std::regex_match(s, integer)) {
        if (s[0] == '-') return std::stoll(s);
        return std::stoull(s);
      }
      if (std::regex_match(s, number)) return std::stod(s);
      return s;
    }
  }
  return nullptr;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

json parse_config_text(std::string_view text, bool yaml) {
  if (yaml) {
    try {
      return yaml_to_json(YAML::Load(std::string(text)));
    } catch (const YAML::Exception& e) {
      throw Error(ErrorCode::kConfigError, "YAML syntax error at line " + std::to_string(e.mark.line + 1) +
                                               ", column " + std::to_string(e.mark.column + 1) + ": " + e.msg);
    }
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::kConfigError, "JSON syntax error at line " + std::to_string(line) + ", column " +
                                             std::to_string(col) + ": " + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string ext = path.extension().string();
  return config_from_json(parse_config_text(buf.str(), ext == ".yaml" || ext == ".yml"));
}

}  // namespace selfedit::experiment
