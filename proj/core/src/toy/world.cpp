#include "selfedit/toy/world.hpp"

#include <numeric>
#include <sstream>

#include "selfedit/core/error.hpp"
#include "selfedit/core/json.hpp"
#include "selfedit/core/random.hpp"

namespace selfedit::toy {

std::string ToyAlphabet::entity(int i) const { return "e" + std::to_string(i); }
std::string ToyAlphabet::attribute(int i) const { return "a" + std::to_string(i); }
std::string ToyAlphabet::value(int i) const { return "v" + std::to_string(i); }

ToyWorld make_world(std::uint64_t seed, int n_facts, int templates, ToyAlphabet alphabet) {
  if (n_facts < 1) throw Error(ErrorCode::kInvalidArgument, "a toy world needs at least one fact");
  if (templates < 2 || templates > kMaxTemplates)
    throw Error(ErrorCode::kInvalidArgument, "toy worlds support 2 to 4 templates");
  if (alphabet.entities < 1 || alphabet.attributes < 1 || alphabet.values < 2)
    throw Error(ErrorCode::kInvalidArgument, "toy alphabets are too small");
  const int keys = alphabet.entities * alphabet.attributes;
  if (n_facts > keys)
    throw Error(ErrorCode::kAlphabetExhausted, std::to_string(n_facts) + " facts need more than " +
                                                   std::to_string(keys) + " (entity, attribute) keys");
  Rng rng(derive_seed(seed, "toy-world"));
  std::vector<int> order(static_cast<std::size_t>(keys));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  ToyWorld world;
  world.seed = seed;
  world.alphabet = alphabet;
  world.num_templates = templates;
  for (int i = 0; i < n_facts; ++i) {
    const int key = order[static_cast<std::size_t>(i)];
    const int value = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(alphabet.values)));
    world.facts.push_back({key / alphabet.attributes, key % alphabet.attributes, value});
  }
  return world;
}

std::string render_fact(const ToyAlphabet& alphabet, ToyTemplate templ, const Fact& fact) {
  const std::string e = alphabet.entity(fact.entity);
  const std::string a = alphabet.attribute(fact.attribute);
  const std::string v = alphabet.value(fact.value);
  switch (templ) {
    case ToyTemplate::kAligned: return e + " " + a + " " + v;
    case ToyTemplate::kReversed: return v + " " + a + " " + e;
    case ToyTemplate::kDistractor: return e + " " + a + " " + alphabet.value((fact.value + 1) % alphabet.values);
    case ToyTemplate::kSwapped: return a + " " + e + " " + v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown template");
}

std::string render_facts(const ToyAlphabet& alphabet, ToyTemplate templ, const std::vector<Fact>& facts) {
  std::string out;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (i) out += '\n';
    out += render_fact(alphabet, templ, facts[i]);
  }
  return out;
}

std::string fact_line(const ToyAlphabet& alphabet, const Fact& fact) {
  return "FACT " + render_fact(alphabet, ToyTemplate::kAligned, fact);
}

QaItem fact_question(const ToyAlphabet& alphabet, const Fact& fact) {
  return {alphabet.entity(fact.entity) + " " + alphabet.attribute(fact.attribute), alphabet.value(fact.value)};
}

namespace {

int parse_index(std::string_view token, char prefix, int limit) {
  if (token.size() < 2 || token[0] != prefix) return -1;
  int v = 0;
  for (char c : token.substr(1)) {
    if (c < '0' || c > '9') return -1;
    v = v * 10 + (c - '0');
    if (v >= limit) return -1;
  }
  if (token.size() > 2 && token[1] == '0') return -1;
  return v;
}

}  // namespace

std::vector<Fact> parse_fact_lines(const ToyAlphabet& alphabet, std::string_view text) {
  std::vector<Fact> facts;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string kw, e, a, v, extra;
    if (!(words >> kw >> e >> a >> v) || kw != "FACT" || (words >> extra)) continue;
    Fact f{parse_index(e, 'e', alphabet.entities), parse_index(a, 'a', alphabet.attributes),
           parse_index(v, 'v', alphabet.values)};
    if (f.entity < 0 || f.attribute < 0 || f.value < 0) continue;
    facts.push_back(f);
  }
  return facts;
}

std::vector<TaskInstance> make_contexts(const ToyWorld& world, int facts_per_context) {
  if (facts_per_context < 1) throw Error(ErrorCode::kInvalidArgument, "facts_per_context must be positive");
  std::vector<TaskInstance> out;
  const std::size_t per = static_cast<std::size_t>(facts_per_context);
  for (std::size_t start = 0; start + per <= world.facts.size(); start += per) {
    QaSet qa;
    std::string context;
    for (std::size_t i = start; i < start + per; ++i) {
      if (i > start) context += '\n';
      context += fact_line(world.alphabet, world.facts[i]);
      qa.items.push_back(fact_question(world.alphabet, world.facts[i]));
    }
    out.push_back({"ctx-" + std::to_string(out.size()), std::move(context), EvaluationSpec(std::move(qa))});
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyDataset, "not enough facts for one context");
  return out;
}

nlohmann::json to_json(const ToyWorld& world) {
  nlohmann::json facts = nlohmann::json::array();
  for (const auto& f : world.facts) facts.push_back({f.entity, f.attribute, f.value});
  return {{"seed", world.seed},
          {"alphabet",
           {{"entities", world.alphabet.entities},
            {"attributes", world.alphabet.attributes},
            {"values", world.alphabet.values}}},
          {"templates", world.num_templates},
          {"facts", facts}};
}

ToyWorld world_from_json(const nlohmann::json& value) {
  check_object_keys(value, {"seed", "alphabet", "templates", "facts"}, "");
  ToyWorld w;
  try {
    w.seed = value.at("seed").get<std::uint64_t>();
    const auto& a = value.at("alphabet");
    check_object_keys(a, {"entities", "attributes", "values"}, "alphabet");
    w.alphabet = {a.at("entities").get<int>(), a.at("attributes").get<int>(), a.at("values").get<int>()};
    w.num_templates = value.at("templates").get<int>();
    for (const auto& f : value.at("facts")) {
      w.facts.push_back({f.at(0).get<int>(), f.at(1).get<int>(), f.at(2).get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("", std::string("malformed toy world: ") + e.what());
  }
  return w;
}

}  // namespace selfedit::toy
