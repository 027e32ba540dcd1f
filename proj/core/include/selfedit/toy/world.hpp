#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfedit/core/types.hpp"

namespace selfedit::toy {

/// Token alphabets. Entities are named e0.., attributes a0.., values v0...
struct ToyAlphabet {
  int entities = 16;
  int attributes = 8;
  int values = 10;

  [[nodiscard]] std::string entity(int i) const;
  [[nodiscard]] std::string attribute(int i) const;
  [[nodiscard]] std::string value(int i) const;

  friend bool operator==(const ToyAlphabet&, const ToyAlphabet&) = default;
};

struct Fact {
  int entity = 0;
  int attribute = 0;
  int value = 0;

  friend bool operator==(const Fact&, const Fact&) = default;
};

/// Rendering templates. Template 0 matches the surface form the QA probes use.
enum class ToyTemplate : int {
  kAligned = 0,     // "e a v"
  kReversed = 1,    // "v a e"
  kDistractor = 2,  // "e a v'" with v' = v + 1 mod |values|
  kSwapped = 3,     // "a e v"
};

inline constexpr int kMaxTemplates = 4;

struct ToyWorld {
  std::uint64_t seed = 0;
  ToyAlphabet alphabet;
  int num_templates = 3;
  std::vector<Fact> facts;
};

/// Throws Error(kAlphabetExhausted) when n_facts exceeds the number of
/// distinct (entity, attribute) keys and Error(kInvalidArgument) unless
/// 2 <= templates <= 4 and n_facts >= 1.
ToyWorld make_world(std::uint64_t seed, int n_facts, int templates, ToyAlphabet alphabet = {});

std::string render_fact(const ToyAlphabet& alphabet, ToyTemplate templ, const Fact& fact);
/// One rendered fact per line, joined with "\n".
std::string render_facts(const ToyAlphabet& alphabet, ToyTemplate templ, const std::vector<Fact>& facts);

/// "FACT e a v": the passage form of a fact.
std::string fact_line(const ToyAlphabet& alphabet, const Fact& fact);
QaItem fact_question(const ToyAlphabet& alphabet, const Fact& fact);

/// Reads "FACT e a v" lines out of arbitrary text; other lines are ignored.
std::vector<Fact> parse_fact_lines(const ToyAlphabet& alphabet, std::string_view text);

/// Splits the facts into consecutive groups of `facts_per_context` (a short
/// trailing group is dropped). Context ids are "ctx-<i>".
std::vector<TaskInstance> make_contexts(const ToyWorld& world, int facts_per_context);

nlohmann::json to_json(const ToyWorld& world);
ToyWorld world_from_json(const nlohmann::json& value);

}  // namespace selfedit::toy
