#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <string>
#include <variant>

#include "lars/model.hpp"
#include "lars/parser.hpp"
#include "lars/program.hpp"

namespace lars::test {

inline Stream fig1_stream(Vocabulary& vocab) {
  return parse_stream("@timeline 35 42\n36 a(x1,y)\n38 a(x2,y) b(y,z)\n40 a(x3,y)\n", vocab);
}

inline GroundAtom atom(const std::string& text, Vocabulary& vocab) { return parse_ground_atom(text, vocab); }

// The first body literal of `h :- <literal>.`
inline ExtendedAtom literal(const std::string& text, std::shared_ptr<Vocabulary> vocab) {
  Program p = parse_program("h :- " + text + ".", {}, std::move(vocab));
  return std::get<ExtendedAtom>(p.rules.front().body.front());
}

inline std::vector<std::string> names(const std::vector<GroundAtom>& atoms, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (const auto& a : atoms) out.push_back(to_string(a, vocab));
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> names_at(const Stream& s, Time t, const Vocabulary& vocab) {
  std::vector<GroundAtom> atoms;
  for (const auto& e : s.at(t)) atoms.push_back(e.atom);
  return names(atoms, vocab);
}

// Random stream over p/1 and r/1 with constants 0..3.
inline Stream random_stream(Vocabulary& vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<Time> start(0, 5), len(1, 12), coin(0, 3);
  const Time t1 = start(rng);
  const Time t2 = t1 + len(rng) - 1;
  Stream s(Timeline(t1, t2));
  const PredicateId p = vocab.predicate("p", 1), r = vocab.predicate("r", 1);
  std::uniform_int_distribution<Time> at(t1, t2);
  std::vector<std::pair<Time, GroundAtom>> items;
  for (int i = 0, n = static_cast<int>(coin(rng) * 4); i < n; ++i) {
    items.push_back({at(rng), GroundAtom{coin(rng) % 2 ? p : r, {Value::integer(static_cast<std::int64_t>(coin(rng)))}}});
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [t, a] : items) s.add(t, a);
  return s;
}

}  // namespace lars::test
