#pragma once

// Abstract syntax of plain LARS programs with stratified negation.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lars/model.hpp"

namespace lars {

enum class Quantifier : std::uint8_t { None, Diamond, Box, At };

// One of `a`, `@_t a`, `⊞^w ◇ a`, `⊞^w □ a`, `⊞^w @_t a`.
//
// `naf` is a `not` in front of the whole extended atom as written; after
// negation pushing it is always false and negation only sits on the atom
// (`atom_negated`).
struct ExtendedAtom {
  std::optional<WindowSpec> window;
  Quantifier quantifier = Quantifier::None;
  std::optional<Term> time;  // only for Quantifier::At
  Atom atom;
  bool atom_negated = false;
  bool naf = false;

  bool is_positive() const { return !naf && !atom_negated; }

  friend bool operator==(const ExtendedAtom&, const ExtendedAtom&) = default;
};

enum class Comparison : std::uint8_t { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

struct BuiltinAtom {
  Comparison op = Comparison::Equal;
  Term lhs;
  Term rhs;

  friend bool operator==(const BuiltinAtom&, const BuiltinAtom&) = default;
};

using BodyElement = std::variant<ExtendedAtom, BuiltinAtom>;

struct Head {
  Atom atom;
  std::optional<Term> time;  // `@[T] a` heads

  friend bool operator==(const Head&, const Head&) = default;
};

struct SourceLocation {
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Rule {
  Head head;
  std::vector<BodyElement> body;
  std::size_t stratum = 0;
  SourceLocation location;

  // Structural equality ignores location and stratum.
  friend bool operator==(const Rule& a, const Rule& b) { return a.head == b.head && a.body == b.body; }
};

struct Program {
  std::shared_ptr<Vocabulary> vocabulary;
  std::vector<Rule> rules;
  // Indexed by PredicateId; predicates never used as a head are extensional.
  std::vector<bool> intensional;
  // Stratum of each intensional predicate (0 for extensional ones).
  std::vector<std::size_t> predicate_stratum;
  // Rule indices per stratum, bottom-up.
  std::vector<std::vector<std::size_t>> strata;

  bool is_intensional(PredicateId p) const { return p < intensional.size() && intensional[p]; }
  std::uint64_t max_time_window() const;
  std::uint64_t max_tuple_window() const;
  bool has_bare_at_in_body() const;
};

bool evaluate_comparison(Comparison op, const Value& lhs, const Value& rhs);

const char* to_string(Comparison op);
std::string to_string(const ExtendedAtom& e, const Vocabulary& vocab);
std::string to_string(const BuiltinAtom& b, const Vocabulary& vocab);
std::string to_string(const Rule& r, const Vocabulary& vocab);
std::string to_string(const Program& p);

ExtendedAtom apply_substitution(const ExtendedAtom& e, const Substitution& sigma);

// Variables occurring in a term list / extended atom / builtin (in order of occurrence).
void collect_variables(const Atom& atom, std::vector<Symbol>& out);
void collect_variables(const ExtendedAtom& e, std::vector<Symbol>& out);
void collect_variables(const BuiltinAtom& b, std::vector<Symbol>& out);

}  // namespace lars
