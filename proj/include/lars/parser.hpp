#pragma once

// Concrete syntax for programs (`.lars`), streams (`.stream`) and
// background facts.
//
// Program:
//   % comment
//   q(X,Y,Z) :- [3 t] <> a(X,Y), [3 #] <> b(Y,Z).
//   @[T] steam(V) :- [n t] @[T] temp(V), V >= 100.
//   freeze :- not alarm, not normal.
//
// Stream:
//   @timeline 35 42
//   36 a(x1,y)
//   38 a(x2,y) b(y,z)

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lars/model.hpp"
#include "lars/program.hpp"

namespace lars {

struct ParseOptions {
  // Named integer constants usable as window sizes and @-time points.
  std::map<std::string, std::int64_t, std::less<>> constants;
};

Program parse_program(std::string_view text, const ParseOptions& options = {},
                      std::shared_ptr<Vocabulary> vocabulary = nullptr);

// Pushes `not` in front of window atoms down to the atom:
//   not [w] <> a   ->  [w] [] not a
//   not [w] [] a   ->  [w] <> not a
//   not [w] @[T] a ->  [w] @[T] not a   (exact only while T is in the timeline)
Rule rewrite_negation(const Rule& rule);

// Orders intensional predicates into strata (edges head -> body predicate,
// negative through negated atoms). Fills predicate_stratum, strata and each
// rule's stratum. Throws ValidationError on a cycle through negation.
void stratify(Program& program);

// Safety: head variables, variables under negation and in builtins must be
// bound by a positive extended atom; head time variables by a body @.
void check_safety(const Rule& rule, const Vocabulary& vocab);

Stream parse_stream(std::string_view text, Vocabulary& vocab);
std::vector<GroundAtom> parse_background(std::string_view text, Vocabulary& vocab);
GroundAtom parse_ground_atom(std::string_view text, Vocabulary& vocab);

// Predicates of the stream that also occur as rule heads.
std::vector<PredicateId> derived_predicates_in(const Program& program, const Stream& stream);

}  // namespace lars
