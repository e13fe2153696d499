#pragma once

#include "lars/model.hpp"

namespace lars::engine::detail {

// Extends `sigma` so that `pattern` matches `ground`.
inline bool unify(const Atom& pattern, const GroundAtom& ground, Substitution& sigma) {
  if (pattern.predicate != ground.predicate || pattern.args.size() != ground.args.size()) return false;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const Term& term = pattern.args[i];
    if (!term.is_variable()) {
      if (term.value != ground.args[i]) return false;
    } else if (auto bound = sigma.lookup(term.variable)) {
      if (*bound != ground.args[i]) return false;
    } else {
      sigma.bind(term.variable, ground.args[i]);
    }
  }
  return true;
}

inline bool bind_time(const Term& term, Time u, Substitution& sigma) {
  Value v = Value::integer(static_cast<std::int64_t>(u));
  if (!term.is_variable()) return term.value == v;
  if (auto bound = sigma.lookup(term.variable)) return *bound == v;
  sigma.bind(term.variable, v);
  return true;
}

}  // namespace lars::engine::detail
