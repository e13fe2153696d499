#include "lars/oracle.hpp"

#include <algorithm>
#include <set>

#include "lars/error.hpp"

namespace lars::oracle {

namespace {

bool in_interpretation(const Structure& m, Time u, const GroundAtom& a) {
  return m.background.count(a) != 0 || m.stream.contains(u, a);
}

bool atom_literal(const Structure& m, Time u, const GroundAtom& a, bool negated) {
  return in_interpretation(m, u, a) != negated;
}

GroundAtom ground_or_throw(const Atom& atom) {
  auto g = atom.to_ground();
  if (!g) throw ContractViolation("holds() needs a ground formula");
  return *g;
}

Stream windowed(const Structure& m, Time t, const WindowSpec& w) {
  if (w.kind == WindowKind::Time) return time_window(m.stream, t, w.size);
  return tuple_window(m.stream.filter(m.is_input), t, w.size);
}

}  // namespace

bool holds(const BuiltinAtom& b) {
  if (b.lhs.is_variable() || b.rhs.is_variable()) throw ContractViolation("holds() needs a ground comparison");
  return evaluate_comparison(b.op, b.lhs.value, b.rhs.value);
}

bool holds(const Structure& m, Time t, const ExtendedAtom& formula) {
  if (!m.stream.timeline().contains(t)) throw DomainError("evaluation time outside timeline");
  if (formula.naf) {
    ExtendedAtom inner = formula;
    inner.naf = false;
    return !holds(m, t, inner);
  }
  if (formula.window) {
    Stream w = windowed(m, t, *formula.window);
    Structure inner{w, m.background, m.is_input};
    ExtendedAtom rest = formula;
    rest.window.reset();
    return holds(inner, t, rest);
  }

  const GroundAtom a = ground_or_throw(formula.atom);
  const Timeline& tl = m.stream.timeline();
  switch (formula.quantifier) {
    case Quantifier::None:
      return atom_literal(m, t, a, formula.atom_negated);
    case Quantifier::Diamond:
      if (!formula.atom_negated) {
        if (m.background.count(a)) return true;
        for (const auto& [u, bucket] : m.stream.buckets()) {
          if (tl.contains(u) && bucket->members.count(a)) return true;
        }
        return false;
      }
      for (Time u = tl.start;; ++u) {
        if (atom_literal(m, u, a, true)) return true;
        if (u == tl.end) return false;
      }
    case Quantifier::Box:
      for (Time u = tl.start;; ++u) {
        if (!atom_literal(m, u, a, formula.atom_negated)) return false;
        if (u == tl.end) return true;
      }
    case Quantifier::At: {
      if (!formula.time || formula.time->is_variable()) throw ContractViolation("holds() needs a ground time");
      auto u = formula.time->value.as_time();
      if (!u || !tl.contains(*u)) return false;
      return atom_literal(m, *u, a, formula.atom_negated);
    }
  }
  return false;
}

namespace {

// Extends `sigma` so that `pattern` matches `ground`.
bool unify(const Atom& pattern, const GroundAtom& ground, Substitution& sigma) {
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

bool bind_time(const Term& term, Time u, Substitution& sigma) {
  Value v = Value::integer(static_cast<std::int64_t>(u));
  if (!term.is_variable()) return term.value == v;
  if (auto bound = sigma.lookup(term.variable)) return *bound == v;
  sigma.bind(term.variable, v);
  return true;
}

class Evaluator {
 public:
  Evaluator(const Program& program, const Background& background, Time t, const Stream& input)
      : program_(program), background_(background), t_(t), input_(input) {}

  // Extensions of sigma making the positive literal `e` hold at t in `interp`.
  std::set<Substitution> matches(const Stream& interp, const ExtendedAtom& e, const Substitution& sigma) const {
    Stream w = interp;
    if (e.window) {
      w = e.window->kind == WindowKind::Time ? time_window(interp, t_, e.window->size)
                                             : tuple_window(input_, t_, e.window->size);
    }
    const Atom pattern = apply_substitution(e.atom, sigma);
    const Timeline tl = w.timeline();
    std::set<Substitution> out;
    auto try_atom = [&](const GroundAtom& g, std::optional<Time> at) {
      if (g.predicate != pattern.predicate) return;
      Substitution s = sigma;
      if (!unify(pattern, g, s)) return;
      if (at && !bind_time(*e.time, *at, s)) return;
      out.insert(std::move(s));
    };
    auto background_of = [&](auto&& fn) {
      for (const auto& g : background_) {
        if (g.predicate == pattern.predicate) fn(g);
      }
    };

    switch (e.quantifier) {
      case Quantifier::None:
        for (const auto& entry : w.at(t_)) try_atom(entry.atom, std::nullopt);
        background_of([&](const GroundAtom& g) { try_atom(g, std::nullopt); });
        break;
      case Quantifier::Diamond:
        for (const auto& [u, bucket] : w.buckets()) {
          for (const auto& entry : bucket->entries) try_atom(entry.atom, std::nullopt);
        }
        background_of([&](const GroundAtom& g) { try_atom(g, std::nullopt); });
        break;
      case Quantifier::Box: {
        std::set<Substitution> candidates;
        std::swap(candidates, out);
        for (const auto& entry : w.at(t_)) try_atom(entry.atom, std::nullopt);
        background_of([&](const GroundAtom& g) { try_atom(g, std::nullopt); });
        std::swap(candidates, out);
        Structure inner{w, background_};
        ExtendedAtom box = e;
        box.window.reset();
        for (const auto& s : candidates) {
          if (holds(inner, t_, apply_substitution(box, s))) out.insert(s);
        }
        break;
      }
      case Quantifier::At: {
        Term time = apply_substitution(*e.time, sigma);
        if (!time.is_variable()) {
          auto u = time.value.as_time();
          if (!u || !tl.contains(*u)) break;
          for (const auto& entry : w.at(*u)) try_atom(entry.atom, std::nullopt);
          background_of([&](const GroundAtom& g) { try_atom(g, std::nullopt); });
          break;
        }
        for (const auto& [u, bucket] : w.buckets()) {
          for (const auto& entry : bucket->entries) try_atom(entry.atom, u);
        }
        background_of([&](const GroundAtom& g) {
          for (Time u = tl.start;; ++u) {
            try_atom(g, u);
            if (u == tl.end) break;
          }
        });
        break;
      }
    }
    return out;
  }

  bool check_rest(const Structure& m, const Rule& rule, const Substitution& sigma) const {
    for (const auto& element : rule.body) {
      if (const auto* b = std::get_if<BuiltinAtom>(&element)) {
        BuiltinAtom g{b->op, apply_substitution(b->lhs, sigma), apply_substitution(b->rhs, sigma)};
        if (!holds(g)) return false;
      } else {
        const auto& e = std::get<ExtendedAtom>(element);
        if (e.is_positive()) continue;
        if (!holds(m, t_, apply_substitution(e, sigma))) return false;
      }
    }
    return true;
  }

  std::vector<Substitution> ground_matching(const Stream& interp, const Rule& rule) const {
    std::vector<const ExtendedAtom*> positives;
    for (const auto& element : rule.body) {
      if (const auto* e = std::get_if<ExtendedAtom>(&element); e && e->is_positive()) positives.push_back(e);
    }
    std::set<Substitution> partial{Substitution{}};
    for (const auto* e : positives) {
      std::set<Substitution> next;
      for (const auto& s : partial) next.merge(matches(interp, *e, s));
      partial = std::move(next);
      if (partial.empty()) break;
    }
    Structure m = structure(interp);
    std::vector<Substitution> out;
    for (const auto& s : partial) {
      if (check_rest(m, rule, s)) out.push_back(s);
    }
    return out;
  }

  std::vector<Value> universe(const Stream& interp) const {
    std::set<Value> values;
    auto add_atom = [&](const GroundAtom& g) { values.insert(g.args.begin(), g.args.end()); };
    for (const auto& [u, bucket] : interp.buckets()) {
      for (const auto& entry : bucket->entries) add_atom(entry.atom);
    }
    for (const auto& g : background_) add_atom(g);
    auto add_term = [&](const Term& term) {
      if (!term.is_variable()) values.insert(term.value);
    };
    for (const auto& rule : program_.rules) {
      for (const auto& term : rule.head.atom.args) add_term(term);
      if (rule.head.time) add_term(*rule.head.time);
      for (const auto& element : rule.body) {
        if (const auto* b = std::get_if<BuiltinAtom>(&element)) {
          add_term(b->lhs);
          add_term(b->rhs);
        } else {
          const auto& e = std::get<ExtendedAtom>(element);
          for (const auto& term : e.atom.args) add_term(term);
          if (e.time) add_term(*e.time);
        }
      }
    }
    for (Time u = interp.timeline().start;; ++u) {
      values.insert(Value::integer(static_cast<std::int64_t>(u)));
      if (u == interp.timeline().end) break;
    }
    return {values.begin(), values.end()};
  }

  // Every assignment over the universe whose instance of the body holds.
  // Positive literals are checked as soon as their variables are bound.
  std::vector<Substitution> ground_universe(const Stream& interp, const Rule& rule) const {
    const auto domain = universe(interp);
    Structure m = structure(interp);

    std::vector<Symbol> order;
    std::vector<std::vector<const ExtendedAtom*>> checks;  // positives completed after binding order[i]
    std::vector<const ExtendedAtom*> ready;                // ground positives
    auto index_of = [&](Symbol v) {
      auto it = std::find(order.begin(), order.end(), v);
      if (it == order.end()) {
        order.push_back(v);
        checks.emplace_back();
        return order.size() - 1;
      }
      return static_cast<std::size_t>(it - order.begin());
    };
    for (const auto& element : rule.body) {
      const auto* e = std::get_if<ExtendedAtom>(&element);
      if (!e || !e->is_positive()) continue;
      std::vector<Symbol> vars;
      collect_variables(*e, vars);
      if (vars.empty()) {
        ready.push_back(e);
        continue;
      }
      std::size_t last = 0;
      for (auto v : vars) last = std::max(last, index_of(v));
      checks[last].push_back(e);
    }
    // Remaining variables (bound only through safety-irrelevant places) still range over the universe.
    std::vector<Symbol> extra;
    for (const auto& element : rule.body) {
      if (const auto* b = std::get_if<BuiltinAtom>(&element)) {
        collect_variables(*b, extra);
      } else {
        collect_variables(std::get<ExtendedAtom>(element), extra);
      }
    }
    collect_variables(rule.head.atom, extra);
    if (rule.head.time && rule.head.time->is_variable()) extra.push_back(rule.head.time->variable);
    for (auto v : extra) index_of(v);

    for (const auto* e : ready) {
      if (!holds(m, t_, *e)) return {};
    }

    std::vector<Substitution> out;
    Substitution sigma;
    auto recurse = [&](auto&& self, std::size_t i) -> void {
      if (i == order.size()) {
        if (check_rest(m, rule, sigma)) out.push_back(sigma);
        return;
      }
      for (const auto& v : domain) {
        sigma.bind(order[i], v);
        bool ok = std::all_of(checks[i].begin(), checks[i].end(),
                              [&](const ExtendedAtom* e) { return holds(m, t_, apply_substitution(*e, sigma)); });
        if (ok) self(self, i + 1);
      }
      Substitution reduced;
      for (const auto& [k, val] : sigma.bindings()) {
        if (k != order[i]) reduced.bind(k, val);
      }
      sigma = std::move(reduced);
    };
    recurse(recurse, 0);
    return out;
  }

  Structure structure(const Stream& interp) const {
    return Structure{interp, background_, [this](PredicateId p) { return !program_.is_intensional(p); }};
  }

 private:
  const Program& program_;
  const Background& background_;
  Time t_;
  const Stream& input_;
};

// Places the head of a fired rule; returns false if it was already there.
bool derive(const Rule& rule, const Substitution& sigma, Stream& interp, const Background& background, Time t) {
  auto head = apply_substitution(rule.head.atom, sigma).to_ground();
  if (!head) throw ContractViolation("unsafe rule produced a non-ground head");
  Time at = t;
  if (rule.head.time) {
    Term time = apply_substitution(*rule.head.time, sigma);
    auto u = time.is_variable() ? std::nullopt : time.value.as_time();
    // Time points outside the current timeline are not (yet) part of the stream.
    if (!u || !interp.timeline().contains(*u)) return false;
    at = *u;
  }
  // Background atoms hold everywhere already; adding them would break minimality.
  if (background.count(*head)) return false;
  return interp.add(at, std::move(*head), 0);
}

void require_data_stream(const Program& program, const Stream& data) {
  for (const auto& [u, bucket] : data.buckets()) {
    for (const auto& entry : bucket->entries) {
      if (program.is_intensional(entry.atom.predicate)) {
        throw ContractViolation("derived predicate '" +
                                program.vocabulary->predicate_info(entry.atom.predicate).name +
                                "' on the input stream");
      }
    }
  }
}

Stream answer_stream_unchecked(const Program& program, const Stream& data, const Background& background, Time t,
                               const Options& options) {
  if (!data.timeline().contains(t)) throw DomainError("evaluation time outside the data timeline");
  const Stream prefix = data.restrict(Timeline(data.timeline().start, t));
  Stream interp = prefix;
  Evaluator evaluator(program, background, t, prefix);

  for (const auto& stratum : program.strata) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto index : stratum) {
        const Rule& rule = program.rules[index];
        auto groundings = options.grounding == Grounding::Matching ? evaluator.ground_matching(interp, rule)
                                                                   : evaluator.ground_universe(interp, rule);
        for (const auto& sigma : groundings) changed |= derive(rule, sigma, interp, background, t);
      }
    }
  }
  return interp;
}

std::vector<GroundAtom> output_unchecked(const Program& program, const Stream& data, const Background& background,
                                         Time t, const Options& options) {
  Stream answer = answer_stream_unchecked(program, data, background, t, options);
  std::vector<GroundAtom> out;
  for (const auto& entry : answer.at(t)) {
    if (program.is_intensional(entry.atom.predicate)) out.push_back(entry.atom);
  }
  for (const auto& g : background) {
    if (program.is_intensional(g.predicate)) out.push_back(g);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Stream answer_stream(const Program& program, const Stream& data, const Background& background, Time t,
                     const Options& options) {
  require_data_stream(program, data);
  return answer_stream_unchecked(program, data, background, t, options);
}

std::vector<GroundAtom> output(const Program& program, const Stream& data, const Background& background, Time t,
                               const Options& options) {
  require_data_stream(program, data);
  return output_unchecked(program, data, background, t, options);
}

Stream output_stream_naive(const Program& program, const Stream& data, const Background& background,
                           const Options& options) {
  require_data_stream(program, data);
  Stream out(data.timeline());
  for (Time t = data.timeline().start;; ++t) {
    for (auto& atom : output_unchecked(program, data, background, t, options)) out.add(t, std::move(atom), 0);
    if (t == data.timeline().end) break;
  }
  return out;
}

bool is_model_of_reduct(const Program& program, const Stream& reference, const Stream& candidate,
                        const Background& background, Time t) {
  const Stream input = reference.filter([&](PredicateId p) { return !program.is_intensional(p); });
  Evaluator eval(program, background, t, input);
  for (const auto& rule : program.rules) {
    for (const auto& sigma : eval.ground_universe(reference, rule)) {
      auto head = apply_substitution(rule.head.atom, sigma).to_ground();
      if (!head) return false;
      Time at = t;
      if (rule.head.time) {
        Term time = apply_substitution(*rule.head.time, sigma);
        auto u = time.is_variable() ? std::nullopt : time.value.as_time();
        // Future-dated heads are deferred, so they are not checked here.
        if (!u || !candidate.timeline().contains(*u)) continue;
        at = *u;
      }
      if (!background.count(*head) && !candidate.contains(at, *head)) return false;
    }
  }
  return true;
}

}  // namespace lars::oracle
