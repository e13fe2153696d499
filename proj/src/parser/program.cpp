#include "lars/program.hpp"

#include <algorithm>

#include "lars/error.hpp"

namespace lars {

bool evaluate_comparison(Comparison op, const Value& lhs, const Value& rhs) {
  if (!lhs.is_integer() || !rhs.is_integer()) {
    throw ContractViolation(std::string("comparison '") + to_string(op) + "' applied to a symbolic constant");
  }
  const auto a = lhs.as_integer();
  const auto b = rhs.as_integer();
  switch (op) {
    case Comparison::Less: return a < b;
    case Comparison::LessEqual: return a <= b;
    case Comparison::Greater: return a > b;
    case Comparison::GreaterEqual: return a >= b;
    case Comparison::Equal: return a == b;
    case Comparison::NotEqual: return a != b;
  }
  return false;
}

const char* to_string(Comparison op) {
  switch (op) {
    case Comparison::Less: return "<";
    case Comparison::LessEqual: return "<=";
    case Comparison::Greater: return ">";
    case Comparison::GreaterEqual: return ">=";
    case Comparison::Equal: return "=";
    case Comparison::NotEqual: return "!=";
  }
  return "?";
}

std::string to_string(const ExtendedAtom& e, const Vocabulary& vocab) {
  std::string out;
  if (e.naf) out += "not ";
  if (e.window) {
    out += '[' + std::to_string(e.window->size) + (e.window->kind == WindowKind::Time ? " t] " : " #] ");
  }
  switch (e.quantifier) {
    case Quantifier::None: break;
    case Quantifier::Diamond: out += "<> "; break;
    case Quantifier::Box: out += "[] "; break;
    case Quantifier::At: out += "@[" + to_string(*e.time, vocab) + "] "; break;
  }
  if (e.atom_negated) out += "not ";
  out += to_string(e.atom, vocab);
  return out;
}

std::string to_string(const BuiltinAtom& b, const Vocabulary& vocab) {
  return to_string(b.lhs, vocab) + ' ' + to_string(b.op) + ' ' + to_string(b.rhs, vocab);
}

std::string to_string(const Rule& r, const Vocabulary& vocab) {
  std::string out;
  if (r.head.time) out += "@[" + to_string(*r.head.time, vocab) + "] ";
  out += to_string(r.head.atom, vocab);
  if (!r.body.empty()) {
    out += " :- ";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      if (i) out += ", ";
      std::visit([&](const auto& el) { out += to_string(el, vocab); }, r.body[i]);
    }
  }
  out += '.';
  return out;
}

std::string to_string(const Program& p) {
  std::string out;
  for (const auto& r : p.rules) out += to_string(r, *p.vocabulary) + '\n';
  return out;
}

ExtendedAtom apply_substitution(const ExtendedAtom& e, const Substitution& sigma) {
  ExtendedAtom out = e;
  out.atom = apply_substitution(e.atom, sigma);
  if (e.time) out.time = apply_substitution(*e.time, sigma);
  return out;
}

namespace {

void push_unique(std::vector<Symbol>& out, Symbol s) {
  if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
}

}  // namespace

void collect_variables(const Atom& atom, std::vector<Symbol>& out) {
  for (const auto& t : atom.args) {
    if (t.is_variable()) push_unique(out, t.variable);
  }
}

void collect_variables(const ExtendedAtom& e, std::vector<Symbol>& out) {
  collect_variables(e.atom, out);
  if (e.time && e.time->is_variable()) push_unique(out, e.time->variable);
}

void collect_variables(const BuiltinAtom& b, std::vector<Symbol>& out) {
  if (b.lhs.is_variable()) push_unique(out, b.lhs.variable);
  if (b.rhs.is_variable()) push_unique(out, b.rhs.variable);
}

std::uint64_t Program::max_time_window() const {
  std::uint64_t n = 0;
  for (const auto& r : rules) {
    for (const auto& el : r.body) {
      if (const auto* e = std::get_if<ExtendedAtom>(&el); e && e->window && e->window->kind == WindowKind::Time) {
        n = std::max(n, e->window->size);
      }
    }
  }
  return n;
}

std::uint64_t Program::max_tuple_window() const {
  std::uint64_t n = 0;
  for (const auto& r : rules) {
    for (const auto& el : r.body) {
      if (const auto* e = std::get_if<ExtendedAtom>(&el); e && e->window && e->window->kind == WindowKind::Tuple) {
        n = std::max(n, e->window->size);
      }
    }
  }
  return n;
}

bool Program::has_bare_at_in_body() const {
  for (const auto& r : rules) {
    for (const auto& el : r.body) {
      if (const auto* e = std::get_if<ExtendedAtom>(&el); e && !e->window && e->quantifier == Quantifier::At) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace lars
