#include "lars/parser.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "lars/error.hpp"
#include "lexer.hpp"

namespace lars {

using detail::Lexer;
using detail::Tok;
using detail::Token;

namespace {

class Parser {
 public:
  Parser(std::string_view text, Vocabulary& vocab, const ParseOptions* options, bool newlines)
      : lex_(text, newlines), vocab_(vocab), options_(options) {}

  Lexer& lexer() { return lex_; }

  [[noreturn]] void fail_at(const Token& t, const std::string& message) {
    throw ParseError(message, t.line, t.column);
  }

  Token expect(Tok kind, const char* context) {
    Token t = lex_.next();
    if (t.kind != kind) {
      fail_at(t, std::string("expected ") + detail::describe(kind) + " " + context + ", found " +
                     (t.text.empty() ? detail::describe(t.kind) : "'" + t.text + "'"));
    }
    return t;
  }

  bool accept(Tok kind) {
    if (lex_.peek().kind != kind) return false;
    lex_.next();
    return true;
  }

  bool peek_keyword(std::string_view word) {
    const auto& t = lex_.peek();
    return t.kind == Tok::LowerIdent && t.text == word;
  }

  Term parse_term() {
    Token t = lex_.next();
    switch (t.kind) {
      case Tok::UpperIdent: return Term::var(vocab_.symbols().intern(t.text));
      case Tok::LowerIdent:
        if (t.text == "not") fail_at(t, "'not' is reserved");
        return Term::constant(vocab_.symbol_value(t.text));
      case Tok::Integer: return Term::constant(Value::integer(t.integer));
      default: fail_at(t, std::string("expected a term, found ") + detail::describe(t.kind));
    }
  }

  Atom parse_atom_after_name(const Token& name) {
    if (name.text == "not") fail_at(name, "'not' is reserved");
    std::vector<Term> args;
    if (accept(Tok::LParen)) {
      do {
        args.push_back(parse_term());
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "to close the argument list");
    }
    Atom a;
    a.predicate = vocab_.predicate(name.text, args.size());
    a.args = std::move(args);
    return a;
  }

  Atom parse_atom() {
    Token name = lex_.next();
    if (name.kind != Tok::LowerIdent) {
      fail_at(name, std::string("expected a predicate name, found ") +
                        (name.text.empty() ? detail::describe(name.kind) : "'" + name.text + "'"));
    }
    return parse_atom_after_name(name);
  }

  std::int64_t resolve_constant(const Token& t) {
    if (t.kind == Tok::Integer) return t.integer;
    if (t.kind == Tok::LowerIdent && options_) {
      if (auto it = options_->constants.find(t.text); it != options_->constants.end()) return it->second;
      fail_at(t, "unresolved named constant '" + t.text + "' (pass --const " + t.text + "=<value>)");
    }
    fail_at(t, "expected an integer or named constant");
  }

  // Inside `@[...]`: a time variable, an integer, or a named constant.
  Term parse_time_term() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::UpperIdent) return parse_term();
    Token tok = lex_.next();
    std::int64_t v = resolve_constant(tok);
    if (v < 0) fail_at(tok, "time points are non-negative");
    return Term::constant(Value::integer(v));
  }

  WindowSpec parse_window() {
    // '[' already consumed
    Token size_tok = lex_.next();
    std::int64_t size = resolve_constant(size_tok);
    if (size < 0) fail_at(size_tok, "window size must be non-negative");
    Token kind = lex_.next();
    WindowSpec w;
    if (kind.kind == Tok::Hash) {
      if (size == 0) fail_at(size_tok, "tuple window size must be at least 1");
      w = WindowSpec::tuple(static_cast<std::uint64_t>(size));
    } else if (kind.kind == Tok::LowerIdent && kind.text == "t") {
      w = WindowSpec::time(static_cast<std::uint64_t>(size));
    } else {
      fail_at(kind, "expected 't' (time) or '#' (tuple) in window");
    }
    expect(Tok::RBracket, "to close the window");
    return w;
  }

  ExtendedAtom parse_extended_atom() {
    ExtendedAtom e;
    if (peek_keyword("not")) {
      lex_.next();
      e.naf = true;
    }
    if (accept(Tok::LBracket)) {
      e.window = parse_window();
      Token q = lex_.next();
      switch (q.kind) {
        case Tok::Diamond: e.quantifier = Quantifier::Diamond; break;
        case Tok::Box: e.quantifier = Quantifier::Box; break;
        case Tok::At:
          expect(Tok::LBracket, "after '@'");
          e.quantifier = Quantifier::At;
          e.time = parse_time_term();
          expect(Tok::RBracket, "to close '@['");
          break;
        default: fail_at(q, "expected '<>', '[]' or '@[T]' after a window");
      }
    } else if (accept(Tok::At)) {
      expect(Tok::LBracket, "after '@'");
      e.quantifier = Quantifier::At;
      e.time = parse_time_term();
      expect(Tok::RBracket, "to close '@['");
    } else if (lex_.peek().kind == Tok::Diamond || lex_.peek().kind == Tok::Box) {
      fail_at(lex_.peek(), "'<>' and '[]' must be wrapped in a window, e.g. [3 t] <> a");
    }
    if (peek_keyword("not")) {
      lex_.next();
      if (e.naf && e.quantifier == Quantifier::None) fail_at(lex_.peek(), "double negation");
      e.atom_negated = true;
    }
    e.atom = parse_atom();
    return e;
  }

  static std::optional<Comparison> comparison_of(Tok kind) {
    switch (kind) {
      case Tok::Less: return Comparison::Less;
      case Tok::LessEqual: return Comparison::LessEqual;
      case Tok::Greater: return Comparison::Greater;
      case Tok::GreaterEqual: return Comparison::GreaterEqual;
      case Tok::Equal: return Comparison::Equal;
      case Tok::NotEqual: return Comparison::NotEqual;
      default: return std::nullopt;
    }
  }

  BodyElement parse_body_element() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::UpperIdent || t.kind == Tok::Integer) {
      Term lhs = parse_term();
      Token op = lex_.next();
      auto cmp = comparison_of(op.kind);
      if (!cmp) fail_at(op, "expected a comparison operator");
      return BuiltinAtom{*cmp, lhs, parse_term()};
    }
    if (t.kind == Tok::LowerIdent && t.text != "not") {
      Token name = lex_.next();
      if (auto cmp = comparison_of(lex_.peek().kind)) {
        lex_.next();
        return BuiltinAtom{*cmp, Term::constant(vocab_.symbol_value(name.text)), parse_term()};
      }
      ExtendedAtom e;
      e.atom = parse_atom_after_name(name);
      return e;
    }
    return parse_extended_atom();
  }

  Rule parse_rule() {
    Rule r;
    const Token& first = lex_.peek();
    r.location = SourceLocation{first.line, first.column};
    if (accept(Tok::At)) {
      expect(Tok::LBracket, "after '@'");
      r.head.time = parse_time_term();
      expect(Tok::RBracket, "to close '@['");
    }
    r.head.atom = parse_atom();
    if (accept(Tok::If)) {
      do {
        r.body.push_back(parse_body_element());
      } while (accept(Tok::Comma));
    }
    expect(Tok::Dot, "at the end of a rule");
    return r;
  }

 private:
  Lexer lex_;
  Vocabulary& vocab_;
  const ParseOptions* options_;
};

// Tuple windows may only select input atoms.
void check_tuple_windows(const Program& program) {
  for (const auto& r : program.rules) {
    for (const auto& el : r.body) {
      const auto* e = std::get_if<ExtendedAtom>(&el);
      if (!e || !e->window || e->window->kind != WindowKind::Tuple) continue;
      if (program.is_intensional(e->atom.predicate)) {
        throw ValidationError("line " + std::to_string(r.location.line) + ": tuple window over derived predicate '" +
                              program.vocabulary->predicate_info(e->atom.predicate).name +
                              "' (tuple windows may only select input atoms)");
      }
    }
  }
}

}  // namespace

Rule rewrite_negation(const Rule& rule) {
  Rule out = rule;
  for (auto& el : out.body) {
    auto* e = std::get_if<ExtendedAtom>(&el);
    if (!e || !e->naf) continue;
    e->naf = false;
    e->atom_negated = !e->atom_negated;
    if (e->quantifier == Quantifier::Diamond) {
      e->quantifier = Quantifier::Box;
    } else if (e->quantifier == Quantifier::Box) {
      e->quantifier = Quantifier::Diamond;
    }
  }
  return out;
}

void check_safety(const Rule& rule, const Vocabulary& vocab) {
  auto where = [&] { return "line " + std::to_string(rule.location.line) + ": "; };
  std::vector<Symbol> bound;
  std::vector<Symbol> bound_by_at;
  bool has_positive = false;
  bool has_atom = false;
  for (const auto& el : rule.body) {
    const auto* e = std::get_if<ExtendedAtom>(&el);
    if (!e) continue;
    has_atom = true;
    if (!e->is_positive()) continue;
    has_positive = true;
    collect_variables(e->atom, bound);
    if (e->time && e->time->is_variable()) {
      bound.push_back(e->time->variable);
      bound_by_at.push_back(e->time->variable);
    }
  }
  if (!rule.body.empty() && !has_atom) {
    throw ValidationError(where() + "unsafe rule: body consists of builtins only");
  }
  (void)has_positive;
  auto is_bound = [&](Symbol v) { return std::find(bound.begin(), bound.end(), v) != bound.end(); };
  auto require = [&](const std::vector<Symbol>& vars, const char* what) {
    for (Symbol v : vars) {
      if (!is_bound(v)) {
        throw ValidationError(where() + "unsafe rule: variable " + vocab.symbols().name(v) + " in " + what +
                              " is not bound by a positive body atom");
      }
    }
  };
  std::vector<Symbol> head_vars;
  collect_variables(rule.head.atom, head_vars);
  require(head_vars, "the head");
  if (rule.head.time && rule.head.time->is_variable()) {
    Symbol v = rule.head.time->variable;
    if (std::find(bound_by_at.begin(), bound_by_at.end(), v) == bound_by_at.end()) {
      throw ValidationError(where() + "unsafe rule: head time variable " + vocab.symbols().name(v) +
                            " does not occur in a positive body @-atom");
    }
  }
  for (const auto& el : rule.body) {
    std::vector<Symbol> vars;
    if (const auto* e = std::get_if<ExtendedAtom>(&el)) {
      if (e->is_positive()) continue;
      collect_variables(*e, vars);
      require(vars, "a negated atom");
    } else {
      collect_variables(std::get<BuiltinAtom>(el), vars);
      require(vars, "a comparison");
    }
  }
}

void stratify(Program& program) {
  const std::size_t n = program.vocabulary->predicate_count();
  program.intensional.resize(n, false);
  struct Edge {
    PredicateId to;
    bool negative;
  };
  std::vector<std::vector<Edge>> edges(n);
  for (const auto& r : program.rules) {
    for (const auto& el : r.body) {
      const auto* e = std::get_if<ExtendedAtom>(&el);
      if (!e || !program.is_intensional(e->atom.predicate)) continue;
      edges[r.head.atom.predicate].push_back({e->atom.predicate, !e->is_positive()});
    }
  }

  // Tarjan's SCC; components come out in reverse topological order
  // (dependencies first), which is the bottom-up order we want.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<PredicateId> stack;
  std::vector<std::vector<PredicateId>> components;
  int counter = 0;
  std::function<void(PredicateId)> visit = [&](PredicateId v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (const auto& e : edges[v]) {
      if (index[e.to] < 0) {
        visit(e.to);
        low[v] = std::min(low[v], low[e.to]);
      } else if (on_stack[e.to]) {
        low[v] = std::min(low[v], index[e.to]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<PredicateId> scc;
      PredicateId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = static_cast<int>(components.size());
        scc.push_back(w);
      } while (w != v);
      components.push_back(std::move(scc));
    }
  };
  for (PredicateId p = 0; p < n; ++p) {
    if (program.is_intensional(p) && index[p] < 0) visit(p);
  }

  // Levels over the condensation: positive edges keep the level, negative
  // edges raise it.
  program.predicate_stratum.assign(n, 0);
  std::vector<std::size_t> level(components.size(), 0);
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (PredicateId p : components[c]) {
      for (const auto& e : edges[p]) {
        const auto target = static_cast<std::size_t>(comp[e.to]);
        if (target == c) {
          if (e.negative) {
            std::string names;
            for (PredicateId q : components[c]) {
              if (!names.empty()) names += ", ";
              names += program.vocabulary->predicate_info(q).name;
            }
            throw ValidationError("negation cycle through: " + names);
          }
          continue;
        }
        level[c] = std::max(level[c], level[target] + (e.negative ? 1 : 0));
      }
    }
    for (PredicateId p : components[c]) program.predicate_stratum[p] = level[c];
  }

  std::size_t strata_count = 0;
  for (auto l : level) strata_count = std::max(strata_count, l + 1);
  program.strata.assign(program.rules.empty() ? 0 : strata_count, {});
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    auto& r = program.rules[i];
    r.stratum = program.predicate_stratum[r.head.atom.predicate];
    program.strata[r.stratum].push_back(i);
  }
}

Program parse_program(std::string_view text, const ParseOptions& options, std::shared_ptr<Vocabulary> vocabulary) {
  Program program;
  program.vocabulary = vocabulary ? std::move(vocabulary) : std::make_shared<Vocabulary>();
  Parser parser(text, *program.vocabulary, &options, false);
  while (parser.lexer().peek().kind != Tok::End) program.rules.push_back(parser.parse_rule());

  program.intensional.assign(program.vocabulary->predicate_count(), false);
  for (const auto& r : program.rules) program.intensional[r.head.atom.predicate] = true;

  check_tuple_windows(program);
  for (auto& r : program.rules) {
    r = rewrite_negation(r);
    check_safety(r, *program.vocabulary);
  }
  stratify(program);
  return program;
}

namespace {

GroundAtom parse_ground(Parser& parser, Vocabulary& vocab) {
  const Token& start = parser.lexer().peek();
  const std::size_t line = start.line, column = start.column;
  Atom a = parser.parse_atom();
  auto g = a.to_ground();
  if (!g) throw ParseError("stream atom " + to_string(a, vocab) + " contains a variable", line, column);
  return *g;
}

}  // namespace

Stream parse_stream(std::string_view text, Vocabulary& vocab) {
  Parser parser(text, vocab, nullptr, true);
  auto& lex = parser.lexer();
  std::optional<Timeline> declared;
  struct Line {
    Time tick;
    std::vector<GroundAtom> atoms;
  };
  std::vector<Line> lines;
  std::optional<Time> last_tick;

  for (;;) {
    Token t = lex.next();
    if (t.kind == Tok::End) break;
    if (t.kind == Tok::Newline) continue;
    if (t.kind == Tok::At) {
      Token word = parser.expect(Tok::LowerIdent, "after '@'");
      if (word.text != "timeline") parser.fail_at(word, "unknown directive '@" + word.text + "'");
      if (declared || !lines.empty()) parser.fail_at(word, "@timeline must be the first line");
      Token lo = parser.expect(Tok::Integer, "as timeline start");
      Token hi = parser.expect(Tok::Integer, "as timeline end");
      if (lo.integer < 0 || hi.integer < lo.integer) parser.fail_at(lo, "invalid timeline");
      declared = Timeline(static_cast<Time>(lo.integer), static_cast<Time>(hi.integer));
      continue;
    }
    if (t.kind != Tok::Integer) parser.fail_at(t, "expected a tick at the start of a stream line");
    if (t.integer < 0) parser.fail_at(t, "ticks are non-negative");
    const auto tick = static_cast<Time>(t.integer);
    if (last_tick && tick < *last_tick) {
      parser.fail_at(t, "tick " + std::to_string(tick) + " after tick " + std::to_string(*last_tick) +
                            " (ticks must not decrease)");
    }
    if (declared && !declared->contains(tick)) parser.fail_at(t, "tick outside the declared timeline");
    last_tick = tick;
    Line line{tick, {}};
    while (lex.peek().kind != Tok::Newline && lex.peek().kind != Tok::End) {
      line.atoms.push_back(parse_ground(parser, vocab));
    }
    lines.push_back(std::move(line));
  }

  Timeline timeline = declared ? *declared
                               : (lines.empty() ? Timeline(0, 0) : Timeline(lines.front().tick, lines.back().tick));
  Stream s(timeline);
  for (auto& line : lines) {
    for (auto& a : line.atoms) s.add(line.tick, std::move(a));
  }
  return s;
}

std::vector<GroundAtom> parse_background(std::string_view text, Vocabulary& vocab) {
  Parser parser(text, vocab, nullptr, false);
  std::vector<GroundAtom> out;
  while (parser.lexer().peek().kind != Tok::End) {
    out.push_back(parse_ground(parser, vocab));
    parser.expect(Tok::Dot, "after a background fact");
  }
  return out;
}

GroundAtom parse_ground_atom(std::string_view text, Vocabulary& vocab) {
  Parser parser(text, vocab, nullptr, false);
  GroundAtom g = parse_ground(parser, vocab);
  parser.expect(Tok::End, "after the atom");
  return g;
}

std::vector<PredicateId> derived_predicates_in(const Program& program, const Stream& stream) {
  std::set<PredicateId> found;
  for (const auto& [t, bucket] : stream.buckets()) {
    for (const auto& e : bucket->entries) {
      if (program.is_intensional(e.atom.predicate)) found.insert(e.atom.predicate);
    }
  }
  return {found.begin(), found.end()};
}

}  // namespace lars
