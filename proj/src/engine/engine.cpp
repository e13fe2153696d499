#include "lars/engine/engine.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lars/error.hpp"

namespace lars::engine {

namespace {

using Binding = std::vector<Value>;
using Id = std::uint32_t;

std::size_t mix(std::size_t h, std::size_t v) { return (h ^ v) * 0x100000001b3ULL; }

struct BindingHash {
  std::size_t operator()(const Binding& b) const {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (const auto& v : b) h = mix(h, v.hash());
    return h;
  }
};

std::size_t hash_annotation(const Annotation& a) {
  std::size_t h = mix(0x84222325ULL, a.c);
  h = mix(h, a.h);
  h = mix(h, a.cc);
  return mix(h, a.hc);
}

struct EntryKey {
  Binding binding;
  Annotation annotation;
  friend bool operator==(const EntryKey&, const EntryKey&) = default;
};

struct EntryKeyHash {
  std::size_t operator()(const EntryKey& k) const { return mix(BindingHash{}(k.binding), hash_annotation(k.annotation)); }
};

struct AtomTime {
  GroundAtom atom;
  Time u = 0;
  friend bool operator==(const AtomTime&, const AtomTime&) = default;
};

struct AtomTimeHash {
  std::size_t operator()(const AtomTime& a) const { return mix(GroundAtomHash{}(a.atom), a.u); }
};

Time window_start(Time start, Time t, std::uint64_t n) { return t >= n ? std::max(start, t - n) : start; }

// Ids bucketed by horizon time and horizon count.
class ExpiryIndex {
 public:
  void add(Id id, const Annotation& a) {
    if (a.h != kInfinity) by_h_[a.h].push_back(id);
    if (a.hc != kInfinity) by_hc_[a.hc].push_back(id);
  }

  template <class Kill>
  void expire(Time t, Count arrivals, Kill&& kill) {
    while (!by_h_.empty() && by_h_.begin()->first < t) {
      for (Id id : by_h_.begin()->second) kill(id);
      by_h_.erase(by_h_.begin());
    }
    while (!by_hc_.empty() && by_hc_.begin()->first < arrivals) {
      for (Id id : by_hc_.begin()->second) kill(id);
      by_hc_.erase(by_hc_.begin());
    }
  }

  void clear() {
    by_h_.clear();
    by_hc_.clear();
  }

 private:
  std::map<Time, std::vector<Id>> by_h_;
  std::map<Count, std::vector<Id>> by_hc_;
};

struct LitEntry {
  Binding binding;
  Annotation annotation;
  bool alive = true;
};

// Annotated groundings of one body literal, in insertion order. Ids stay
// stable within a tick; dead entries are skipped and compacted away
// between ticks.
class LiteralStore {
 public:
  std::size_t index_for(const std::vector<std::size_t>& slots) {
    for (std::size_t i = 0; i < indexes_.size(); ++i) {
      if (indexes_[i].slots == slots) return i;
    }
    indexes_.push_back(Index{slots, {}});
    for (Id id = 0; id < entries_.size(); ++id) {
      if (entries_[id].alive) indexes_.back().map[key(slots, entries_[id].binding)].push_back(id);
    }
    return indexes_.size() - 1;
  }

  bool insert(Binding binding, const Annotation& annotation) {
    EntryKey k{binding, annotation};
    if (!keys_.insert(k).second) return false;
    Id id = static_cast<Id>(entries_.size());
    for (auto& index : indexes_) index.map[key(index.slots, binding)].push_back(id);
    expiry_.add(id, annotation);
    entries_.push_back(LitEntry{std::move(binding), annotation, true});
    ++live_;
    return true;
  }

  std::size_t expire(Time t, Count arrivals) {
    std::size_t removed = 0;
    expiry_.expire(t, arrivals, [&](Id id) {
      auto& e = entries_[id];
      if (!e.alive) return;
      e.alive = false;
      keys_.erase(EntryKey{e.binding, e.annotation});
      --live_;
      ++removed;
    });
    return removed;
  }

  // Called between ticks only: ids change.
  void compact() {
    const std::size_t dead = entries_.size() - live_;
    if (dead < 64 || dead < live_) return;
    std::vector<LitEntry> kept;
    kept.reserve(live_);
    for (auto& e : entries_) {
      if (e.alive) kept.push_back(std::move(e));
    }
    entries_ = std::move(kept);
    expiry_.clear();
    for (auto& index : indexes_) index.map.clear();
    for (Id id = 0; id < entries_.size(); ++id) {
      expiry_.add(id, entries_[id].annotation);
      for (auto& index : indexes_) index.map[key(index.slots, entries_[id].binding)].push_back(id);
    }
  }

  const std::vector<Id>* probe(std::size_t index, const Binding& k) const {
    auto it = indexes_[index].map.find(k);
    return it == indexes_[index].map.end() ? nullptr : &it->second;
  }

  const std::vector<LitEntry>& entries() const { return entries_; }
  std::size_t live() const { return live_; }

  std::size_t tick_start = 0;

 private:
  struct Index {
    std::vector<std::size_t> slots;
    std::unordered_map<Binding, std::vector<Id>, BindingHash> map;
  };

  static Binding key(const std::vector<std::size_t>& slots, const Binding& b) {
    Binding k;
    k.reserve(slots.size());
    for (auto s : slots) k.push_back(b[s]);
    return k;
  }

  std::vector<LitEntry> entries_;
  std::size_t live_ = 0;
  std::unordered_set<EntryKey, EntryKeyHash> keys_;
  std::vector<Index> indexes_;
  ExpiryIndex expiry_;
};

enum class Shape { Plain, BareAt, TimeDiamond, TimeAt, TimeBox, TupleDiamond, TupleAt, TupleBox };

// Matches ground atoms against a literal's atom, filling its variable slots.
struct Pattern {
  PredicateId predicate = 0;
  std::vector<int> arg_slot;  // -1: constant
  std::vector<Value> arg_const;
  int time_slot = -1;
  std::optional<Value> time_const;
  bool time_shared = false;  // the time variable also occurs in the atom
  std::size_t slots = 0;

  std::optional<Binding> match(const GroundAtom& g) const {
    if (g.predicate != predicate || g.args.size() != arg_slot.size()) return std::nullopt;
    Binding b(slots);
    std::vector<bool> set(slots, false);
    for (std::size_t i = 0; i < arg_slot.size(); ++i) {
      int s = arg_slot[i];
      if (s < 0) {
        if (arg_const[i] != g.args[i]) return std::nullopt;
      } else if (set[s]) {
        if (b[s] != g.args[i]) return std::nullopt;
      } else {
        b[s] = g.args[i];
        set[s] = true;
      }
    }
    return b;
  }

  bool set_time(Binding& b, Time u) const {
    Value v = Value::integer(static_cast<std::int64_t>(u));
    if (time_slot < 0) return time_const && *time_const == v;
    if (time_shared) return b[time_slot] == v;
    b[time_slot] = v;
    return true;
  }
};

struct Literal {
  Shape shape = Shape::Plain;
  std::uint64_t n = 0;
  Pattern pattern;
  std::vector<Symbol> vars;  // slot -> variable
  LiteralStore store;
  std::uint64_t seen_version = ~std::uint64_t{0};
  Time seen_tick = kInfinity;
};

// A term over rule variable slots.
struct RTerm {
  int slot = -1;
  Value value;
  Value get(const Binding& vals) const { return slot < 0 ? value : vals[slot]; }
};

struct NegLiteral {
  std::optional<WindowSpec> window;
  Quantifier quantifier = Quantifier::None;
  PredicateId predicate = 0;
  std::vector<RTerm> args;
  std::optional<RTerm> time;
};

struct RBuiltin {
  Comparison op;
  RTerm lhs, rhs;
};

enum class Range { Delta, Old, All };

struct Step {
  std::size_t pos = 0;  // index into the rule's positive literals
  Range range = Range::All;
  std::vector<std::size_t> key_rule_slots;
  int index = -1;
  std::vector<std::pair<std::size_t, std::size_t>> assign;  // literal slot -> rule slot
};

struct CompiledRule {
  std::size_t index = 0;
  std::vector<std::size_t> lits;  // global literal ids of positive body atoms
  std::vector<NegLiteral> negs;
  std::vector<RBuiltin> builtins;
  PredicateId head_predicate = 0;
  std::vector<RTerm> head_args;
  std::optional<RTerm> head_time;
  std::size_t nvars = 0;
  std::vector<std::vector<Step>> plans;  // one per delta position
  std::vector<std::size_t> marks, ends;
  bool first = true;
};

struct Derived {
  GroundAtom atom;
  std::optional<Time> at;
  Annotation annotation;
};

struct Fact {
  GroundAtom atom;
  bool placed = false;
  Time u = 0;
  Annotation annotation;
  bool alive = true;
};

struct FactKey {
  GroundAtom atom;
  bool placed;
  Time u;
  Annotation annotation;
  friend bool operator==(const FactKey&, const FactKey&) = default;
};

struct FactKeyHash {
  std::size_t operator()(const FactKey& k) const {
    return mix(mix(GroundAtomHash{}(k.atom), k.placed ? k.u + 1 : 0), hash_annotation(k.annotation));
  }
};

struct HistoryEntry {
  GroundAtom atom;
  Time u;
  Count seq;
};

struct DataInfo {
  std::deque<std::pair<Time, Count>> occurrences;
  Time run_start = 0;
  Time last = 0;
};

// The last n data atoms at the current tick.
struct Snapshot {
  Time start = 0;
  std::vector<const HistoryEntry*> entries;
  std::unordered_set<AtomTime, AtomTimeHash> present;
};

}  // namespace

struct Engine::State {
  Program program;
  Options options;
  Background background;
  Time t1;
  std::optional<Time> now;
  Count arrivals = 0;  // K: number of data atoms so far

  std::vector<Literal> lits;
  std::vector<std::vector<std::size_t>> lits_by_pred;
  std::vector<CompiledRule> rules;
  std::vector<std::vector<GroundAtom>> background_by_pred;
  // Derived predicates listed as background hold at every tick.
  std::vector<GroundAtom> background_output;

  std::unordered_map<GroundAtom, DataInfo, GroundAtomHash> data;
  std::deque<HistoryEntry> history;
  std::vector<GroundAtom> arrived_now;
  std::map<std::uint64_t, Snapshot> snapshots;

  std::vector<Fact> facts;
  std::size_t facts_live = 0;
  std::unordered_set<FactKey, FactKeyHash> fact_keys;
  ExpiryIndex fact_expiry;
  std::vector<std::vector<Id>> diag_by_pred;
  std::unordered_map<GroundAtom, std::uint32_t, GroundAtomHash> diag_count;
  std::unordered_map<AtomTime, std::uint32_t, AtomTimeHash> placed_live;
  std::unordered_set<GroundAtom, GroundAtomHash> placed_now;
  std::map<Time, std::vector<Derived>> pending;

  std::vector<std::uint64_t> version;
  std::uint64_t fact_counter = 0;
  Telemetry telemetry;

  State(const Program& p, Time start, Background bg, Options opts)
      : program(p), options(opts), background(std::move(bg)), t1(start) {
    if (options.gc && program.has_bare_at_in_body()) {
      throw ValidationError("retention GC is unavailable for programs with @-atoms outside windows");
    }
    const std::size_t preds = program.vocabulary ? program.vocabulary->predicate_count() : 0;
    lits_by_pred.resize(preds);
    background_by_pred.resize(preds);
    diag_by_pred.resize(preds);
    version.resize(preds, 0);
    for (const auto& g : background) {
      ensure_pred(g.predicate);
      background_by_pred[g.predicate].push_back(g);
      if (program.is_intensional(g.predicate)) background_output.push_back(g);
    }
    for (auto& list : background_by_pred) std::sort(list.begin(), list.end());
    std::sort(background_output.begin(), background_output.end());
    for (std::size_t i = 0; i < program.rules.size(); ++i) compile(i);
  }

  void ensure_pred(PredicateId p) {
    if (p >= lits_by_pred.size()) {
      lits_by_pred.resize(p + 1);
      background_by_pred.resize(p + 1);
      diag_by_pred.resize(p + 1);
      version.resize(p + 1, 0);
    }
  }

  // ---- compilation ----

  void compile(std::size_t index) {
    const Rule& rule = program.rules[index];
    CompiledRule r;
    r.index = index;
    std::vector<Symbol> rule_vars;
    auto slot_of = [&](Symbol v) {
      auto it = std::find(rule_vars.begin(), rule_vars.end(), v);
      if (it != rule_vars.end()) return static_cast<std::size_t>(it - rule_vars.begin());
      rule_vars.push_back(v);
      return rule_vars.size() - 1;
    };
    auto rterm = [&](const Term& term) {
      RTerm out;
      if (term.is_variable()) {
        out.slot = static_cast<int>(slot_of(term.variable));
      } else {
        out.value = term.value;
      }
      return out;
    };

    std::vector<std::vector<std::size_t>> lit_slots;  // literal slot -> rule slot
    for (const auto& element : rule.body) {
      const auto* e = std::get_if<ExtendedAtom>(&element);
      if (!e || !e->is_positive()) continue;
      Literal lit = make_literal(*e);
      std::vector<std::size_t> map;
      for (auto v : lit.vars) map.push_back(slot_of(v));
      lit_slots.push_back(std::move(map));
      ensure_pred(lit.pattern.predicate);
      lits_by_pred[lit.pattern.predicate].push_back(lits.size());
      r.lits.push_back(lits.size());
      lits.push_back(std::move(lit));
    }
    for (const auto& element : rule.body) {
      if (const auto* b = std::get_if<BuiltinAtom>(&element)) {
        r.builtins.push_back(RBuiltin{b->op, rterm(b->lhs), rterm(b->rhs)});
        continue;
      }
      const auto& e = std::get<ExtendedAtom>(element);
      if (e.is_positive()) continue;
      NegLiteral neg;
      neg.window = e.window;
      neg.quantifier = e.quantifier;
      neg.predicate = e.atom.predicate;
      for (const auto& term : e.atom.args) neg.args.push_back(rterm(term));
      if (e.time) neg.time = rterm(*e.time);
      r.negs.push_back(std::move(neg));
    }
    r.head_predicate = rule.head.atom.predicate;
    ensure_pred(r.head_predicate);
    for (const auto& term : rule.head.atom.args) r.head_args.push_back(rterm(term));
    if (rule.head.time) r.head_time = rterm(*rule.head.time);
    r.nvars = rule_vars.size();

    // Join plans: the delta literal first, then the others in body order.
    for (std::size_t j = 0; j < r.lits.size(); ++j) {
      std::vector<Step> plan;
      std::vector<bool> bound(r.nvars, false);
      std::vector<std::size_t> order{j};
      for (std::size_t i = 0; i < r.lits.size(); ++i) {
        if (i != j) order.push_back(i);
      }
      for (auto pos : order) {
        Step step;
        step.pos = pos;
        step.range = pos == j ? Range::Delta : (pos < j ? Range::Old : Range::All);
        std::vector<std::size_t> key_lit_slots;
        for (std::size_t ls = 0; ls < lit_slots[pos].size(); ++ls) {
          std::size_t rs = lit_slots[pos][ls];
          if (bound[rs]) {
            key_lit_slots.push_back(ls);
            step.key_rule_slots.push_back(rs);
          } else {
            step.assign.emplace_back(ls, rs);
            bound[rs] = true;
          }
        }
        if (!key_lit_slots.empty()) {
          step.index = static_cast<int>(lits[r.lits[pos]].store.index_for(key_lit_slots));
        }
        plan.push_back(std::move(step));
      }
      r.plans.push_back(std::move(plan));
    }
    r.marks.assign(r.lits.size(), 0);
    r.ends.assign(r.lits.size(), 0);
    rules.push_back(std::move(r));
  }

  static Literal make_literal(const ExtendedAtom& e) {
    Literal lit;
    if (!e.window) {
      lit.shape = e.quantifier == Quantifier::At ? Shape::BareAt : Shape::Plain;
    } else {
      lit.n = e.window->size;
      const bool time = e.window->kind == WindowKind::Time;
      switch (e.quantifier) {
        case Quantifier::Diamond: lit.shape = time ? Shape::TimeDiamond : Shape::TupleDiamond; break;
        case Quantifier::Box: lit.shape = time ? Shape::TimeBox : Shape::TupleBox; break;
        case Quantifier::At: lit.shape = time ? Shape::TimeAt : Shape::TupleAt; break;
        case Quantifier::None: throw ValidationError("window without a quantifier");
      }
    }
    Pattern& p = lit.pattern;
    p.predicate = e.atom.predicate;
    auto slot_of = [&](Symbol v) {
      auto it = std::find(lit.vars.begin(), lit.vars.end(), v);
      if (it != lit.vars.end()) return static_cast<int>(it - lit.vars.begin());
      lit.vars.push_back(v);
      return static_cast<int>(lit.vars.size() - 1);
    };
    for (const auto& term : e.atom.args) {
      if (term.is_variable()) {
        p.arg_slot.push_back(slot_of(term.variable));
        p.arg_const.emplace_back();
      } else {
        p.arg_slot.push_back(-1);
        p.arg_const.push_back(term.value);
      }
    }
    if (e.time) {
      if (e.time->is_variable()) {
        const std::size_t before = lit.vars.size();
        p.time_slot = slot_of(e.time->variable);
        p.time_shared = lit.vars.size() == before;
      } else {
        p.time_const = e.time->value;
      }
    }
    p.slots = lit.vars.size();
    return lit;
  }

  // ---- presence of atoms in the current interpretation ----

  bool data_at(const GroundAtom& a, Time u) const {
    auto it = data.find(a);
    if (it == data.end()) return false;
    const auto& occ = it->second.occurrences;
    auto pos = std::lower_bound(occ.begin(), occ.end(), std::make_pair(u, Count{0}));
    return pos != occ.end() && pos->first == u;
  }

  // a ∈ v(u) for the answer stream of the current prefix, or background.
  bool present(const GroundAtom& a, Time u) const {
    if (background.count(a)) return true;
    if (!program.is_intensional(a.predicate)) return data_at(a, u);
    if (u == *now && diag_count.count(a)) return true;
    return placed_live.count(AtomTime{a, u}) != 0;
  }

  const Snapshot& snapshot(std::uint64_t n) {
    auto [it, inserted] = snapshots.try_emplace(n);
    Snapshot& s = it->second;
    if (!inserted) return s;
    for (auto h = history.rbegin(); h != history.rend() && s.entries.size() < n; ++h) {
      s.entries.push_back(&*h);
      s.present.insert(AtomTime{h->atom, h->u});
    }
    s.start = arrivals < n ? t1 : s.entries.back()->u;
    std::reverse(s.entries.begin(), s.entries.end());
    return s;
  }

  // ---- facts ----

  void add_fact(const GroundAtom& atom, bool placed, Time u, Annotation ann) {
    if (!placed && options.fault == Fault::ExtendHorizon && ann.h != kInfinity) ++ann.h;
    if (!fact_keys.insert(FactKey{atom, placed, placed ? u : 0, ann}).second) return;
    const Id id = static_cast<Id>(facts.size());
    facts.push_back(Fact{atom, placed, placed ? u : 0, ann, true});
    ++facts_live;
    fact_expiry.add(id, ann);
    ++version[atom.predicate];
    ++fact_counter;
    ++telemetry.derivations;
    if (placed) {
      ++placed_live[AtomTime{atom, u}];
      if (u == *now) placed_now.insert(atom);
    } else {
      ++diag_count[atom];
      diag_by_pred[atom.predicate].push_back(id);
    }
    for (auto li : lits_by_pred[atom.predicate]) {
      if (placed) {
        on_placed(lits[li], atom, u, ann);
      } else {
        on_diagonal(lits[li], atom, ann);
      }
    }
  }

  void kill_fact(Id id) {
    Fact& f = facts[id];
    if (!f.alive) return;
    f.alive = false;
    --facts_live;
    ++telemetry.expired;
    fact_keys.erase(FactKey{f.atom, f.placed, f.u, f.annotation});
    if (f.placed) {
      auto it = placed_live.find(AtomTime{f.atom, f.u});
      if (--it->second == 0) placed_live.erase(it);
    } else {
      auto it = diag_count.find(f.atom);
      if (--it->second == 0) diag_count.erase(it);
    }
  }

  void compact_facts() {
    const std::size_t dead = facts.size() - facts_live;
    if (dead < 1024 || dead < facts_live) return;
    std::vector<Fact> kept;
    kept.reserve(facts_live);
    for (auto& f : facts) {
      if (f.alive) kept.push_back(std::move(f));
    }
    facts = std::move(kept);
    fact_expiry.clear();
    for (auto& list : diag_by_pred) list.clear();
    for (Id id = 0; id < facts.size(); ++id) {
      fact_expiry.add(id, facts[id].annotation);
      if (!facts[id].placed) diag_by_pred[facts[id].atom.predicate].push_back(id);
    }
  }

  // ---- literal sources ----

  void put(Literal& lit, Binding b, const Annotation& ann) {
    // Tuple counts may already be exhausted by later arrivals of the same tick.
    if (ann.c > ann.h || ann.expired(*now, arrivals)) return;
    lit.store.insert(std::move(b), ann);
  }

  void on_data(Literal& lit, const GroundAtom& atom, Time u, Count k) {
    auto b = lit.pattern.match(atom);
    if (!b) return;
    switch (lit.shape) {
      case Shape::Plain: put(lit, std::move(*b), Annotation::at(u)); break;
      case Shape::BareAt:
        if (lit.pattern.set_time(*b, u)) put(lit, std::move(*b), Annotation{u, kInfinity});
        break;
      case Shape::TimeDiamond: put(lit, std::move(*b), Annotation{u, saturating_add(u, lit.n)}); break;
      case Shape::TimeAt:
        if (lit.pattern.set_time(*b, u)) put(lit, std::move(*b), Annotation{u, saturating_add(u, lit.n)});
        break;
      case Shape::TupleDiamond:
        put(lit, std::move(*b), Annotation{u, kInfinity, k, saturating_add(k, lit.n - 1)});
        break;
      default: break;  // per-tick shapes
    }
  }

  void on_diagonal(Literal& lit, const GroundAtom& atom, const Annotation& ann) {
    auto b = lit.pattern.match(atom);
    if (!b) return;
    const Time t = *now;
    switch (lit.shape) {
      case Shape::Plain:
      case Shape::TimeDiamond: put(lit, std::move(*b), ann); break;
      case Shape::BareAt:
      case Shape::TimeAt:
        if (lit.pattern.set_time(*b, t)) put(lit, std::move(*b), Annotation{t, t, ann.cc, ann.hc});
        break;
      default: break;
    }
  }

  void on_placed(Literal& lit, const GroundAtom& atom, Time u, const Annotation& ann) {
    auto b = lit.pattern.match(atom);
    if (!b) return;
    const Time t = *now;
    switch (lit.shape) {
      case Shape::Plain:
        if (ann.c == u) put(lit, std::move(*b), Annotation{u, u, ann.cc, ann.hc});
        break;
      case Shape::BareAt:
        if (lit.pattern.set_time(*b, u)) put(lit, std::move(*b), ann);
        break;
      case Shape::TimeDiamond:
      case Shape::TimeAt: {
        Time h = std::min(ann.h, saturating_add(u, lit.n));
        if (h < t) break;
        if (lit.shape == Shape::TimeAt && !lit.pattern.set_time(*b, u)) break;
        put(lit, std::move(*b), Annotation{ann.c, h, ann.cc, ann.hc});
        break;
      }
      default: break;
    }
  }

  template <class Fn>
  void live_diagonal(PredicateId p, Fn&& fn) {
    for (Id id : diag_by_pred[p]) {
      if (facts[id].alive) fn(facts[id]);
    }
  }

  // Groundings that are recomputed at every tick.
  void tick_sources(Literal& lit) {
    const Time t = *now;
    const PredicateId p = lit.pattern.predicate;
    const auto& bg = background_by_pred[p];
    switch (lit.shape) {
      case Shape::Plain:
      case Shape::TimeDiamond:
      case Shape::TupleDiamond:
        if (t == t1) {
          for (const auto& g : bg) {
            if (auto b = lit.pattern.match(g)) put(lit, std::move(*b), Annotation{t1, kInfinity});
          }
        }
        break;
      case Shape::BareAt:
      case Shape::TimeAt: {
        const Time h = lit.shape == Shape::BareAt ? kInfinity : saturating_add(t, lit.n);
        for (const auto& g : bg) {
          auto b = lit.pattern.match(g);
          if (b && lit.pattern.set_time(*b, t)) put(lit, std::move(*b), Annotation{t, h});
        }
        live_diagonal(p, [&](const Fact& f) {
          auto b = lit.pattern.match(f.atom);
          if (b && lit.pattern.set_time(*b, t)) put(lit, std::move(*b), Annotation{t, t, f.annotation.cc, f.annotation.hc});
        });
        break;
      }
      case Shape::TimeBox: refresh_box(lit); break;
      case Shape::TupleAt: {
        ++telemetry.grd_calls;
        const Snapshot& s = snapshot(lit.n);
        for (const auto* e : s.entries) {
          auto b = lit.pattern.match(e->atom);
          if (b && lit.pattern.set_time(*b, e->u)) put(lit, std::move(*b), Annotation::at(t));
        }
        for (const auto& g : bg) {
          for (Time u = s.start;; ++u) {
            auto b = lit.pattern.match(g);
            if (b && lit.pattern.set_time(*b, u)) put(lit, std::move(*b), Annotation::at(t));
            if (u == t) break;
          }
        }
        break;
      }
      case Shape::TupleBox: {
        ++telemetry.grd_calls;
        const Snapshot& s = snapshot(lit.n);
        for (const auto& g : bg) {
          if (auto b = lit.pattern.match(g)) put(lit, std::move(*b), Annotation::at(t));
        }
        for (const auto* e : s.entries) {
          if (e->u != t || e->atom.predicate != p || background.count(e->atom)) continue;
          auto b = lit.pattern.match(e->atom);
          if (!b) continue;
          bool all = true;
          for (Time u = s.start; u < t && all; ++u) all = s.present.count(AtomTime{e->atom, u}) != 0;
          if (all) put(lit, std::move(*b), Annotation::at(t));
        }
        break;
      }
    }
  }

  // ⊞n□ over a time window: re-checked whenever the predicate changed.
  void refresh_box(Literal& lit) {
    const Time t = *now;
    const PredicateId p = lit.pattern.predicate;
    if (lit.seen_tick == t && lit.seen_version == version[p]) return;
    lit.seen_tick = t;
    lit.seen_version = version[p];
    ++telemetry.grd_calls;
    const Time lo = window_start(t1, t, lit.n);
    for (const auto& g : background_by_pred[p]) {
      if (auto b = lit.pattern.match(g)) put(lit, std::move(*b), Annotation::at(t));
    }
    if (!program.is_intensional(p)) {
      for (const auto& a : arrived_now) {
        if (a.predicate != p || background.count(a)) continue;
        if (data.at(a).run_start > lo) continue;
        if (auto b = lit.pattern.match(a)) put(lit, std::move(*b), Annotation::at(t));
      }
      return;
    }
    std::set<GroundAtom> candidates;
    live_diagonal(p, [&](const Fact& f) { candidates.insert(f.atom); });
    for (const auto& a : placed_now) {
      if (a.predicate == p) candidates.insert(a);
    }
    for (const auto& a : candidates) {
      auto b = lit.pattern.match(a);
      if (!b) continue;
      bool all = true;
      for (Time u = lo; u <= t && all; ++u) all = present(a, u);
      if (all) put(lit, std::move(*b), Annotation::at(t));
    }
  }

  // ---- rule evaluation ----

  bool negation_holds(const NegLiteral& neg, const Binding& vals) {
    const Time t = *now;
    GroundAtom a{neg.predicate, {}};
    a.args.reserve(neg.args.size());
    for (const auto& term : neg.args) a.args.push_back(term.get(vals));

    Time lo = t1;
    const Snapshot* snap = nullptr;
    if (neg.window) {
      if (neg.window->kind == WindowKind::Time) {
        lo = window_start(t1, t, neg.window->size);
      } else {
        snap = &snapshot(neg.window->size);
        lo = snap->start;
      }
    }
    auto absent = [&](Time u) {
      if (snap) return !background.count(a) && !snap->present.count(AtomTime{a, u});
      return !present(a, u);
    };
    switch (neg.quantifier) {
      case Quantifier::None: return absent(t);
      case Quantifier::Box:
        for (Time u = lo; u <= t; ++u) {
          if (!absent(u)) return false;
        }
        return true;
      case Quantifier::Diamond:
        for (Time u = lo; u <= t; ++u) {
          if (absent(u)) return true;
        }
        return false;
      case Quantifier::At: {
        auto u = neg.time->get(vals).as_time();
        return u && lo <= *u && *u <= t && absent(*u);
      }
    }
    return false;
  }

  void finish(const CompiledRule& r, const Binding& vals, Annotation ann, std::vector<Derived>& out) {
    const Time t = *now;
    for (const auto& b : r.builtins) {
      if (!evaluate_comparison(b.op, b.lhs.get(vals), b.rhs.get(vals))) return;
    }
    if (!r.negs.empty()) {
      ann = intersect(ann, Annotation::at(t));
      for (const auto& neg : r.negs) {
        if (!negation_holds(neg, vals)) return;
      }
    }
    if (!ann.valid_at(t, arrivals)) return;
    ++telemetry.firings;
    Derived d;
    d.atom.predicate = r.head_predicate;
    d.atom.args.reserve(r.head_args.size());
    for (const auto& term : r.head_args) d.atom.args.push_back(term.get(vals));
    if (r.head_time) {
      auto u = r.head_time->get(vals).as_time();
      if (!u || *u < t1) return;
      d.at = *u;
    }
    d.annotation = ann;
    out.push_back(std::move(d));
  }

  void join(CompiledRule& r, const std::vector<Step>& plan, std::size_t step, Binding& vals, const Annotation& acc,
            std::vector<Derived>& out) {
    if (step == plan.size()) {
      finish(r, vals, acc, out);
      return;
    }
    const Step& s = plan[step];
    const LiteralStore& store = lits[r.lits[s.pos]].store;
    std::size_t lo = 0, hi = r.ends[s.pos];
    if (s.range == Range::Delta) lo = r.marks[s.pos];
    if (s.range == Range::Old) hi = r.marks[s.pos];
    if (lo >= hi) return;
    ++telemetry.grd_calls;

    auto visit = [&](Id id) {
      const LitEntry& e = store.entries()[id];
      if (!e.alive) return;
      Annotation next = intersect(acc, e.annotation);
      if (next.c > next.h || next.cc > next.hc) return;
      for (const auto& [ls, rs] : s.assign) vals[rs] = e.binding[ls];
      join(r, plan, step + 1, vals, next, out);
    };
    if (s.index < 0) {
      for (Id id = static_cast<Id>(lo); id < hi; ++id) visit(id);
      return;
    }
    Binding key;
    key.reserve(s.key_rule_slots.size());
    for (auto rs : s.key_rule_slots) key.push_back(vals[rs]);
    const auto* ids = store.probe(static_cast<std::size_t>(s.index), key);
    if (!ids) return;
    auto begin = std::lower_bound(ids->begin(), ids->end(), static_cast<Id>(lo));
    for (auto it = begin; it != ids->end() && *it < hi; ++it) visit(*it);
  }

  void evaluate(CompiledRule& r) {
    const Time t = *now;
    for (auto li : r.lits) {
      if (lits[li].shape == Shape::TimeBox) refresh_box(lits[li]);
    }
    std::vector<Derived> out;
    const bool has_neg = !r.negs.empty();
    if (r.lits.empty()) {
      if (!options.ssne || (r.first && (has_neg || t == t1))) {
        Binding vals(r.nvars);
        finish(r, vals, Annotation{t1, kInfinity}, out);
      }
    } else {
      for (std::size_t i = 0; i < r.lits.size(); ++i) {
        const LiteralStore& store = lits[r.lits[i]].store;
        r.ends[i] = store.entries().size();
        if (!options.ssne) {
          r.marks[i] = 0;
        } else if (r.first) {
          r.marks[i] = has_neg ? 0 : store.tick_start;
        }
      }
      Binding vals(r.nvars);
      for (std::size_t j = 0; j < r.lits.size(); ++j) {
        if (r.marks[j] < r.ends[j]) join(r, r.plans[j], 0, vals, Annotation{}, out);
      }
      r.marks = r.ends;
    }
    r.first = false;
    for (auto& d : out) derive(std::move(d));
  }

  void derive(Derived d) {
    const Time t = *now;
    if (!d.at) {
      add_fact(d.atom, false, 0, d.annotation);
      return;
    }
    const Time u = *d.at;
    if (u > t) {
      pending[u].push_back(std::move(d));
      return;
    }
    Annotation ann = d.annotation;
    ann.c = std::max(ann.c, u);
    add_fact(d.atom, true, u, ann);
  }

  // ---- one time point ----

  void step(Time t, std::span<const GroundAtom> incoming) {
    now = t;
    ++telemetry.ticks;
    placed_now.clear();
    arrived_now.clear();
    snapshots.clear();

    std::vector<GroundAtom> fresh;
    {
      std::unordered_set<GroundAtom, GroundAtomHash> seen;
      for (const auto& a : incoming) {
        if (seen.insert(a).second) fresh.push_back(a);
      }
    }
    const Count before = arrivals;
    const Count after = before + fresh.size();

    for (auto& lit : lits) lit.store.compact();
    compact_facts();
    if (options.fault != Fault::IgnoreExpiry) {
      for (auto& lit : lits) telemetry.expired += lit.store.expire(t, after);
      fact_expiry.expire(t, after, [&](Id id) { kill_fact(id); });
    }
    for (auto& lit : lits) lit.store.tick_start = lit.store.entries().size();

    arrivals = after;
    Count k = before;
    for (auto& a : fresh) {
      ++k;
      ensure_pred(a.predicate);
      DataInfo& info = data[a];
      if (info.occurrences.empty() || info.last + 1 != t) info.run_start = t;
      info.last = t;
      info.occurrences.emplace_back(t, k);
      history.push_back(HistoryEntry{a, t, k});
      ++version[a.predicate];
      for (auto li : lits_by_pred[a.predicate]) on_data(lits[li], a, t, k);
      arrived_now.push_back(std::move(a));
    }
    if (options.gc) collect_garbage();

    if (auto it = pending.find(t); it != pending.end()) {
      auto due = std::move(it->second);
      pending.erase(it);
      for (auto& d : due) {
        if (d.annotation.h < t || d.annotation.hc < arrivals) continue;
        Annotation ann = d.annotation;
        ann.c = t;
        add_fact(d.atom, true, t, ann);
      }
    }

    for (auto& lit : lits) tick_sources(lit);

    for (const auto& stratum : program.strata) {
      for (auto index : stratum) rules[index].first = true;
      for (;;) {
        const auto before_facts = fact_counter;
        for (auto index : stratum) evaluate(rules[index]);
        if (fact_counter == before_facts) break;
      }
    }

    std::uint64_t size = facts_live;
    for (const auto& lit : lits) size += lit.store.live();
    telemetry.database_size = size;
    telemetry.data_size = history.size();
  }

  void collect_garbage() {
    const Time t = *now;
    const std::uint64_t time_reach = program.max_time_window();
    const std::uint64_t tuple_reach = program.max_tuple_window();
    while (!history.empty()) {
      const auto& h = history.front();
      if (t - h.u <= time_reach || arrivals - h.seq < tuple_reach) break;
      auto it = data.find(h.atom);
      it->second.occurrences.pop_front();
      if (it->second.occurrences.empty()) data.erase(it);
      history.pop_front();
    }
  }

  std::string format(const Annotation& a) const {
    auto bound = [](std::uint64_t v) { return v == kInfinity ? std::string("inf") : std::to_string(v); };
    std::string s = "[" + bound(a.c) + "," + bound(a.h) + "]";
    if (a.has_count()) s += "#[" + bound(a.cc) + "," + bound(a.hc) + "]";
    return s;
  }
};

Engine::Engine(const Program& program, Time start, Background background, Options options)
    : state_(std::make_unique<State>(program, start, std::move(background), options)) {}

Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

void Engine::tick(Time t, std::span<const GroundAtom> arrivals) {
  State& s = *state_;
  if (s.now && t <= *s.now) {
    throw ContractViolation("tick " + std::to_string(t) + " does not follow " + std::to_string(*s.now));
  }
  if (t < s.t1) throw ContractViolation("tick " + std::to_string(t) + " precedes the timeline start");
  for (const auto& a : arrivals) {
    if (s.program.is_intensional(a.predicate)) {
      throw ContractViolation("derived predicate '" + s.program.vocabulary->predicate_info(a.predicate).name +
                              "' on the input stream");
    }
  }
  for (Time u = s.now ? *s.now + 1 : s.t1; u < t; ++u) s.step(u, {});
  s.step(t, arrivals);
}

std::optional<Time> Engine::now() const { return state_->now; }
Time Engine::start() const { return state_->t1; }

std::vector<GroundAtom> Engine::output() const {
  const State& s = *state_;
  std::vector<GroundAtom> out;
  out.reserve(s.diag_count.size() + s.placed_now.size() + s.background_output.size());
  for (const auto& [a, n] : s.diag_count) {
    if (!s.background.count(a)) out.push_back(a);
  }
  for (const auto& a : s.placed_now) {
    if (!s.diag_count.count(a) && !s.background.count(a)) out.push_back(a);
  }
  out.insert(out.end(), s.background_output.begin(), s.background_output.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t Engine::output_size() const {
  const State& s = *state_;
  std::size_t n = s.diag_count.size() + s.background_output.size();
  for (const auto& a : s.placed_now) n += s.diag_count.count(a) ? 0 : 1;
  for (const auto& a : s.background_output) {
    if (s.diag_count.count(a) || s.placed_now.count(a)) --n;
  }
  return n;
}

bool Engine::holds_now(const GroundAtom& atom) const {
  const State& s = *state_;
  if (s.background.count(atom)) return s.program.is_intensional(atom.predicate);
  return s.diag_count.count(atom) || s.placed_now.count(atom);
}

const Telemetry& Engine::telemetry() const { return state_->telemetry; }

std::size_t Engine::audit_expired() const {
  const State& s = *state_;
  if (!s.now) return 0;
  std::size_t bad = 0;
  for (const auto& f : s.facts) {
    if (f.alive && f.annotation.expired(*s.now, s.arrivals)) ++bad;
  }
  for (const auto& lit : s.lits) {
    for (const auto& e : lit.store.entries()) {
      if (e.alive && e.annotation.expired(*s.now, s.arrivals)) ++bad;
    }
  }
  return bad;
}

std::string Engine::dump() const {
  const State& s = *state_;
  const Vocabulary& vocab = *s.program.vocabulary;
  std::ostringstream os;
  os << "now " << (s.now ? std::to_string(*s.now) : "-") << " arrivals " << s.arrivals << "\n";
  std::vector<std::string> lines;
  for (const auto& f : s.facts) {
    if (!f.alive) continue;
    std::string line = to_string(f.atom, vocab);
    if (f.placed) line = "@" + std::to_string(f.u) + " " + line;
    lines.push_back(line + " " + s.format(f.annotation));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) os << "fact " << l << "\n";
  for (std::size_t i = 0; i < s.lits.size(); ++i) {
    lines.clear();
    for (const auto& e : s.lits[i].store.entries()) {
      if (!e.alive) continue;
      std::string line;
      for (const auto& v : e.binding) line += vocab.to_string(v) + " ";
      lines.push_back(line + s.format(e.annotation));
    }
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) os << "lit" << i << " " << l << "\n";
  }
  return os.str();
}

Stream evaluate(const Program& program, const Stream& data, const Background& background, const Options& options,
                Telemetry* telemetry) {
  Engine engine(program, data.timeline().start, background, options);
  Stream out(data.timeline());
  std::vector<GroundAtom> arrivals;
  for (Time t = data.timeline().start;; ++t) {
    arrivals.clear();
    for (const auto& e : data.at(t)) arrivals.push_back(e.atom);
    engine.tick(t, arrivals);
    for (auto& a : engine.output()) out.add(t, std::move(a), 0);
    if (t == data.timeline().end) break;
  }
  if (telemetry) *telemetry = engine.telemetry();
  return out;
}

}  // namespace lars::engine
