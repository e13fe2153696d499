#include "lars/model.hpp"

#include <algorithm>
#include <sstream>

#include "lars/error.hpp"

namespace lars {

Symbol SymbolTable::intern(std::string_view name) {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  auto id = static_cast<Symbol>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<Symbol> SymbolTable::find(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  return std::nullopt;
}

PredicateId Vocabulary::predicate(std::string_view name, std::size_t arity) {
  if (auto found = find_predicate(name, arity)) return *found;
  auto id = static_cast<PredicateId>(predicates_.size());
  predicates_.push_back(Predicate{std::string(name), arity});
  predicate_index_.emplace(std::make_pair(std::string(name), arity), id);
  return id;
}

std::optional<PredicateId> Vocabulary::find_predicate(std::string_view name, std::size_t arity) const {
  auto it = predicate_index_.find(std::make_pair(std::string(name), arity));
  if (it == predicate_index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::to_string(const Value& v) const {
  if (v.is_integer()) return std::to_string(v.as_integer());
  return symbols_.name(v.as_symbol());
}

std::string to_string(const GroundAtom& atom, const Vocabulary& vocab) {
  std::string out = vocab.predicate_info(atom.predicate).name;
  if (!atom.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (i) out += ',';
      out += vocab.to_string(atom.args[i]);
    }
    out += ')';
  }
  return out;
}

std::string to_string(const Term& term, const Vocabulary& vocab) {
  if (term.is_variable()) return vocab.symbols().name(term.variable);
  return vocab.to_string(term.value);
}

std::string to_string(const Atom& atom, const Vocabulary& vocab) {
  std::string out = vocab.predicate_info(atom.predicate).name;
  if (!atom.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (i) out += ',';
      out += to_string(atom.args[i], vocab);
    }
    out += ')';
  }
  return out;
}

bool Atom::is_ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

std::optional<GroundAtom> Atom::to_ground() const {
  GroundAtom g{predicate, {}};
  g.args.reserve(args.size());
  for (const auto& t : args) {
    if (t.is_variable()) return std::nullopt;
    g.args.push_back(t.value);
  }
  return g;
}

Atom Atom::from_ground(const GroundAtom& g) {
  Atom a{g.predicate, {}};
  a.args.reserve(g.args.size());
  for (const auto& v : g.args) a.args.push_back(Term::constant(v));
  return a;
}

std::optional<Value> Substitution::lookup(Symbol variable) const {
  if (auto it = map_.find(variable); it != map_.end()) return it->second;
  return std::nullopt;
}

Term apply_substitution(const Term& term, const Substitution& sigma) {
  if (!term.is_variable()) return term;
  if (auto v = sigma.lookup(term.variable)) return Term::constant(*v);
  return term;
}

Atom apply_substitution(const Atom& atom, const Substitution& sigma) {
  Atom out{atom.predicate, {}};
  out.args.reserve(atom.args.size());
  for (const auto& t : atom.args) out.args.push_back(apply_substitution(t, sigma));
  return out;
}

Timeline::Timeline(Time s, Time e) : start(s), end(e) {
  if (s > e) {
    throw ValidationError("timeline start " + std::to_string(s) + " exceeds end " + std::to_string(e));
  }
}

bool Stream::add(Time t, GroundAtom atom, std::optional<std::uint64_t> seq) {
  if (!timeline_.contains(t)) {
    throw DomainError("time point " + std::to_string(t) + " outside timeline [" +
                      std::to_string(timeline_.start) + "," + std::to_string(timeline_.end) + "]");
  }
  auto& slot = buckets_[t];
  if (!slot) {
    slot = std::make_shared<Bucket>();
  } else if (slot->members.count(atom)) {
    return false;
  } else if (slot.use_count() > 1) {
    slot = std::make_shared<Bucket>(*slot);
  }
  // The bucket is uniquely owned here and was allocated non-const.
  auto& bucket = const_cast<Bucket&>(*slot);
  std::uint64_t number = seq ? *seq : last_seq_ + 1;
  last_seq_ = std::max(last_seq_, number);
  bucket.members.insert(atom);
  bucket.entries.push_back(StreamEntry{std::move(atom), number});
  return true;
}

bool Stream::erase(Time t, const GroundAtom& atom) {
  auto it = buckets_.find(t);
  if (it == buckets_.end() || !it->second->members.count(atom)) return false;
  auto copy = std::make_shared<Bucket>(*it->second);
  copy->members.erase(atom);
  std::erase_if(copy->entries, [&](const StreamEntry& e) { return e.atom == atom; });
  if (copy->entries.empty()) {
    buckets_.erase(it);
  } else {
    it->second = std::move(copy);
  }
  return true;
}

std::span<const StreamEntry> Stream::at(Time t) const {
  auto it = buckets_.find(t);
  if (it == buckets_.end()) return {};
  return it->second->entries;
}

bool Stream::contains(Time t, const GroundAtom& atom) const {
  auto it = buckets_.find(t);
  return it != buckets_.end() && it->second->members.count(atom) != 0;
}

std::size_t Stream::tuple_size() const {
  std::size_t n = 0;
  for (const auto& [t, bucket] : buckets_) n += bucket->entries.size();
  return n;
}

Stream Stream::restrict(Timeline window) const {
  Stream out(window);
  out.last_seq_ = last_seq_;
  auto lo = buckets_.lower_bound(window.start);
  auto hi = buckets_.upper_bound(window.end);
  out.buckets_.insert(lo, hi);
  return out;
}

Stream Stream::filter(const std::function<bool(PredicateId)>& keep) const {
  Stream out(timeline_);
  out.last_seq_ = last_seq_;
  for (const auto& [t, bucket] : buckets_) {
    bool all = std::all_of(bucket->entries.begin(), bucket->entries.end(),
                           [&](const StreamEntry& e) { return keep(e.atom.predicate); });
    if (all) {
      out.buckets_.emplace(t, bucket);
      continue;
    }
    for (const auto& e : bucket->entries) {
      if (keep(e.atom.predicate)) out.add(t, e.atom, e.seq);
    }
  }
  out.last_seq_ = last_seq_;
  return out;
}

bool Stream::is_substream_of(const Stream& other) const {
  if (timeline_.start < other.timeline_.start || timeline_.end > other.timeline_.end) return false;
  for (const auto& [t, bucket] : buckets_) {
    if (!timeline_.contains(t)) return false;
    for (const auto& e : bucket->entries) {
      if (!other.contains(t, e.atom)) return false;
    }
  }
  return true;
}

bool operator==(const Stream& a, const Stream& b) {
  if (a.timeline_ != b.timeline_) return false;
  if (a.buckets_.size() != b.buckets_.size()) return false;
  for (auto ia = a.buckets_.begin(), ib = b.buckets_.begin(); ia != a.buckets_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second->members != ib->second->members) return false;
  }
  return true;
}

WindowSpec WindowSpec::tuple(std::uint64_t n) {
  if (n == 0) throw ValidationError("tuple window size must be at least 1");
  return WindowSpec{WindowKind::Tuple, n};
}

namespace {

void require_in_timeline(const Stream& s, Time t) {
  if (!s.timeline().contains(t)) {
    throw DomainError("time point " + std::to_string(t) + " outside timeline [" +
                      std::to_string(s.timeline().start) + "," + std::to_string(s.timeline().end) + "]");
  }
}

}  // namespace

Stream time_window(const Stream& s, Time t, std::uint64_t n) {
  require_in_timeline(s, t);
  Time lo = t >= n ? std::max(s.timeline().start, t - n) : s.timeline().start;
  return s.restrict(Timeline(lo, t));
}

Stream tuple_window(const Stream& s, Time t, std::size_t n) {
  if (n == 0) throw ValidationError("tuple window size must be at least 1");
  require_in_timeline(s, t);
  const Time t1 = s.timeline().start;

  // Walk backwards from t until n atoms are covered.
  std::size_t seen = 0;
  auto begin = s.buckets_.lower_bound(t1);
  auto it = s.buckets_.upper_bound(t);
  while (it != begin && seen < n) {
    --it;
    seen += it->second->entries.size();
  }
  if (seen < n) return s.restrict(Timeline(t1, t));

  const Time boundary = it->first;
  Stream out = s.restrict(Timeline(boundary, t));
  if (seen == n) return out;

  // Keep only the latest arrivals at the boundary point.
  const auto& entries = it->second->entries;
  std::size_t keep = entries.size() - (seen - n);
  auto trimmed = std::make_shared<Stream::Bucket>();
  for (std::size_t i = entries.size() - keep; i < entries.size(); ++i) {
    trimmed->members.insert(entries[i].atom);
    trimmed->entries.push_back(entries[i]);
  }
  out.buckets_[boundary] = std::move(trimmed);
  return out;
}

Stream apply_window(const Stream& s, Time t, const WindowSpec& w) {
  return w.kind == WindowKind::Time ? time_window(s, t, w.size) : tuple_window(s, t, w.size);
}

std::size_t tuple_size(const Stream& s) { return s.tuple_size(); }

}  // namespace lars
