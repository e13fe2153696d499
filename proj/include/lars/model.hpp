#pragma once

// Core value types: interned symbols, terms, atoms, timelines, streams and
// the two sliding window functions.

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lars {

using Symbol = std::uint32_t;
using PredicateId = std::uint32_t;
using Time = std::uint64_t;

inline constexpr Time kInfinity = std::numeric_limits<Time>::max();

// Saturating addition so that windows anchored near the top of the range
// never wrap around.
constexpr Time saturating_add(Time a, Time b) {
  return a > kInfinity - b ? kInfinity : a + b;
}

// Constant: either an interned symbol or a signed 64-bit integer.
class Value {
 public:
  enum class Kind : std::uint8_t { Symbol, Integer };

  constexpr Value() = default;
  static constexpr Value symbol(Symbol s) { return Value(Kind::Symbol, s); }
  static constexpr Value integer(std::int64_t i) { return Value(Kind::Integer, i); }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_integer() const { return kind_ == Kind::Integer; }
  constexpr bool is_symbol() const { return kind_ == Kind::Symbol; }
  constexpr std::int64_t as_integer() const { return data_; }
  constexpr Symbol as_symbol() const { return static_cast<Symbol>(data_); }

  // Time points are non-negative integers.
  std::optional<Time> as_time() const {
    if (!is_integer() || data_ < 0) return std::nullopt;
    return static_cast<Time>(data_);
  }

  friend constexpr bool operator==(const Value&, const Value&) = default;
  friend constexpr auto operator<=>(const Value&, const Value&) = default;

  std::size_t hash() const {
    return std::hash<std::int64_t>{}(data_) * 31 + static_cast<std::size_t>(kind_);
  }

 private:
  constexpr Value(Kind kind, std::int64_t data) : kind_(kind), data_(data) {}

  Kind kind_ = Kind::Integer;
  std::int64_t data_ = 0;
};

struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash(); }
};

class SymbolTable {
 public:
  Symbol intern(std::string_view name);
  std::optional<Symbol> find(std::string_view name) const;
  const std::string& name(Symbol s) const { return names_.at(s); }
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, Symbol> index_;
  std::vector<std::string> names_;
};

struct Predicate {
  std::string name;
  std::size_t arity = 0;
};

// Shared naming context for programs, streams and background data.
class Vocabulary {
 public:
  SymbolTable& symbols() { return symbols_; }
  const SymbolTable& symbols() const { return symbols_; }

  PredicateId predicate(std::string_view name, std::size_t arity);
  std::optional<PredicateId> find_predicate(std::string_view name, std::size_t arity) const;
  const Predicate& predicate_info(PredicateId id) const { return predicates_.at(id); }
  std::size_t predicate_count() const { return predicates_.size(); }

  Value symbol_value(std::string_view name) { return Value::symbol(symbols_.intern(name)); }

  std::string to_string(const Value& v) const;

 private:
  SymbolTable symbols_;
  std::map<std::pair<std::string, std::size_t>, PredicateId, std::less<>> predicate_index_;
  std::vector<Predicate> predicates_;
};

struct GroundAtom {
  PredicateId predicate = 0;
  std::vector<Value> args;

  friend bool operator==(const GroundAtom&, const GroundAtom&) = default;
  friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
};

struct GroundAtomHash {
  std::size_t operator()(const GroundAtom& a) const {
    std::size_t h = a.predicate * 0x9e3779b97f4a7c15ULL;
    for (const auto& v : a.args) h = (h ^ v.hash()) * 0x100000001b3ULL;
    return h;
  }
};

std::string to_string(const GroundAtom& atom, const Vocabulary& vocab);

// Static atoms that hold at every time point.
using Background = std::unordered_set<GroundAtom, GroundAtomHash>;

// A term of a non-ground atom.
struct Term {
  enum class Kind : std::uint8_t { Constant, Variable };

  Kind kind = Kind::Constant;
  Value value;          // Constant
  Symbol variable = 0;  // Variable (interned name)

  static Term constant(Value v) { return Term{Kind::Constant, v, 0}; }
  static Term var(Symbol name) { return Term{Kind::Variable, Value{}, name}; }

  bool is_variable() const { return kind == Kind::Variable; }

  friend bool operator==(const Term&, const Term&) = default;
};

struct Atom {
  PredicateId predicate = 0;
  std::vector<Term> args;

  bool is_ground() const;
  std::optional<GroundAtom> to_ground() const;
  static Atom from_ground(const GroundAtom& g);

  friend bool operator==(const Atom&, const Atom&) = default;
};

std::string to_string(const Term& term, const Vocabulary& vocab);
std::string to_string(const Atom& atom, const Vocabulary& vocab);

// Mapping from variables to constants; time variables map to integers.
class Substitution {
 public:
  Substitution() = default;
  Substitution(std::initializer_list<std::pair<const Symbol, Value>> init) : map_(init) {}

  void bind(Symbol variable, Value value) { map_[variable] = value; }
  std::optional<Value> lookup(Symbol variable) const;
  bool contains(Symbol variable) const { return map_.count(variable) != 0; }
  std::size_t size() const { return map_.size(); }
  const std::map<Symbol, Value>& bindings() const { return map_; }

  friend bool operator==(const Substitution&, const Substitution&) = default;
  friend auto operator<=>(const Substitution&, const Substitution&) = default;

 private:
  std::map<Symbol, Value> map_;
};

Term apply_substitution(const Term& term, const Substitution& sigma);
Atom apply_substitution(const Atom& atom, const Substitution& sigma);

// Closed interval of time points.
struct Timeline {
  Time start = 0;
  Time end = 0;

  Timeline() = default;
  Timeline(Time s, Time e);

  bool contains(Time t) const { return start <= t && t <= end; }
  std::size_t length() const { return static_cast<std::size_t>(end - start) + 1; }

  friend bool operator==(const Timeline&, const Timeline&) = default;
};

struct StreamEntry {
  GroundAtom atom;
  std::uint64_t seq = 0;  // global arrival number, 0 for derived atoms
};

// A timeline plus an evaluation function. Atoms at a time point form a set
// kept in arrival order. Buckets are shared copy-on-write, so windows and
// prefixes are cheap to take.
class Stream {
 public:
  struct Bucket {
    std::vector<StreamEntry> entries;
    std::unordered_set<GroundAtom, GroundAtomHash> members;
  };
  using Buckets = std::map<Time, std::shared_ptr<const Bucket>>;

  Stream() = default;
  explicit Stream(Timeline timeline) : timeline_(timeline) {}

  const Timeline& timeline() const { return timeline_; }

  // Inserts `atom` at `t`; re-adding a present atom is a no-op. Without an
  // explicit sequence number the next arrival number is assigned.
  bool add(Time t, GroundAtom atom, std::optional<std::uint64_t> seq = std::nullopt);

  // Removes `atom` from `t`; returns false if it was absent.
  bool erase(Time t, const GroundAtom& atom);

  std::span<const StreamEntry> at(Time t) const;
  bool contains(Time t, const GroundAtom& atom) const;

  // Time points with at least one atom, ascending.
  const Buckets& buckets() const { return buckets_; }

  std::size_t tuple_size() const;
  std::uint64_t last_seq() const { return last_seq_; }
  bool empty() const { return buckets_.empty(); }

  // The restriction (timeline ∩ window, v|window); the result timeline is `window`.
  Stream restrict(Timeline window) const;

  // Keeps only atoms whose predicate satisfies `keep`.
  Stream filter(const std::function<bool(PredicateId)>& keep) const;

  bool is_substream_of(const Stream& other) const;

  friend bool operator==(const Stream& a, const Stream& b);

 private:
  friend Stream tuple_window(const Stream& s, Time t, std::size_t n);

  Timeline timeline_;
  Buckets buckets_;
  std::uint64_t last_seq_ = 0;
};

enum class WindowKind : std::uint8_t { Time, Tuple };

struct WindowSpec {
  WindowKind kind = WindowKind::Time;
  std::uint64_t size = 0;

  // Time windows accept any size; tuple windows need at least one atom.
  static WindowSpec time(std::uint64_t n) { return WindowSpec{WindowKind::Time, n}; }
  static WindowSpec tuple(std::uint64_t n);

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

// Sliding time-based window: timeline [max(t1, t-n), t].
Stream time_window(const Stream& s, Time t, std::uint64_t n);

// Sliding tuple-based window over the last n atoms. Ties at the earliest
// time point are resolved by keeping the latest arrivals.
Stream tuple_window(const Stream& s, Time t, std::size_t n);

Stream apply_window(const Stream& s, Time t, const WindowSpec& w);

// Number of (atom, time) pairs.
std::size_t tuple_size(const Stream& s);

}  // namespace lars
