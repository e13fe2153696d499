#pragma once

// Annotated formulae: a ground formula together with the interval [c,h]
// during which it is guaranteed to hold, and for tuple windows the
// arrival-count interval [c#,h#].

#include <algorithm>
#include <cstdint>
#include <vector>

#include "lars/model.hpp"
#include "lars/program.hpp"

namespace lars::engine {

using Count = std::uint64_t;

struct Annotation {
  Time c = 0;
  Time h = kInfinity;
  Count cc = 0;
  Count hc = kInfinity;

  static Annotation at(Time t) { return Annotation{t, t}; }
  static Annotation counted(Time t, Count k) { return Annotation{t, t, k, k}; }

  bool has_count() const { return cc != 0 || hc != kInfinity; }
  bool valid_at(Time t, Count arrivals) const { return c <= t && t <= h && arrivals <= hc; }
  bool expired(Time t, Count arrivals) const { return h < t || hc < arrivals; }

  // Conjunction of two guarantees.
  friend Annotation intersect(const Annotation& a, const Annotation& b) {
    return Annotation{std::max(a.c, b.c), std::min(a.h, b.h), std::max(a.cc, b.cc), std::min(a.hc, b.hc)};
  }

  friend bool operator==(const Annotation&, const Annotation&) = default;
  friend auto operator<=>(const Annotation&, const Annotation&) = default;
};

struct AnnotatedFormula {
  ExtendedAtom formula;  // ground
  Substitution sigma;
  Annotation annotation;

  friend bool operator==(const AnnotatedFormula&, const AnnotatedFormula&) = default;
};

// A plain set of annotated ground atoms, e.g. the annotated data stream.
class Database {
 public:
  struct Entry {
    GroundAtom atom;
    Annotation annotation;
  };

  void add(GroundAtom atom, Annotation annotation) { entries_.push_back(Entry{std::move(atom), annotation}); }
  // A data atom arriving at t as the k-th atom overall: a_[t,t] with [k#,k#].
  void add_arrival(GroundAtom atom, Time t, Count k) { add(std::move(atom), Annotation::counted(t, k)); }

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// Annotated groundings of `alpha` due to `db` for the timeline [tb, te],
// following the case analysis over atoms, windows, ◇, □ and @. Only the
// groundings of `alpha` itself are returned, not those of its subformulae.
std::vector<AnnotatedFormula> grd(const ExtendedAtom& alpha, const Database& db, Time tb, Time te);

}  // namespace lars::engine
