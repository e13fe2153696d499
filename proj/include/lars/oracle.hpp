#pragma once

// Direct, non-incremental evaluation of plain LARS: entailment, answer
// streams and output streams. Windows are recomputed from scratch on every
// use; nothing is cached between time points.

#include <functional>
#include <unordered_set>
#include <vector>

#include "lars/model.hpp"
#include "lars/program.hpp"

namespace lars::oracle {

using Background = lars::Background;

// M = <S, W, B>. Tuple windows are taken over the input atoms of S only,
// i.e. the atoms whose predicate satisfies `is_input`.
struct Structure {
  const Stream& stream;
  const Background& background;
  std::function<bool(PredicateId)> is_input = [](PredicateId) { return true; };
};

// M, t ⊩ φ for a ground extended atom (with or without negation).
bool holds(const Structure& m, Time t, const ExtendedAtom& formula);
bool holds(const BuiltinAtom& ground);

enum class Grounding {
  // Substitutions come from matching positive atoms against the structure.
  Matching,
  // Every variable ranges over constants of data, background and program
  // plus the time points of the timeline; each instance is checked with `holds`.
  Universe,
};

struct Options {
  Grounding grounding = Grounding::Matching;
};

// Answer stream of `program` for `data` at `t` (on the prefix [t1, t]),
// computed stratum by stratum as a least fixpoint.
Stream answer_stream(const Program& program, const Stream& data, const Background& background, Time t,
                     const Options& options = {});

// Derived atoms holding at t, sorted.
std::vector<GroundAtom> output(const Program& program, const Stream& data, const Background& background, Time t,
                               const Options& options = {});

// Output at every time point of the data timeline, each on its own prefix.
Stream output_stream_naive(const Program& program, const Stream& data, const Background& background,
                           const Options& options = {});

// Whether `candidate` satisfies at t every ground rule whose body holds in
// `reference` at t (the reduct of the program relative to `reference`).
bool is_model_of_reduct(const Program& program, const Stream& reference, const Stream& candidate,
                        const Background& background, Time t);

}  // namespace lars::oracle
