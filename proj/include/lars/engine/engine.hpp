#pragma once

// Incremental evaluation of stratified plain LARS programs. Each tick
// ingests the arrivals of one time point, drops annotations whose horizon
// has passed and runs a semi-naive fixpoint per stratum over annotated
// groundings.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lars/engine/annotation.hpp"
#include "lars/model.hpp"
#include "lars/program.hpp"

namespace lars::engine {

// Deliberate defects for mutation tests of the checking harness.
enum class Fault : std::uint8_t { None, ExtendHorizon, IgnoreExpiry };

struct Options {
  // Fire only substitutions with at least one fresh body annotation.
  bool ssne = true;
  // Drop data atoms that no window can reach any more.
  bool gc = false;
  Fault fault = Fault::None;
};

struct Telemetry {
  std::uint64_t ticks = 0;
  std::uint64_t firings = 0;
  std::uint64_t derivations = 0;  // firings that added a new annotated atom
  std::uint64_t grd_calls = 0;
  std::uint64_t expired = 0;
  std::uint64_t database_size = 0;
  std::uint64_t data_size = 0;
};

class Engine {
 public:
  // `start` is the first time point of the timeline.
  Engine(const Program& program, Time start, Background background = {}, Options options = {});
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  // Evaluates time point t with the given arrivals (in arrival order).
  // Skipped time points between the previous tick and t are evaluated
  // without arrivals. Throws ContractViolation on a tick regression or a
  // derived predicate among the arrivals.
  void tick(Time t, std::span<const GroundAtom> arrivals = {});

  // The time point evaluated last; no value before the first tick.
  std::optional<Time> now() const;
  Time start() const;

  // Derived atoms holding at the current time point, sorted.
  std::vector<GroundAtom> output() const;
  std::size_t output_size() const;
  bool holds_now(const GroundAtom& atom) const;

  const Telemetry& telemetry() const;

  // Number of stored annotations already past their horizon (time or
  // count) at the current tick; zero unless expiration is broken.
  std::size_t audit_expired() const;

  // Canonical text of the database, for determinism checks.
  std::string dump() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

// Runs the engine over every time point of the data timeline.
Stream evaluate(const Program& program, const Stream& data, const Background& background = {},
                const Options& options = {}, Telemetry* telemetry = nullptr);

}  // namespace lars::engine
