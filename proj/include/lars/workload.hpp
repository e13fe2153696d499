#pragma once

// Synthetic inputs: random stratified programs for differential testing
// and the stream shapes used by the benchmark harness.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "lars/engine/engine.hpp"
#include "lars/model.hpp"
#include "lars/program.hpp"

namespace lars::workload {

struct Instance {
  std::string program_text;
  Program program;
  Stream stream;
  Background background;
};

// A random stratified program (at most 4 rules, 3 body literals, window
// sizes up to 4, both window kinds, ◇/□/@, optional negation) over a random
// stream (timeline of at most 12 points, at most 20 atoms, constants 0..3).
Instance fuzz_instance(std::uint64_t seed);

enum class Scenario { Diamond, Box, Join, Multirule, Cooling };

std::optional<Scenario> parse_scenario(std::string_view name);
const char* to_string(Scenario scenario);

// The bundled cooling program with window size `n`.
std::string cooling_program(std::uint64_t n);

// Seeded temperature readings alternating between hot, warm and freezing
// phases, `per_tick` readings per time point over [0, ticks-1].
Stream cooling_stream(Vocabulary& vocab, std::uint64_t ticks, std::uint64_t per_tick, std::uint64_t seed);

Instance bench_instance(Scenario scenario, std::uint64_t window, std::uint64_t rate, std::uint64_t ticks,
                        std::uint64_t seed);

enum class EngineKind { Incremental, Naive };

struct BenchResult {
  double total_s = 0;
  double per_atom_us = 0;
  std::uint64_t atoms = 0;
  std::uint64_t firings = 0;
  std::uint64_t output_atoms = 0;  // sum of per-tick output sizes
};

// Reasoning time only: stream generation and output printing are excluded.
BenchResult run_bench(const Instance& instance, EngineKind kind, const engine::Options& options = {});

}  // namespace lars::workload
