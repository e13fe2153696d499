#include "lars/workload.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "lars/error.hpp"
#include "lars/oracle.hpp"
#include "lars/parser.hpp"

namespace lars::workload {

namespace {

using Rng = std::mt19937_64;

std::uint64_t pick(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

struct PredSpec {
  std::string name;
  std::size_t arity;
};

std::string atom_text(const PredSpec& p, const std::vector<std::string>& args) {
  std::string s = p.name;
  if (!args.empty()) {
    s += '(';
    for (std::size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + args[i];
    s += ')';
  }
  return s;
}

class ProgramGenerator {
 public:
  explicit ProgramGenerator(Rng& rng) : rng_(rng) {}

  std::string generate(Time t1, std::vector<PredSpec>& ext, std::vector<PredSpec>& idb) {
    t1_ = t1;
    const std::size_t n_ext = pick(rng_, 2, 3);
    for (std::size_t i = 0; i < n_ext; ++i) ext.push_back({"e" + std::to_string(i), pick(rng_, 0, 2)});
    const std::size_t n_rules = pick(rng_, 1, 4);
    std::vector<std::size_t> heads;
    for (std::size_t i = 0; i < n_rules; ++i) heads.push_back(pick(rng_, 0, 2));
    std::sort(heads.begin(), heads.end());
    // Intensional predicates are renumbered densely in head order.
    std::vector<std::size_t> ids;
    for (auto h : heads) {
      if (ids.empty() || ids.back() != h) ids.push_back(h);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) idb.push_back({"i" + std::to_string(i), pick(rng_, 0, 2)});
    ext_ = &ext;
    idb_ = &idb;

    std::string text;
    for (auto h : heads) {
      const std::size_t level = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), h) - ids.begin());
      text += rule(level) + "\n";
    }
    return text;
  }

 private:
  std::string constant() { return std::to_string(pick(rng_, 0, 3)); }
  std::string time_constant() { return std::to_string(t1_ + pick(rng_, 0, 11)); }

  std::string rule(std::size_t level) {
    std::vector<std::string> data_vars, time_vars, body;
    const std::size_t n_lits = pick(rng_, 1, 3);
    std::size_t n_neg = 0;
    for (std::size_t i = 1; i < n_lits; ++i) n_neg += chance(rng_, 0.3) ? 1 : 0;
    const std::size_t n_pos = n_lits - n_neg;

    for (std::size_t i = 0; i < n_pos; ++i) body.push_back(literal(level, true, data_vars, time_vars));
    for (std::size_t i = 0; i < n_neg; ++i) body.push_back(literal(level, false, data_vars, time_vars));
    if (chance(rng_, 0.2)) {
      std::vector<std::string> pool = data_vars;
      pool.insert(pool.end(), time_vars.begin(), time_vars.end());
      if (!pool.empty()) {
        static const char* ops[] = {"<", "<=", ">", ">=", "=", "!="};
        body.push_back(pool[pick(rng_, 0, pool.size() - 1)] + " " + ops[pick(rng_, 0, 5)] + " " + constant());
      }
    }

    const PredSpec& head = (*idb_)[level];
    std::vector<std::string> args;
    for (std::size_t i = 0; i < head.arity; ++i) {
      if (!data_vars.empty() && chance(rng_, 0.75)) {
        args.push_back(data_vars[pick(rng_, 0, data_vars.size() - 1)]);
      } else if (!time_vars.empty() && chance(rng_, 0.3)) {
        args.push_back(time_vars[pick(rng_, 0, time_vars.size() - 1)]);
      } else {
        args.push_back(constant());
      }
    }
    std::string text;
    if (chance(rng_, 0.3)) {
      if (!time_vars.empty() && chance(rng_, 0.8)) {
        text += "@[" + time_vars[pick(rng_, 0, time_vars.size() - 1)] + "] ";
      } else {
        text += "@[" + std::to_string(t1_ + pick(rng_, 0, 13)) + "] ";
      }
    }
    text += atom_text(head, args) + " :- ";
    for (std::size_t i = 0; i < body.size(); ++i) text += (i ? ", " : "") + body[i];
    return text + ".";
  }

  std::string literal(std::size_t level, bool positive, std::vector<std::string>& data_vars,
                      std::vector<std::string>& time_vars) {
    // Positive literals may use intensional predicates up to the head's
    // level, negative ones only strictly below it.
    const std::size_t idb_limit = positive ? level + 1 : level;
    bool intensional = idb_limit > 0 && chance(rng_, 0.4);
    const PredSpec& pred = intensional ? (*idb_)[pick(rng_, 0, idb_limit - 1)] : (*ext_)[pick(rng_, 0, ext_->size() - 1)];

    enum Form { Plain, BareAt, TimeDia, TimeBox, TimeAt, TupleDia, TupleBox, TupleAt };
    static const Form forms[] = {Plain, BareAt, TimeDia, TimeDia, TimeDia, TimeBox, TimeBox, TimeAt,
                                 TimeAt, TupleDia, TupleDia, TupleBox, TupleAt};
    Form form = forms[pick(rng_, 0, std::size(forms) - 1)];
    if (intensional && form >= TupleDia) form = static_cast<Form>(form - 3);

    std::vector<std::string> args;
    for (std::size_t i = 0; i < pred.arity; ++i) {
      if (positive) {
        if (chance(rng_, 0.7)) {
          static const char* names[] = {"X", "Y", "Z"};
          std::string v = names[pick(rng_, 0, 2)];
          args.push_back(v);
          if (std::find(data_vars.begin(), data_vars.end(), v) == data_vars.end()) data_vars.push_back(v);
        } else {
          args.push_back(constant());
        }
      } else if (!data_vars.empty() && chance(rng_, 0.7)) {
        args.push_back(data_vars[pick(rng_, 0, data_vars.size() - 1)]);
      } else {
        args.push_back(constant());
      }
    }

    std::string time;
    if (form == BareAt || form == TimeAt || form == TupleAt) {
      if (positive && chance(rng_, 0.75)) {
        std::string v = chance(rng_, 0.7) ? "T" : "U";
        time = v;
        if (std::find(time_vars.begin(), time_vars.end(), v) == time_vars.end()) time_vars.push_back(v);
      } else if (!positive && !time_vars.empty() && chance(rng_, 0.7)) {
        time = time_vars[pick(rng_, 0, time_vars.size() - 1)];
      } else {
        time = time_constant();
      }
    }

    std::string window;
    if (form >= TimeDia && form <= TimeAt) window = "[" + std::to_string(pick(rng_, 0, 4)) + " t] ";
    if (form >= TupleDia) window = "[" + std::to_string(pick(rng_, 1, 4)) + " #] ";
    std::string quant;
    switch (form) {
      case Plain: break;
      case BareAt:
      case TimeAt:
      case TupleAt: quant = "@[" + time + "] "; break;
      case TimeDia:
      case TupleDia: quant = "<> "; break;
      case TimeBox:
      case TupleBox: quant = "[] "; break;
    }
    return std::string(positive ? "" : "not ") + window + quant + atom_text(pred, args);
  }

  Rng& rng_;
  Time t1_ = 0;
  std::vector<PredSpec>* ext_ = nullptr;
  std::vector<PredSpec>* idb_ = nullptr;
};

std::string ground_text(Rng& rng, const PredSpec& p) {
  std::vector<std::string> args;
  for (std::size_t i = 0; i < p.arity; ++i) args.push_back(std::to_string(pick(rng, 0, 3)));
  return atom_text(p, args);
}

}  // namespace

Instance fuzz_instance(std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + attempt);
    const Time t1 = pick(rng, 0, 5);
    const Time length = pick(rng, 1, 12);
    std::vector<PredSpec> ext, idb;
    ProgramGenerator gen(rng);
    std::string text = gen.generate(t1, ext, idb);

    Instance inst;
    inst.program_text = text;
    try {
      inst.program = parse_program(text);
    } catch (const ValidationError&) {
      continue;
    }

    std::vector<std::pair<Time, std::string>> atoms;
    const std::size_t n_atoms = pick(rng, 0, 20);
    for (std::size_t i = 0; i < n_atoms; ++i) {
      atoms.emplace_back(t1 + pick(rng, 0, length - 1), ground_text(rng, ext[pick(rng, 0, ext.size() - 1)]));
    }
    std::stable_sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string stream = "@timeline " + std::to_string(t1) + " " + std::to_string(t1 + length - 1) + "\n";
    for (const auto& [t, a] : atoms) stream += std::to_string(t) + " " + a + "\n";
    inst.stream = parse_stream(stream, *inst.program.vocabulary);

    if (chance(rng, 0.3)) {
      const std::size_t n_bg = pick(rng, 1, 2);
      std::string bg;
      for (std::size_t i = 0; i < n_bg; ++i) {
        const bool use_idb = chance(rng, 0.2);
        const auto& pool = use_idb ? idb : ext;
        bg += ground_text(rng, pool[pick(rng, 0, pool.size() - 1)]) + ".\n";
      }
      for (auto& g : parse_background(bg, *inst.program.vocabulary)) inst.background.insert(std::move(g));
    }
    return inst;
  }
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  if (name == "diamond") return Scenario::Diamond;
  if (name == "box") return Scenario::Box;
  if (name == "join") return Scenario::Join;
  if (name == "multirule") return Scenario::Multirule;
  if (name == "cooling") return Scenario::Cooling;
  return std::nullopt;
}

const char* to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::Diamond: return "diamond";
    case Scenario::Box: return "box";
    case Scenario::Join: return "join";
    case Scenario::Multirule: return "multirule";
    case Scenario::Cooling: return "cooling";
  }
  return "?";
}

std::string cooling_program(std::uint64_t n) {
  const std::string w = "[" + std::to_string(n) + " t] ";
  return "@[T] steam(V) :- " + w + "@[T] temp(V), V >= 100.\n"
         "@[T] liquid(V) :- " + w + "@[T] temp(V), V >= 1, V < 100.\n"
         "@[T] isSteam :- " + w + "@[T] steam(V).\n"
         "@[T] isLiquid :- " + w + "@[T] liquid(V).\n"
         "alarm :- " + w + "[] isSteam.\n"
         "normal :- " + w + "[] isLiquid.\n"
         "freeze :- not alarm, not normal.\n"
         "veryHot(T) :- " + w + "@[T] steam(V), V >= 150.\n"
         "veryCold(T) :- " + w + "@[T] liquid(V), V = 1.\n";
}

Stream cooling_stream(Vocabulary& vocab, std::uint64_t ticks, std::uint64_t per_tick, std::uint64_t seed) {
  if (ticks == 0) throw ValidationError("cooling stream needs at least one tick");
  Rng rng(seed);
  const PredicateId temp = vocab.predicate("temp", 1);
  Stream s(Timeline(0, ticks - 1));
  int phase = 0;
  std::uint64_t left = 0;
  for (Time t = 0; t < ticks; ++t) {
    if (left == 0) {
      phase = static_cast<int>(pick(rng, 0, 2));
      left = pick(rng, 3, 15);
    }
    --left;
    if (chance(rng, 0.05)) continue;  // sensor dropout
    for (std::uint64_t i = 0; i < per_tick; ++i) {
      std::int64_t v = 0;
      switch (phase) {
        case 0: v = static_cast<std::int64_t>(pick(rng, 100, 200)); break;
        case 1: v = static_cast<std::int64_t>(pick(rng, 1, 99)); break;
        default: v = static_cast<std::int64_t>(pick(rng, 0, 20)) - 20; break;
      }
      if (phase == 1 && chance(rng, 0.1)) v = 1;
      s.add(t, GroundAtom{temp, {Value::integer(v)}});
    }
  }
  return s;
}

Instance bench_instance(Scenario scenario, std::uint64_t window, std::uint64_t rate, std::uint64_t ticks,
                        std::uint64_t seed) {
  if (ticks == 0) throw ValidationError("benchmark needs at least one tick");
  const std::string w = "[" + std::to_string(window) + " t] ";
  Instance inst;
  switch (scenario) {
    case Scenario::Diamond: inst.program_text = "q(A,B) :- " + w + "<> p(A,B).\n"; break;
    case Scenario::Box: inst.program_text = "q(A,B) :- " + w + "[] p(A,B).\n"; break;
    case Scenario::Join: inst.program_text = "q(A,C) :- " + w + "<> p(A,B), " + w + "<> p(B,C).\n"; break;
    case Scenario::Multirule:
      inst.program_text = "q(A,B) :- " + w + "<> p(A,B).\n"
                          "r(A,C) :- q(A,B), " + w + "<> p(B,C).\n"
                          "s(A) :- " + w + "<> r(A,C).\n"
                          "@[T] m(A) :- " + w + "@[T] p(A,B).\n";
      break;
    case Scenario::Cooling: inst.program_text = cooling_program(window); break;
  }
  inst.program = parse_program(inst.program_text);
  Vocabulary& vocab = *inst.program.vocabulary;

  if (scenario == Scenario::Cooling) {
    inst.stream = cooling_stream(vocab, ticks, rate, seed);
    return inst;
  }
  const PredicateId p = vocab.predicate("p", 2);
  auto integer = [](std::uint64_t i) { return Value::integer(static_cast<std::int64_t>(i)); };
  inst.stream = Stream(Timeline(0, ticks - 1));
  std::uint64_t next = 0;
  for (Time t = 0; t < ticks; ++t) {
    for (std::uint64_t j = 0; j < rate; ++j) {
      switch (scenario) {
        case Scenario::Box: inst.stream.add(t, GroundAtom{p, {integer(j), integer(j)}}); break;
        case Scenario::Diamond: inst.stream.add(t, GroundAtom{p, {integer(next), integer(next)}}); break;
        default: inst.stream.add(t, GroundAtom{p, {integer(next), integer(next + 1)}}); break;
      }
      ++next;
    }
  }
  (void)seed;
  return inst;
}

BenchResult run_bench(const Instance& instance, EngineKind kind, const engine::Options& options) {
  using Clock = std::chrono::steady_clock;
  BenchResult result;
  result.atoms = tuple_size(instance.stream);
  const Timeline tl = instance.stream.timeline();

  if (kind == EngineKind::Naive) {
    auto start = Clock::now();
    Stream out = oracle::output_stream_naive(instance.program, instance.stream, instance.background);
    result.total_s = std::chrono::duration<double>(Clock::now() - start).count();
    result.output_atoms = tuple_size(out);
  } else {
    std::vector<std::vector<GroundAtom>> arrivals;
    for (Time t = tl.start;; ++t) {
      auto entries = instance.stream.at(t);
      arrivals.emplace_back();
      for (const auto& e : entries) arrivals.back().push_back(e.atom);
      if (t == tl.end) break;
    }
    engine::Engine eng(instance.program, tl.start, instance.background, options);
    Clock::duration spent{};
    std::size_t i = 0;
    for (Time t = tl.start;; ++t, ++i) {
      auto start = Clock::now();
      eng.tick(t, arrivals[i]);
      spent += Clock::now() - start;
      result.output_atoms += eng.output_size();
      if (t == tl.end) break;
    }
    result.total_s = std::chrono::duration<double>(spent).count();
    result.firings = eng.telemetry().firings;
  }
  result.per_atom_us = result.atoms ? result.total_s * 1e6 / static_cast<double>(result.atoms) : 0.0;
  return result;
}

}  // namespace lars::workload
