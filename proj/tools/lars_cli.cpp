// Command-line front end: run, check and bench.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "lars/engine/engine.hpp"
#include "lars/error.hpp"
#include "lars/oracle.hpp"
#include "lars/parser.hpp"
#include "lars/workload.hpp"

namespace {

using namespace lars;

constexpr int kExitDivergence = 1;
constexpr int kExitInput = 2;
constexpr int kExitContract = 3;

struct Config {
  std::string program_path;
  std::string stream_path;
  bool use_stdin = false;
  std::string background_path;
  std::vector<std::string> consts;
  std::string engine = "incremental";
  std::string format = "text";
  bool telemetry = false;
  bool gc = false;
  bool no_ssne = false;
  std::string fault = "none";
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> windows{1, 10, 80};
  std::vector<std::uint64_t> rates{10, 40};
  std::uint64_t ticks = 100;
  std::string scenario;
  std::string fuzz;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParseOptions parse_consts(const std::vector<std::string>& consts) {
  ParseOptions opts;
  for (const auto& kv : consts) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--const expects name=value, got '" + kv + "'");
    const std::string value = kv.substr(eq + 1);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty()) throw ValidationError("--const " + kv + ": value is not an integer");
    opts.constants[kv.substr(0, eq)] = v;
  }
  return opts;
}

engine::Options engine_options(const Config& cfg) {
  engine::Options o;
  o.gc = cfg.gc;
  o.ssne = !cfg.no_ssne;
  if (cfg.fault == "extend-horizon") {
    o.fault = engine::Fault::ExtendHorizon;
  } else if (cfg.fault == "ignore-expiry") {
    o.fault = engine::Fault::IgnoreExpiry;
  }
  return o;
}

struct Inputs {
  Program program;
  Background background;
};

Inputs load_inputs(const Config& cfg) {
  Inputs in;
  in.program = parse_program(read_file(cfg.program_path), parse_consts(cfg.consts));
  if (!cfg.background_path.empty()) {
    for (auto& g : parse_background(read_file(cfg.background_path), *in.program.vocabulary)) {
      in.background.insert(std::move(g));
    }
  }
  return in;
}

void warn_derived_inputs(const Program& program, const Stream& stream) {
  for (auto p : derived_predicates_in(program, stream)) {
    std::cerr << "warning: predicate '" << program.vocabulary->predicate_info(p).name
              << "' is derived by the program but also occurs on the input stream\n";
  }
}

class Printer {
 public:
  Printer(const Vocabulary& vocab, bool csv) : vocab_(vocab), csv_(csv) {
    if (csv_) std::cout << "tick,atom\n";
  }

  void line(Time t, const std::vector<GroundAtom>& atoms) {
    std::vector<std::string> names;
    names.reserve(atoms.size());
    for (const auto& a : atoms) names.push_back(to_string(a, vocab_));
    std::sort(names.begin(), names.end());
    if (csv_) {
      for (const auto& n : names) std::cout << t << ",\"" << n << "\"\n";
      return;
    }
    std::cout << t << " ->";
    for (std::size_t i = 0; i < names.size(); ++i) std::cout << (i ? ", " : " ") << names[i];
    std::cout << "\n";
  }

 private:
  const Vocabulary& vocab_;
  bool csv_;
};

void print_telemetry(Time t, const engine::Telemetry& tel) {
  std::cerr << "# t=" << t << " firings=" << tel.firings << " derivations=" << tel.derivations
            << " grd_calls=" << tel.grd_calls << " expired=" << tel.expired << " db_size=" << tel.database_size
            << " data_size=" << tel.data_size << "\n";
}

std::vector<GroundAtom> atoms_at(const Stream& s, Time t) {
  std::vector<GroundAtom> out;
  for (const auto& e : s.at(t)) out.push_back(e.atom);
  return out;
}

// Reads `tick atom...` lines from stdin and evaluates each tick as soon as a
// later tick (or the end of input) shows it is complete.
int run_stdin(const Config& cfg, Inputs& in, Printer& printer) {
  std::optional<engine::Engine> eng;
  std::optional<Timeline> declared;
  std::optional<Time> pending_tick;
  std::vector<GroundAtom> pending;

  auto advance_to = [&](Time t, const std::vector<GroundAtom>& arrivals) {
    if (!eng) eng.emplace(in.program, declared ? declared->start : t, in.background, engine_options(cfg));
    Time from = eng->now() ? *eng->now() + 1 : eng->start();
    for (Time u = from; u <= t; ++u) {
      static const std::vector<GroundAtom> none;
      eng->tick(u, u == t ? arrivals : none);
      printer.line(u, eng->output());
      if (cfg.telemetry) print_telemetry(u, eng->telemetry());
    }
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(std::cin, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    Stream one;
    try {
      one = parse_stream(line, *in.program.vocabulary);
    } catch (const ParseError& e) {
      std::string msg = e.what();
      auto colon = msg.find(": ");
      throw ParseError(colon == std::string::npos ? msg : msg.substr(colon + 2), line_no, e.column());
    }
    if (line.compare(first, 9, "@timeline") == 0) {
      if (declared || pending_tick || eng) throw ParseError("@timeline must be the first line", line_no, 1);
      declared = one.timeline();
      continue;
    }
    const Time t = one.timeline().start;
    if (pending_tick && t < *pending_tick) {
      throw ParseError("tick " + std::to_string(t) + " after tick " + std::to_string(*pending_tick), line_no, 1);
    }
    if (declared && !declared->contains(t)) throw ParseError("tick outside the declared timeline", line_no, 1);
    if (pending_tick && t > *pending_tick) {
      advance_to(*pending_tick, pending);
      pending.clear();
    }
    pending_tick = t;
    auto atoms = atoms_at(one, t);
    for (const auto& a : atoms) {
      if (in.program.is_intensional(a.predicate)) {
        std::cerr << "warning: predicate '" << in.program.vocabulary->predicate_info(a.predicate).name
                  << "' is derived by the program but also occurs on the input stream\n";
      }
    }
    pending.insert(pending.end(), atoms.begin(), atoms.end());
  }
  if (pending_tick) advance_to(*pending_tick, pending);
  if (declared && (!eng || !eng->now() || *eng->now() < declared->end)) advance_to(declared->end, {});
  return 0;
}

int cmd_run(const Config& cfg) {
  Inputs in = load_inputs(cfg);
  Printer printer(*in.program.vocabulary, cfg.format == "csv");
  if (cfg.use_stdin && cfg.engine == "incremental") return run_stdin(cfg, in, printer);

  Stream data = cfg.use_stdin ? parse_stream(std::string(std::istreambuf_iterator<char>(std::cin), {}),
                                             *in.program.vocabulary)
                              : parse_stream(read_file(cfg.stream_path), *in.program.vocabulary);
  warn_derived_inputs(in.program, data);
  const Timeline tl = data.timeline();

  if (cfg.engine == "naive") {
    Stream out = oracle::output_stream_naive(in.program, data, in.background);
    for (Time t = tl.start;; ++t) {
      printer.line(t, atoms_at(out, t));
      if (t == tl.end) break;
    }
    return 0;
  }
  engine::Engine eng(in.program, tl.start, in.background, engine_options(cfg));
  for (Time t = tl.start;; ++t) {
    eng.tick(t, atoms_at(data, t));
    printer.line(t, eng.output());
    if (cfg.telemetry) print_telemetry(t, eng.telemetry());
    if (t == tl.end) break;
  }
  return 0;
}

std::string join_atoms(const std::vector<GroundAtom>& atoms, const Vocabulary& vocab) {
  std::vector<std::string> names;
  for (const auto& a : atoms) names.push_back(to_string(a, vocab));
  std::sort(names.begin(), names.end());
  std::string s = "{";
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? ", " : "") + names[i];
  return s + "}";
}

// First tick at which the two output streams differ.
std::optional<Time> first_divergence(const Stream& a, const Stream& b) {
  const Timeline tl = a.timeline();
  for (Time t = tl.start;; ++t) {
    auto x = atoms_at(a, t), y = atoms_at(b, t);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    if (x != y) return t;
    if (t == tl.end) return std::nullopt;
  }
}

int check_one(const Program& program, const Stream& data, const Background& bg, const engine::Options& opts,
              const std::string& label) {
  Stream inc = engine::evaluate(program, data, bg, opts);
  Stream naive = oracle::output_stream_naive(program, data, bg);
  if (auto t = first_divergence(inc, naive)) {
    const auto& vocab = *program.vocabulary;
    std::cout << label << "divergence at tick " << *t << "\n"
              << "  incremental: " << join_atoms(atoms_at(inc, *t), vocab) << "\n"
              << "  naive:       " << join_atoms(atoms_at(naive, *t), vocab) << "\n";
    return kExitDivergence;
  }
  return 0;
}

int cmd_check(const Config& cfg) {
  if (!cfg.fuzz.empty()) {
    auto dash = cfg.fuzz.find('-');
    if (dash == std::string::npos) throw ValidationError("--fuzz expects a seed range a-b");
    const std::uint64_t lo = std::stoull(cfg.fuzz.substr(0, dash));
    const std::uint64_t hi = std::stoull(cfg.fuzz.substr(dash + 1));
    if (lo > hi) throw ValidationError("--fuzz range is empty");
    for (std::uint64_t seed = lo; seed <= hi; ++seed) {
      auto inst = workload::fuzz_instance(seed);
      const std::string label = "seed " + std::to_string(seed) + ": ";
      auto opts = engine_options(cfg);
      if (inst.program.has_bare_at_in_body()) opts.gc = false;
      if (int rc = check_one(inst.program, inst.stream, inst.background, opts, label)) {
        std::cout << "program:\n" << inst.program_text;
        return rc;
      }
    }
    std::cout << "fuzz " << lo << "-" << hi << ": " << (hi - lo + 1) << " instances identical\n";
    return 0;
  }
  Inputs in = load_inputs(cfg);
  Stream data = cfg.use_stdin ? parse_stream(std::string(std::istreambuf_iterator<char>(std::cin), {}),
                                             *in.program.vocabulary)
                              : parse_stream(read_file(cfg.stream_path), *in.program.vocabulary);
  warn_derived_inputs(in.program, data);
  int rc = check_one(in.program, data, in.background, engine_options(cfg), "");
  if (rc == 0) std::cout << "identical (" << data.timeline().length() << " ticks)\n";
  return rc;
}

int cmd_bench(const Config& cfg) {
  auto scenario = workload::parse_scenario(cfg.scenario.empty() ? "diamond" : cfg.scenario);
  if (!scenario) throw ValidationError("unknown scenario '" + cfg.scenario + "'");
  std::vector<workload::EngineKind> kinds;
  if (cfg.engine != "naive") kinds.push_back(workload::EngineKind::Incremental);
  if (cfg.engine != "incremental") kinds.push_back(workload::EngineKind::Naive);

  std::cout << "scenario,window,rate,engine,total_s,per_atom_us,firings\n";
  for (auto w : cfg.windows) {
    for (auto r : cfg.rates) {
      auto inst = workload::bench_instance(*scenario, w, r, cfg.ticks, cfg.seed);
      for (auto kind : kinds) {
        auto res = workload::run_bench(inst, kind, engine_options(cfg));
        std::cout << workload::to_string(*scenario) << "," << w << "," << r << ","
                  << (kind == workload::EngineKind::Incremental ? "incremental" : "naive") << "," << res.total_s
                  << "," << res.per_atom_us << "," << res.firings << "\n";
        std::cout.flush();
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental stream reasoning for plain LARS programs"};
  app.require_subcommand(1);
  Config cfg;

  auto add_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--program", cfg.program_path, "Program file (.lars)");
    cmd->add_option("--stream", cfg.stream_path, "Stream file (.stream)");
    cmd->add_flag("--stdin", cfg.use_stdin, "Read the stream from standard input");
    cmd->add_option("--background", cfg.background_path, "Background facts, one `atom.` each");
    cmd->add_option("--const", cfg.consts, "Named constant name=value (repeatable)");
    cmd->add_flag("--gc", cfg.gc, "Drop data atoms outside every window");
    cmd->add_flag("--no-ssne", cfg.no_ssne, "Fire on every substitution, not only fresh ones");
    cmd->add_option("--fault", cfg.fault, "Inject an engine defect (mutation testing)")
        ->check(CLI::IsMember({"none", "extend-horizon", "ignore-expiry"}))
        ->group("");
  };

  auto* run = app.add_subcommand("run", "Evaluate a program over a stream");
  add_inputs(run);
  run->add_option("--engine", cfg.engine, "incremental | naive")->check(CLI::IsMember({"incremental", "naive"}));
  run->add_option("--format", cfg.format, "text | csv")->check(CLI::IsMember({"text", "csv"}));
  run->add_flag("--telemetry", cfg.telemetry, "Per-tick counters on stderr");

  auto* check = app.add_subcommand("check", "Compare the incremental engine with the naive evaluator");
  add_inputs(check);
  check->add_option("--fuzz", cfg.fuzz, "Seed range a-b of random instances");

  auto* bench = app.add_subcommand("bench", "Time incremental and naive evaluation on synthetic streams");
  bench->add_option("SCENARIO", cfg.scenario, "diamond | box | join | multirule | cooling");
  bench->add_option("--scenario", cfg.scenario, "Same as the positional argument");
  bench->add_option("--windows", cfg.windows, "Window sizes")->delimiter(',');
  bench->add_option("--rates", cfg.rates, "Atoms per tick")->delimiter(',');
  bench->add_option("--ticks", cfg.ticks, "Number of ticks");
  bench->add_option("--seed", cfg.seed, "Generator seed");
  bench->add_option("--engine", cfg.engine, "incremental | naive | both")
      ->check(CLI::IsMember({"incremental", "naive", "both"}));
  bench->add_flag("--gc", cfg.gc, "Drop data atoms outside every window");
  bench->add_flag("--no-ssne", cfg.no_ssne, "Fire on every substitution");

  CLI11_PARSE(app, argc, argv);
  if (bench->parsed() && bench->count("--engine") == 0) cfg.engine = "both";

  try {
    if (run->parsed() || (check->parsed() && cfg.fuzz.empty())) {
      if (cfg.program_path.empty()) throw ValidationError("--program is required");
      if (cfg.stream_path.empty() && !cfg.use_stdin) throw ValidationError("--stream or --stdin is required");
    }
    if (run->parsed()) return cmd_run(cfg);
    if (check->parsed()) return cmd_check(cfg);
    return cmd_bench(cfg);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitContract;
  } catch (const DomainError& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitContract;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
