#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& input = "") {
  std::string cmd = std::string(LARS_BIN) + " " + args + " 2>/dev/null";
  fs::path in;
  if (!input.empty()) {
    in = fs::temp_directory_path() / ("lars_cli_stdin_" + std::to_string(::getpid()));
    std::ofstream(in) << input;
    cmd += " < " + in.string();
  }
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (!in.empty()) fs::remove(in);
  return r;
}

std::string asset(const std::string& name) { return std::string(ASSETS_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string temp_file(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / (std::to_string(::getpid()) + "_" + name);
  std::ofstream(p) << content;
  return p.string();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const std::string kJoinArgs = "--program " + asset("join.lars") + " --stream " + asset("fig1.stream");
const std::string kCoolingArgs =
    "--program " + asset("cooling.lars") + " --const n=5 --stream " + asset("cooling.stream");

}  // namespace

TEST(CliRun, JoinMatchesGolden) {
  for (const char* engine : {"incremental", "naive"}) {
    auto r = run("run " + kJoinArgs + " --engine " + engine);
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, slurp(asset("golden/join_fig1.txt"))) << engine;
  }
}

TEST(CliRun, CoolingMatchesGolden) {
  auto r = run("run " + kCoolingArgs);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, slurp(asset("golden/cooling_n5.txt")));
  EXPECT_EQ(run("run " + kCoolingArgs).out, r.out);
}

TEST(CliRun, EmptyProgramPrintsEmptyTicks) {
  auto prog = temp_file("empty.lars", "% nothing\n");
  auto r = run("run --program " + prog + " --stream " + asset("fig1.stream"));
  EXPECT_EQ(r.code, 0);
  auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 8u);
  for (std::size_t i = 0; i < ls.size(); ++i) EXPECT_EQ(ls[i], std::to_string(35 + i) + " ->");
}

TEST(CliRun, CsvRoundTripsToTheTextOutput) {
  auto csv = run("run " + kCoolingArgs + " --format csv");
  auto text = run("run " + kCoolingArgs);
  ASSERT_EQ(csv.code, 0);
  auto rows = lines(csv.out);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], "tick,atom");
  std::map<long, std::set<std::string>> from_csv;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto comma = rows[i].find(',');
    ASSERT_NE(comma, std::string::npos);
    std::string atom = rows[i].substr(comma + 1);
    ASSERT_GE(atom.size(), 2u);
    ASSERT_EQ(atom.front(), '"');
    ASSERT_EQ(atom.back(), '"');
    from_csv[std::stol(rows[i].substr(0, comma))].insert(atom.substr(1, atom.size() - 2));
  }
  std::map<long, std::set<std::string>> from_text;
  for (const auto& l : lines(text.out)) {
    auto arrow = l.find(" ->");
    std::string rest = l.substr(arrow + 3);
    std::set<std::string> atoms;
    // Arguments print without spaces, so ", " only separates atoms.
    for (std::size_t begin = 1; begin < rest.size();) {
      auto next = rest.find(", ", begin);
      if (next == std::string::npos) next = rest.size();
      atoms.insert(rest.substr(begin, next - begin));
      begin = next + 2;
    }
    if (!atoms.empty()) from_text[std::stol(l.substr(0, arrow))] = atoms;
  }
  EXPECT_EQ(from_csv, from_text);
}

TEST(CliRun, StdinStreamingMatchesFileMode) {
  auto file = run("run " + kCoolingArgs);
  std::string body = slurp(asset("cooling.stream"));
  auto piped = run("run --program " + asset("cooling.lars") + " --const n=5 --stdin", body);
  EXPECT_EQ(piped.code, 0);
  EXPECT_EQ(piped.out, file.out);
  auto buffered = run("run --program " + asset("cooling.lars") + " --const n=5 --stdin --engine naive", body);
  EXPECT_EQ(buffered.out, file.out);
}

TEST(CliRun, StdinAdvancesThroughGaps) {
  auto r = run("run --program " + asset("join.lars") + " --stdin", "36 a(x1,y)\n38 a(x2,y) b(y,z)\n");
  EXPECT_EQ(r.code, 0);
  auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 3u);
  EXPECT_EQ(ls[1], "37 ->");
  EXPECT_EQ(ls[2], "38 -> q(x1,y,z), q(x2,y,z)");
}

TEST(CliRun, ExitCodes) {
  auto bad = temp_file("bad.lars", "q(X) :- [3 x] <> p(X).\n");
  EXPECT_EQ(run("run --program " + bad + " --stream " + asset("fig1.stream")).code, 2);
  EXPECT_EQ(run("run --program " + asset("cooling.lars") + " --stream " + asset("cooling.stream")).code, 2);
  auto unsafe = temp_file("unsafe.lars", "q(X) :- p(Y).\n");
  EXPECT_EQ(run("run --program " + unsafe + " --stream " + asset("fig1.stream")).code, 2);
  auto derived = temp_file("derived.stream", "1 a(x,y) q(x,y,z)\n");
  EXPECT_EQ(run("run --program " + asset("join.lars") + " --stream " + derived).code, 3);
  auto bad_stream = temp_file("bad.stream", "5 a(x,y)\n3 a(x,y)\n");
  EXPECT_EQ(run("run --program " + asset("join.lars") + " --stream " + bad_stream).code, 2);
}

TEST(CliCheck, JoinExampleIsIdentical) {
  auto r = run("check " + kJoinArgs);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(run("check " + kCoolingArgs).code, 0);
}

TEST(CliCheck, FuzzCorpusIsIdentical) { EXPECT_EQ(run("check --fuzz 0-499").code, 0); }

TEST(CliCheck, MutatedEnginesAreCaught) {
  for (const char* fault : {"extend-horizon", "ignore-expiry"}) {
    auto r = run(std::string("check --fuzz 0-499 --fault ") + fault);
    EXPECT_EQ(r.code, 1) << fault;
    EXPECT_NE(r.out.find("divergence at tick"), std::string::npos);
  }
  EXPECT_EQ(run("check " + kJoinArgs + " --fault extend-horizon").code, 1);
}

TEST(CliBench, GridHasOneRowPerEngineAndCell) {
  auto r = run("bench diamond --windows 1,10,80 --rates 20,40 --ticks 5");
  EXPECT_EQ(r.code, 0);
  auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 13u);
  EXPECT_EQ(ls[0], "scenario,window,rate,engine,total_s,per_atom_us,firings");
  EXPECT_EQ(ls[1].rfind("diamond,1,20,incremental,", 0), 0u);
  EXPECT_EQ(ls[2].rfind("diamond,1,20,naive,", 0), 0u);
}

TEST(CliBench, Scenarios) {
  for (const char* s : {"box", "join", "multirule", "cooling"}) {
    auto r = run(std::string("bench --scenario ") + s + " --windows 5 --rates 20 --ticks 10");
    EXPECT_EQ(r.code, 0) << s;
    EXPECT_EQ(lines(r.out).size(), 3u) << s;
  }
  EXPECT_EQ(run("bench nosuch --windows 5 --rates 20 --ticks 10").code, 2);
}
