#include <doctest.h>

#include <array>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

namespace {

struct RunOutput {
  int status = -1;
  std::string out;
};

// runs the CLI with stderr folded into stdout
RunOutput run_cli(const std::string& args) {
  std::string cmd = std::string(STAGELAB_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  RunOutput r;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  int raw = pclose(pipe);
  r.status = (raw >= 0 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
  return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("compile a") {
  RunOutput r = run_cli("compile a 'x + ~(1+1)'");
  CHECK(r.status == 0);
  CHECK(r.out == "LOADV x\nPUSHI 2\nIADD\n");
  CHECK(run_cli("compile a 'x + 2'").out == r.out);
}

TEST_CASE("compile outcomes map to exit codes") {
  CHECK(run_cli("compile a-safe 'if x then 1 else 2'").status == 2);
  CHECK(run_cli("compile a '~(x)'").status == 4);        // open escape
  CHECK(run_cli("compile a 'x + ' ").status == 5);        // parse error
  RunOutput bottom = run_cli("compile a 'x + ~(1+1)' --fuel 2");
  CHECK(bottom.status == 3);
  CHECK(contains(bottom.out, "BOTTOM"));
}

TEST_CASE("compile --json") {
  RunOutput r = run_cli("compile a 'x + 2' --format json");
  CHECK(r.status == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["outcome"] == "code");
  CHECK(j["code"] == "LOADV x\nPUSHI 2\nIADD\n");
}

TEST_CASE("embed prints the host program") {
  RunOutput r = run_cli("embed stage 'x + 2'");
  CHECK(r.status == 0);
  CHECK(r.out == "(emit (compile_a (quoteA \"x + 2\")))\n");

  RunOutput c = run_cli("embed stage 'x + ~(1+1)' --compile");
  CHECK(c.status == 0);
  CHECK(c.out ==
        "(emit (compile_a (quoteA \"x + ~(1 + 1)\")))\nLOADV x\nPUSHI 2\nIADD\n");

  CHECK(run_cli("embed safe '1 + true' --compile").status == 2);
}

TEST_CASE("run executes machine code") {
  RunOutput r = run_cli("run 'LOADV x\nPUSHI 2\nIADD' --var x=40");
  CHECK(r.status == 0);
  CHECK(r.out == "42\n");

  RunOutput trap = run_cli("run 'PUSHI 1\nTRAP'");
  CHECK(trap.status == 4);
  CHECK(trap.out == "TRAP\n");

  RunOutput fuel = run_cli("run 'PUSHI 0\nPUSHI 0\nPUSHI 0\nIADD\nIADD' --fuel 2");
  CHECK(fuel.status == 3);
  CHECK(fuel.out == "FUEL\n");
}

TEST_CASE("kernel partitions a corpus file") {
  RunOutput r = run_cli(std::string("kernel ") + STAGELAB_DATA_DIR + "/golden.corpus a");
  CHECK(r.status == 0);
  CHECK(contains(r.out, "2 classes"));
  CHECK(contains(r.out, "x + ~(1+(2-1))"));

  RunOutput j = run_cli(std::string("kernel ") + STAGELAB_DATA_DIR +
                        "/golden.corpus a --format json");
  CHECK(j.status == 0);
  nlohmann::json parsed = nlohmann::json::parse(j.out);
  CHECK(parsed["classes"].size() == 2);
}

TEST_CASE("check subcommands") {
  RunOutput stage = run_cli("check stage --generate 20 --seed 5");
  CHECK(stage.status == 0);
  CHECK(contains(stage.out, "stage"));

  RunOutput all =
      run_cli(std::string("check all ") + STAGELAB_DATA_DIR + "/golden.corpus");
  CHECK(all.status == 0);
}

TEST_CASE("checks are reproducible per seed") {
  RunOutput a = run_cli("check semantics --generate 15 --seed 9 --format json");
  RunOutput b = run_cli("check semantics --generate 15 --seed 9 --format json");
  CHECK(a.status == 0);
  CHECK(a.out == b.out);
  RunOutput c = run_cli("check semantics --generate 15 --seed 10 --format json");
  CHECK(c.status == 0); // different corpus, same verdict
}

TEST_CASE("usage errors") {
  CHECK(run_cli("compile").status != 0);
  CHECK(run_cli("frobnicate").status != 0);
  RunOutput help = run_cli("--help");
  CHECK(help.status == 0);
  CHECK(contains(help.out, "compile"));
  CHECK(contains(help.out, "kernel"));
}
