// Exit codes and artifacts of the command-line tool.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parea/io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

namespace fs = std::filesystem;
using parea::Json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("parea_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + PAREA_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("certify on the trivial scenario succeeds and writes a manifest") {
  const fs::path out = scratch("trivial");
  CHECK(run("certify --scenario trivial --output-dir " + out.string()) == 0);
  REQUIRE(fs::exists(out / "manifest.json"));
  const Json m = Json::parse(parea::read_text(out / "manifest.json"));
  CHECK(m["exit_code"] == 0);
  CHECK(m["command"] == "certify");
  for (const auto& a : m["artifacts"]) {
    const fs::path p = out / a["path"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(parea::sha256_hex(parea::read_text(p)) == a["sha256"].get<std::string>());
  }
  fs::remove_all(out);
}

TEST_CASE("configuration errors exit with 2") {
  const fs::path out = scratch("bad");
  CHECK(run("certify --scenario no-such-scenario --output-dir " + out.string()) == 2);
  CHECK(run("certify --output-dir " + out.string()) == 2);
  CHECK(run("certify --scenario trivial --format xml --output-dir " + out.string()) == 2);
  CHECK(run("solve-dirichlet --scenario trivial --output-dir " + out.string()) == 2);
  fs::create_directories(out);
  parea::write_text(out / "broken.yaml", "name: broken\ngrid: {nx: 4, ny: 4, colour: red}\nboundary: {kind: neumann}\n");
  CHECK(run("certify --scenario " + (out / "broken.yaml").string() + " --output-dir " + (out / "o").string()) == 2);
  fs::remove_all(out);
}

TEST_CASE("list-scenarios") {
  CHECK(run("list-scenarios") == 0);
  CHECK(run("list-scenarios --format json") == 0);
}

TEST_CASE("JSON field format") {
  const fs::path out = scratch("json");
  CHECK(run("solve-neumann --scenario trivial --format json --output-dir " + out.string()) == 0);
  CHECK(fs::exists(out / "u.json"));
  CHECK_FALSE(fs::exists(out / "u.csv"));
  fs::remove_all(out);
}
