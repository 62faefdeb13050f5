#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "parea/io.hpp"
#include "parea/scenario.hpp"

#include <filesystem>

using namespace parea;
using namespace parea::testing;

TEST_CASE("run-length mask encoding") {
  const std::vector<bool> bits{false, false, false, true, true, true, true, true, false, false};
  CHECK(encode_rle(bits) == "3.5#2.");
  CHECK(decode_rle("3.5#2.", 10) == bits);
  CHECK(decode_rle(encode_rle(GridSpec::disk(13, 9, 1.0).mask()), 117) == GridSpec::disk(13, 9, 1.0).mask());
  CHECK_THROWS_AS(decode_rle("3.5#2.", 11), FormatError);
  CHECK_THROWS_AS(decode_rle("3x", 3), FormatError);
}

TEST_CASE("field CSV round trip is bit exact") {
  const GridPtr g = make_grid(GridSpec::disk(12, 12, 1.0 / 12));
  const ScalarField u = random_field(g, 9);
  const std::string csv = field_csv(u);
  CHECK(csv.rfind("x_index,y_index,value\n", 0) == 0);
  const ScalarField back = read_field_csv(csv, g);
  CHECK(back.values == u.values);
  CHECK(field_csv(back) == csv);
  CHECK(trace_csv(BoundaryTrace(g)).rfind("edge,x_index,y_index,direction,value\n", 0) == 0);
  CHECK_THROWS(read_field_csv("x_index,y_index,value\n0,0,1\n", g));
}

TEST_CASE("shortest round-trip number format") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(1.0) == "1");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("SHA-256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("grid sidecar") {
  const GridSpec g = GridSpec::disk(8, 8, 0.125);
  const Json j = grid_sidecar(g, {"u"});
  CHECK(j["format_version"] == kFormatVersion);
  CHECK(j["nx"] == 8);
  CHECK(decode_rle(j["mask"].get<std::string>(), 64) == g.mask());
  CHECK(j["cells"] == g.cell_count());
}

TEST_CASE("scenario parsing") {
  SUBCASE("minimal valid file") {
    const Scenario s = parse_scenario(R"(name: tiny
grid: {nx: 4, ny: 4}
fields: {a: "constant:2", drift: zero, H: "constant:0"}
boundary: {kind: neumann}
)");
    CHECK(s.name == "tiny");
    CHECK(s.spec.grid()->h() == doctest::Approx(0.25));
    CHECK(s.spec.weight()[0] == 2.0);
    CHECK(s.spec.neumann());
  }
  SUBCASE("unknown keys name the key and the line") {
    try {
      parse_scenario("name: x\ngrid: {nx: 4, ny: 4}\nfields: {a: \"constant:1\"}\nboundary: {kind: neumann}\nsolvr: {}\n");
      FAIL("no error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("solvr") != std::string::npos);
      CHECK(e.line() == 5);
    }
  }
  SUBCASE("mask length mismatch") {
    CHECK_THROWS_AS(parse_scenario("name: x\ngrid: {nx: 4, ny: 4, mask: \"15#\"}\nboundary: {kind: neumann}\n"),
                    ConfigError);
  }
  SUBCASE("bad generator") {
    CHECK_THROWS_AS(parse_scenario("name: x\ngrid: {nx: 4, ny: 4}\nfields: {a: \"wobble:1\"}\nboundary: {kind: neumann}\n"),
                    ConfigError);
  }
  SUBCASE("unknown check") {
    CHECK_THROWS_AS(parse_scenario("name: x\ngrid: {nx: 4, ny: 4}\nboundary: {kind: neumann}\nchecks: [nope]\n"),
                    ConfigError);
  }
  SUBCASE("file generators resolve relative to the base directory") {
    const auto dir = std::filesystem::temp_directory_path() / "parea_test_io";
    std::filesystem::create_directories(dir);
    const GridPtr g = make_grid(GridSpec::full(4, 4, 0.25));
    const ScalarField H = random_field(g, 1);
    write_text(dir / "H.csv", field_csv(H));
    const Scenario s = parse_scenario(
        "name: x\ngrid: {nx: 4, ny: 4}\nfields: {H: \"file:H.csv\"}\nboundary: {kind: neumann}\n", dir);
    CHECK(s.spec.curvature().values == H.values);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("every built-in scenario parses and round-trips through its source") {
  for (const std::string& name : builtin_scenario_names()) {
    CAPTURE(name);
    const Scenario s = builtin_scenario(name);
    CHECK(s.name == name);
    CHECK(!s.description.empty());
    CHECK(resolve_scenario(name).source == builtin_scenario_source(name));
  }
  CHECK_THROWS_AS(resolve_scenario("no-such-scenario"), ConfigError);
}

TEST_CASE("library versions are reported") {
  const Json v = library_versions();
  for (const char* k : {"parea", "eigen", "openssl", "nlohmann_json", "compiler"}) CHECK(v.contains(k));
}
