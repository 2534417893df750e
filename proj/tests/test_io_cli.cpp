#include <doctest.h>

#include <fstream>
#include <sstream>

#include "kleinlab/cli.hpp"
#include "kleinlab/error.hpp"
#include "kleinlab/io.hpp"

using namespace kleinlab;

namespace {

std::string data(const char* name) { return std::string(KLEINLAB_DATA_DIR) + "/" + name; }

std::string schema_message(const std::string& text) {
  try {
    parse_group_file(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::schema);
    return e.what();
  }
  FAIL("document accepted");
  return {};
}

std::size_t count_rows(const std::string& csv) {
  std::size_t rows = 0;
  for (std::size_t i = 0; i + 1 < csv.size(); ++i) rows += csv[i] == '\r' && csv[i + 1] == '\n';
  return rows;
}

const char* kCyclic = R"({
  "format": 1,
  "dimension": 2,
  "kind": "cyclic",
  "generators": [{"scale": 2.0}]
})";

}  // namespace

TEST_CASE("group files: strict schema") {
  const GroupFile f = parse_group_file(kCyclic);
  CHECK(f.dimension == 2);
  CHECK(f.kind == GroupKind::cyclic);
  CHECK(f.group->rank() == 1);
  CHECK(f.depths == std::vector<std::size_t>{5, 6});

  SUBCASE("unknown field names path and line") {
    const std::string msg = schema_message(R"({
  "format": 1,
  "dimension": 2,
  "kind": "cyclic",
  "colour": "red",
  "generators": [{"scale": 2.0}]
})");
    CHECK(msg.find("colour") != std::string::npos);
    CHECK(msg.find("line 5") != std::string::npos);
  }
  SUBCASE("unknown nested field") {
    const std::string msg = schema_message(R"({"format": 1, "dimension": 2, "kind": "cyclic",
      "generators": [{"scale": 2.0, "shear": 1}]})");
    CHECK(msg.find("/generators/0") != std::string::npos);
    CHECK(msg.find("shear") != std::string::npos);
  }
  SUBCASE("format version") {
    CHECK(schema_message(R"({"format": 2, "dimension": 2, "kind": "cyclic", "generators": [{}]})").find("format") !=
          std::string::npos);
    schema_message(R"({"dimension": 2, "kind": "cyclic", "generators": [{}]})");
  }
  SUBCASE("malformed values") {
    schema_message(R"({"format": 1, "dimension": 2, "kind": "cyclic", "generators": [{"scale": -1}]})");
    schema_message(R"({"format": 1, "dimension": 2, "kind": "cyclic", "generators": [{"offset": [1]}]})");
    schema_message(R"({"format": 1, "dimension": 2, "kind": "cyclic", "generators": [{}, {}]})");
    schema_message(R"({"format": 1, "dimension": 2, "kind": "moebius", "generators": [{}]})");
    schema_message(R"({"format": 1, "dimension": 2, "kind": "cyclic", "generators": [{"inverse": {}}]})");
    schema_message(R"({"format": 1, "dimension": 2, "kind": "cyclic", "generators": [{}], "depths": [6, 5]})");
    schema_message(R"({"format": 1, "dimension": 2, "kind": "cyclic", "generators": [{}], "epsilon0": 0.7})");
    schema_message(R"({"format": 1, "dimension": 2, "kind": "schottky", "ball_pairs": [{"source":
      {"center": [1, 0, 0], "angle": 0.1}, "target": {"center": [0.5, 0, 0], "angle": 0.1}}]})");
  }
  SUBCASE("syntax error reports its line") {
    const std::string msg = schema_message("{\n  \"format\": 1,\n  \"dimension\": ,\n}");
    CHECK(msg.find("line 3") != std::string::npos);
  }
}

TEST_CASE("group files: group invariants") {
  SUBCASE("inverse mismatch at 1e-6") {
    try {
      parse_group_file(R"({"format": 1, "dimension": 2, "kind": "custom",
        "generators": [{"offset": [1, 0], "inverse": {"offset": [-0.999999, 0]}}]})");
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_group);
    }
    CHECK_NOTHROW(parse_group_file(R"({"format": 1, "dimension": 2, "kind": "custom",
        "generators": [{"offset": [1, 0], "inverse": {"offset": [-1, 0]}}]})"));
  }
  SUBCASE("tangent schottky caps") {
    const CommandResult r = run_command("validate", CommandOptions{data("tangent_schottky.json")});
    CHECK(r.exit_code == kExitInvalid);
    const std::string msg = r.report["error"]["message"].get<std::string>();
    CHECK(msg.find("cap 1a") != std::string::npos);
    CHECK(msg.find("cap 2a") != std::string::npos);
    CHECK(r.report["results"]["valid"] == false);
  }
  SUBCASE("cusp ends") {
    const GroupFile f = parse_group_file(R"({"format": 1, "dimension": 3, "kind": "cyclic",
      "generators": [{"offset": [1, 0, 0]}], "cusp_ends": [{"m": 1, "radius": 2, "volume_k": 1}]})");
    REQUIRE(f.cusp_ends.size() == 1);
    CHECK(f.cusp_ends[0].n == 3);
    CHECK(f.cusp_ends[0].radius == 2.0);
    schema_message(R"({"format": 1, "dimension": 3, "kind": "cyclic",
      "generators": [{}], "cusp_ends": [{"m": 3, "radius": 2, "volume_k": 1}]})");
  }
  SUBCASE("missing file") {
    const CommandResult r = run_command("validate", CommandOptions{data("no_such_file.json")});
    CHECK(r.exit_code == kExitInvalid);
  }
}

TEST_CASE("report serialization") {
  Json j;
  j["x"] = 0.1;
  j["third"] = 1.0 / 3.0;
  j["n"] = 7;
  j["bad"] = std::numeric_limits<double>::quiet_NaN();
  j["s"] = "a\"b";
  const std::string s = to_json_string(j, -1);
  CHECK(s == R"({"x":0.10000000000000001,"third":0.33333333333333331,"n":7,"bad":null,"s":"a\"b"})");
  // Round trip recovers the doubles exactly.
  const Json back = Json::parse(s);
  CHECK(back["x"].get<double>() == 0.1);
  CHECK(back["third"].get<double>() == 1.0 / 3.0);
}

TEST_CASE("commands") {
  SUBCASE("validate") {
    const CommandResult r = run_command("validate", CommandOptions{data("reference_schottky.json")});
    CHECK(r.exit_code == kExitOk);
    CHECK(r.report["command"] == "validate");
    CHECK(r.report["results"]["rank"] == 2);
    CHECK(r.report["results"]["elementary"] == false);
    CHECK(r.report.contains("wall_time_s"));
  }
  SUBCASE("unknown command") { CHECK(run_command("frobnicate", CommandOptions{data("cyclic_loxodromic.json")}).exit_code == kExitInvalid); }
  SUBCASE("limitset row counts and CRLF") {
    const CommandResult c = run_command("limitset", CommandOptions{data("cyclic_loxodromic.json")});
    CHECK(c.exit_code == kExitOk);
    CHECK(count_rows(c.csv) == 3);  // header + 2
    CHECK(c.csv.rfind("x0,x1,x2\r\n", 0) == 0);
    CommandOptions o{data("reference_schottky.json")};
    o.depth = 6;
    const CommandResult s = run_command("limitset", o);
    CHECK(count_rows(s.csv) == 973);
    CHECK(s.report["results"]["points"] == 972);
    CHECK(run_command("limitset", o).csv == s.csv);
  }
  SUBCASE("graph on a cyclic group") {
    CommandOptions o{data("cyclic_loxodromic.json")};
    o.samples = 1000;
    const CommandResult a = run_command("graph", o);
    REQUIRE(a.exit_code == kExitOk);
    const Json& r = a.report["results"];
    CHECK(r["distance_band"]["ratio"].get<double>() < 20.0);
    CHECK(r["invariance"][0]["matched_max_deviation"].get<double>() < 1e-6);
    CHECK(r["separation"]["passed"] == true);
    CHECK(r["lipschitz"]["M"].get<double>() > 0.0);
    CHECK(a.csv == run_command("graph", o).csv);
    o.seed = 2;
    CHECK(a.csv != run_command("graph", o).csv);
  }
  SUBCASE("dimension on a cyclic group") {
    const CommandResult r = run_command("dimension", CommandOptions{data("cyclic_parabolic.json")});
    CHECK(r.exit_code == kExitOk);
    CHECK(r.report["results"]["box_dimension"]["value"].get<double>() < 0.05);
    CHECK(r.report["results"]["delta"]["value"].get<double>() < 0.05);
  }
  SUBCASE("harmonic on a cyclic group") {
    CommandOptions o{data("cyclic_loxodromic.json")};
    o.samples = 20000;
    const CommandResult r = run_command("harmonic", o);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.report["results"]["u_gamma_0"]["value"].get<double>() == 1.0);
    CHECK(r.report["results"]["agree"] == true);
    CHECK(r.report["results"]["invariance_within_tolerance"] == true);
  }
  SUBCASE("diagnose") {
    const CommandResult p = run_command("diagnose", CommandOptions{data("cyclic_parabolic.json")});
    CHECK(p.exit_code == kExitOk);
    CHECK(p.report["results"]["verdict"] == "consistent-with-geometrically-finite");
    CommandOptions o{data("reference_schottky.json")};
    o.depth = 1;
    const CommandResult s = run_command("diagnose", o);
    CHECK(s.exit_code == kExitInconclusive);
    CHECK(s.report["results"]["verdict"] == "inconclusive");
    const CommandResult c = run_command("diagnose", CommandOptions{data("cusp_example.json")});
    CHECK(c.report["results"]["cusp_ends"][0]["volume"].get<double>() == doctest::Approx(0.125));
  }
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorCode::schema) == 2);
  CHECK(exit_code_for(ErrorCode::invalid_group) == 2);
  CHECK(exit_code_for(ErrorCode::insufficient_data) == 3);
  CHECK(exit_code_for(ErrorCode::shrink_epsilon0) == 3);
  CHECK(exit_code_for(ErrorCode::pole) == 1);
}

TEST_CASE("emission") {
  CommandOptions o{data("cyclic_loxodromic.json")};
  const CommandResult r = run_command("limitset", o);
  std::ostringstream out, err;
  CHECK(emit_result("limitset", o, r, out, err) == 0);
  CHECK(out.str() == r.csv);
  CHECK(err.str().find("points: 2") != std::string::npos);

  o.json = true;
  o.out = std::string(KLEINLAB_BINARY_DIR) + "/emit_test.csv";
  std::ostringstream out2, err2;
  emit_result("limitset", o, r, out2, err2);
  CHECK(Json::parse(out2.str())["results"]["points"] == 2);
  std::ifstream f(*o.out, std::ios::binary);
  std::stringstream body;
  body << f.rdbuf();
  CHECK(body.str() == r.csv);
}
