#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mscusum/commands.hpp"
#include "mscusum/errors.hpp"

using namespace mscusum;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = MSCUSUM_CONFIG_DIR;

std::string minimal(const std::string& extra = "") {
  return R"({"model": {"sensors": 2, "theta": 1.0})" + extra + "}";
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "mscusum_cli_test";
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MSCUSUM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

// Field count of one CSV line, honouring double quotes.
std::size_t csv_fields(const std::string& line) {
  std::size_t n = 1;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    if (ch == ',' && !quoted) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("config round trip") {
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path().string());
    const auto text = serialize_config(c);
    CHECK(parse_config(text) == c);
    CHECK(serialize_config(parse_config(text)) == text);
  }
  const auto c = parse_config(minimal());
  CHECK(c.model.shifts == std::vector<double>{1.0, 1.0});
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "sed": 3)")), ConfigError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "runs": {"arl": 10, "dealy": 5})")), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"sensors": 2, "theta": 1, "shifts": [1, 1]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"sensors": 2, "shifts": [1]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"sensors": 2, "theta": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"sensors": 2, "theta": 1, "covariance": [[1, 2], [2, 1]]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "seed": -1)")), ConfigError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "gammas": [0.5])")), ConfigError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "detectors": [{"rule": "bogus"}])")), ConfigError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "detectors": [{"rule": "shat", "pi": 1.5}])")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(minimal(R"(, "detectors": [{"rule": "shat", "colour": 1}])")),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(minimal(R"(, "detectors": [{"rule": "glr", "class": {"kind": "at_most", "size": 3}}])")),
      ConfigError);
  // Thresholds that do not fit the detector.
  const std::string oracle = R"(, "detectors": [{"label": "o", "rule": "oracle"}])";
  CHECK_NOTHROW(parse_config(minimal(oracle + R"(, "table": [{"detector": "o", "affected": 2, "threshold": 3}])")));
  CHECK_THROWS_AS(
      parse_config(minimal(oracle + R"(, "table": [{"detector": "o", "affected": 2, "threshold": -1}])")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(minimal(oracle + R"(, "table": [{"detector": "x", "affected": 2, "threshold": 3}])")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(minimal(oracle + R"(, "table": [{"detector": "o", "affected": 3, "threshold": 3}])")),
      ConfigError);
}

TEST_CASE("number formatting") {
  CHECK(format_number(10.64) == "10.64");
  CHECK(format_number(100090) == "100090");
  CHECK(format_number(1234567.0) == "1.23457e+06");
  CHECK(format_number(-0.532063) == "-0.532063");
  CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("constants command") {
  auto c = parse_config(minimal(R"(, "constants": {"thetas": [1.0]})"));
  const auto r = cmd_constants(c, 1);
  REQUIRE(r.files.size() == 2);
  CHECK(r.files[0].content == "theta,kl,rho,beta,delta\n1,0.5,0.717937,-0.532063,0.56037\n");
}

TEST_CASE("figure 1 data") {
  const auto c = load_config(kConfigs + "/fig1.json");
  const auto r = cmd_figures(c, 1);
  REQUIRE(r.files.size() == 2);
  std::istringstream in(r.files[0].content);
  std::string line;
  std::getline(in, line);
  CHECK(line == "theta2,spec,j1,j2,c1,c2");
  int equalizing = 0;
  std::string prev_j;
  while (std::getline(in, line)) {
    if (line.find(",equalizing,") == std::string::npos) continue;
    ++equalizing;
    CHECK(line.substr(line.size() - 17) == "0.693147,0.693147");
  }
  CHECK(equalizing == static_cast<int>(c.figure1.points));
}

TEST_CASE("calibrate command") {
  const auto c = parse_config(R"({"model": {"sensors": 1, "theta": 1.0},
    "detectors": [{"label": "cusum", "rule": "oracle", "subset": [1]}],
    "gammas": [100], "runs": {"calibration": 1000}, "confirmation_factor": 4, "seed": 3})");
  const auto r = cmd_calibrate(c, 1);
  const auto& csv = r.files[0].content;
  CHECK(csv.rfind("detector,rule,gamma,threshold,arl,arl_se,arl_n,arl_censored,iterations,within_tolerance\n", 0) == 0);
  CHECK(csv.find(",yes\n") != std::string::npos);
  CHECK(r.report.find("ARL=") != std::string::npos);
}

TEST_CASE("commands are byte-stable across worker counts") {
  auto c = load_config(kConfigs + "/table1.json");
  c.runs.delay = 300;
  c.table.resize(6);
  const auto one = cmd_table1(c, 1);
  CHECK(cmd_table1(c, 1).files[0].content == one.files[0].content);
  CHECK(cmd_table1(c, 4).files[0].content == one.files[0].content);
  c.seed += 1;
  CHECK(cmd_table1(c, 1).files[0].content != one.files[0].content);
}

TEST_CASE("exit codes") {
  const auto out = (scratch() / "out").string();
  CHECK(run_cli("constants " + kConfigs + "/constants.json --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "constants.csv"));
  CHECK(run_cli("constants " + write_temp("bad.json", "{oops") + " --out " + out) == 1);
  CHECK(run_cli("constants /nonexistent/config.json") == 1);
  CHECK(run_cli("frobnicate x") == 1);
  CHECK(run_cli("constants " + kConfigs + "/constants.json --workers 0") == 1);
  const auto hopeless = write_temp("hopeless.json", R"({"model": {"sensors": 1, "theta": 1.0},
    "detectors": [{"rule": "oracle", "subset": [1]}], "gammas": [1000], "horizon": 20})");
  CHECK(run_cli("calibrate " + hopeless + " --out " + out) == 2);
}

TEST_CASE("sweep rows quote subset cells") {
  auto c = load_config(kConfigs + "/sweep_small.json");
  c.runs = {100, 200, 100};
  const auto csv = cmd_sweep(c, 1).files[0].content;
  CHECK(csv.find(",\"{1,2}\",") != std::string::npos);
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(csv_fields(line) == csv_fields(header));
    ++rows;
  }
  CHECK(rows == 4 * 2 * 2);
}
