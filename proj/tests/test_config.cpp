#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "billiards/errors.hpp"
#include "run_config.hpp"

using namespace billiards;
namespace fs = std::filesystem;

namespace {

const fs::path configs = BILLIARDS_CONFIG_DIR;
const fs::path golden = BILLIARDS_GOLDEN_DIR;

ErrorKind kind_of(const fs::path& p) {
  try {
    cli::load_config(p);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error for " << p);
  return ErrorKind::io_error;
}

fs::path scratch(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / ("billiards_cfg_" + name + ".ini");
  std::ofstream(p) << body;
  return p;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream s(line);
    std::vector<double> row;
    double v;
    while (s >> v) row.push_back(v);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("shipped configs load") {
  for (const auto& e : fs::directory_iterator(configs)) {
    if (e.path().extension() != ".ini") continue;
    CAPTURE(e.path());
    if (e.path().stem() == "bad_slit") {
      CHECK(kind_of(e.path()) == ErrorKind::invalid_geometry);
    } else {
      CHECK_NOTHROW(cli::load_config(e.path()));
    }
  }
}

TEST_CASE("config errors") {
  CHECK(kind_of("/nonexistent/x.ini") == ErrorKind::config_error);
  CHECK(kind_of(scratch("nokind", "[domain]\na = 1\n")) == ErrorKind::config_error);
  CHECK(kind_of(scratch("badkind", "[domain]\nkind = hexagon\n")) == ErrorKind::config_error);
  CHECK(kind_of(scratch("badnum", "[domain]\nkind = torus\n[solver]\nnx = abc\n")) == ErrorKind::config_error);
  CHECK(kind_of(scratch("smallnx", "[domain]\nkind = torus\n[solver]\nnx = 4\n")) == ErrorKind::config_error);
  CHECK(kind_of(scratch("bands", "[domain]\nkind = torus\n[analysis]\nbands = 0 1 0\n")) == ErrorKind::config_error);
  CHECK(kind_of(scratch("dir0", "[domain]\nkind = torus\n[trajectory]\nx = 0.1\ny = 0.1\nm = 0\nn = 0\n")) ==
        ErrorKind::config_error);
  CHECK(kind_of(scratch("disk", "[domain]\nkind = sinai\nr = 0.6\n")) == ErrorKind::invalid_geometry);
}

TEST_CASE("config values reach the run") {
  const auto c = cli::load_config(scratch("values",
                                          "[run]\nseed = 7\n[domain]\nkind = torus\n[solver]\nnx = 32\nny = 48\n"
                                          "count = 5\n[trajectory]\nx = 0.1\ny = 0.2\nm = 1\nn = 3\n"
                                          "[analysis]\ncontrol_j = 2 4\npx = 16\n"));
  CHECK(c.seed == 7);
  CHECK(c.window.solver.seed == 7);
  CHECK(c.window.nx == 32);
  CHECK(c.window.ny == 48);
  CHECK(c.window.count == 5);
  REQUIRE(c.trajectory);
  CHECK(c.trajectory->origin.y == doctest::Approx(0.2));
  CHECK(c.control_js == std::vector<int>{2, 4});
  CHECK(c.phase.py == 16);
  CHECK(c.tube.phase.px == 16);
}

TEST_CASE("small sinai report matches golden file") {
  const auto c = cli::load_config(configs / "sinai_small.ini");
  const auto rep = verify_sinai(c.domain, c.eps, c.window);
  const auto ref = read_csv(golden / "sinai_small.csv");
  REQUIRE(ref.size() == rep.rows.size());
  CHECK(rep.verdict == Verdict::pass);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CAPTURE(k);
    CHECK(rep.rows[k].lambda == doctest::Approx(ref[k][0]).epsilon(1e-8));
    CHECK(std::abs(rep.rows[k].ratio - ref[k][4]) < 1e-6);
  }
}
