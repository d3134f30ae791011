#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kOut = fs::path(CANARD_TEST_TMP) / "cli";

int run(const std::string& args) {
  const std::string cmd = std::string(CANARD_CLI) + " " + args + " > " + (kOut / "stdout.txt").string() + " 2> " +
                          (kOut / "stderr.txt").string();
  fs::create_directories(kOut);
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kConfig = std::string("--config ") + CANARD_CONFIG_DIR + "/example_a3.cfg";

}  // namespace

TEST_CASE("canard at eps = 0.1 succeeds and writes its outputs") {
  const fs::path dir = kOut / "canard";
  REQUIRE(run("canard " + kConfig + " --epsilon 0.1 --out " + dir.string()) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "canard.json"));
  CHECK(j["case"] == "Case1");
  CHECK(j["inside"] == true);
  CHECK(j["closure_error"].get<double>() <= 1e-6);
  CHECK(j["config"]["numerics"]["epsilon"].get<double>() == 0.1);
  const std::string csv = slurp(dir / "canard_orbit.csv");
  CHECK(csv.rfind("t,x,y,z\n", 0) == 0);
  CHECK(fs::exists(dir / "canard.svg"));
}

TEST_CASE("reduced below a0 exits 1 with a NoIntersection diagnostic") {
  CHECK(run("reduced " + kConfig + " --param a=1.5 --out " + (kOut / "r").string()) == 1);
  CHECK(slurp(kOut / "stderr.txt").find("NoIntersection") != std::string::npos);
}

TEST_CASE("usage and config errors exit 2") {
  CHECK(run("canard --config /no/such/file.json") == 2);
  CHECK(run("no-such-subcommand") == 2);
  CHECK(run("canard " + kConfig + " --param a") == 2);
  CHECK(run("canard " + kConfig + " --epsilon -1 --json") == 2);
  const auto j = nlohmann::json::parse(slurp(kOut / "stdout.txt"));
  CHECK(j["exit_code"] == 2);
  const fs::path bad = kOut / "bad.json";
  std::ofstream(bad) << R"({"numerics": {"epsilom": 0.1}})";
  CHECK(run("canard --config " + bad.string()) == 2);
  CHECK(slurp(kOut / "stderr.txt").find("epsilom") != std::string::npos);
}

TEST_CASE("identical runs give byte-identical outputs") {
  const fs::path dir = kOut / "det";
  REQUIRE(run("map " + kConfig + " --grid 5 --out " + dir.string()) == 0);
  const std::string a = slurp(dir / "map.csv"), aj = slurp(dir / "map.json");
  REQUIRE(run("map " + kConfig + " --grid 5 --out " + dir.string()) == 0);
  CHECK(slurp(dir / "map.csv") == a);
  CHECK(slurp(dir / "map.json") == aj);
  CHECK(a.rfind("u0,v0,s_eps,case,x_img,y_img,u_img,v_img\n", 0) == 0);
}

TEST_CASE("numbers in CSV carry 17 significant digits") {
  const fs::path dir = kOut / "sim";
  REQUIRE(run("simulate " + kConfig + " --x0 -1 --y0 0.2 --t1 0.5 --out " + dir.string()) == 0);
  std::istringstream in(slurp(dir / "simulate.csv"));
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  std::getline(in, line);
  const std::string first = line.substr(0, line.find(','));
  std::size_t digits = 0;
  for (char c : first.substr(0, first.find('e')))
    if (c >= '0' && c <= '9') ++digits;
  CHECK(digits >= 17);
}
