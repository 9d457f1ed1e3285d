#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "narrowlab/cli.hpp"

using namespace narrowlab;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "narrowlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path tmp() {
  const char* env = std::getenv("NARROWLAB_TEST_TMP");
  fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "narrowlab_cli";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("lindex") {
  auto r = run({"lindex", "--family", "first", "--k", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("L = 4") != std::string::npos);
  r = run({"lindex", "--k", "1", "--family", "first"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--k") != std::string::npos);
  r = run({"lindex", "--family", "third", "--k", "3", "--j", "1", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["L"] == "2/1");
  CHECK(j.contains("witness_atoms"));
  CHECK(j.contains("codim"));
  CHECK(j.contains("subspaces_explored"));
}

TEST_CASE("singular prints JSON") {
  const auto r = run({"singular", "--h", "0,2"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["value"].get<double>() == doctest::Approx(1.3203).epsilon(1e-4));
  CHECK(j["zero"] == false);
  CHECK(j.contains("pmax"));
  CHECK(j.contains("tail_bound"));
  CHECK(run({"singular", "--h", "0,1"}).code == 0);
  // delta has the prime 1000003 > pmax: a computation error, not a usage error
  CHECK(run({"singular", "--h", "0,2000006", "--pmax", "1000"}).code == 1);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"lindex", "--bogus", "1"}).code == 2);
  auto r = run({"lambda-d", "--N", "abc"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--N") != std::string::npos);
  CHECK(run({"lambda-d", "--N", "101", "--D", "200"}).code == 2);
  CHECK(run({"lfc", "--alpha", "1.5"}).code == 2);
  CHECK(run({"lindex", "--format", "xml"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"--version"}).code == 0);
}

TEST_CASE("config files") {
  const auto cfg = tmp() / "lindex.cfg";
  {
    std::ofstream f(cfg);
    f << "# collision index\nfamily = second\nk = 3\n";
  }
  auto r = run({"lindex", "--config", cfg.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("L = 4") != std::string::npos);
  // flags win over the file
  r = run({"lindex", "--config", cfg.string(), "--k", "2"});
  CHECK(r.out.find("L = 2") != std::string::npos);
  {
    std::ofstream f(cfg);
    f << "family = second\nwidth = 3\n";
  }
  r = run({"lindex", "--config", cfg.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("width") != std::string::npos);
  CHECK(run({"lindex", "--config", (tmp() / "missing.cfg").string()}).code == 2);
}

TEST_CASE("reports are reproducible") {
  const auto a = tmp() / "a.csv", b = tmp() / "b.csv";
  const std::vector<std::string> args{"lfc", "--family", "first", "--k", "2", "--model", "random", "--alpha", "0.2",
                                      "--S", "20", "--samples", "300000", "--seed", "5"};
  auto with_out = [&](const fs::path& p) {
    auto v = args;
    v.push_back("--out");
    v.push_back(p.string());
    return v;
  };
  REQUIRE(run(with_out(a)).code == 0);
  REQUIRE(run(with_out(b)).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("# narrowlab", 0) == 0);
  CHECK(slurp(a).find("# seed=5") != std::string::npos);

  // result is independent of the worker count
  const auto j1 = tmp() / "w1.json", j3 = tmp() / "w3.json";
  auto v1 = with_out(j1), v3 = with_out(j3);
  v3.push_back("--workers");
  v3.push_back("3");
  REQUIRE(run(v1).code == 0);
  REQUIRE(run(v3).code == 0);
  const auto r1 = nlohmann::json::parse(slurp(j1)), r3 = nlohmann::json::parse(slurp(j3));
  CHECK(r1["result"] == r3["result"]);
  CHECK(r3["header"]["workers"] == "3");
}

TEST_CASE("caches") {
  const auto dir = tmp() / "cache";
  fs::remove_all(dir);
  setenv("NARROWLAB_CACHE_DIR", dir.string().c_str(), 1);
  auto r = run({"sieve-build", "--limit", "1e6", "--verify"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "sieve_1000000.napsv"));

  r = run({"majorant", "--N", "1e5+3", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto built = nlohmann::json::parse(r.out);
  r = run({"majorant", "--N", "1e5+3", "--format", "json"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["mean"] == built["mean"]);

  // a damaged cache is a computation error
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".napmv") fs::resize_file(e.path(), 100);
  }
  r = run({"majorant", "--N", "1e5+3"});
  CHECK(r.code == 1);
  CHECK(run({"majorant", "--N", "1e5+3", "--no-cache"}).code == 0);
  unsetenv("NARROWLAB_CACHE_DIR");
  CHECK(run({"sieve-build", "--limit", "100"}).code == 2);
}

TEST_CASE("every subcommand runs") {
  CHECK(run({"forms-dump", "--family", "first", "--k", "2"}).code == 0);
  CHECK(run({"gallagher", "--H", "40", "--w", "2,3"}).code == 0);
  CHECK(run({"correlate", "--N", "10007", "--h", "6"}).code == 0);
  CHECK(run({"majorant", "--N", "10007", "--check-floor", "--no-cache"}).code == 0);
  CHECK(run({"lfc", "--family", "third", "--k", "3", "--model", "majorant", "--N", "10007", "--S", "5", "--samples", "1000",
             "--no-cache"})
            .code == 0);
  CHECK(run({"threshold", "--family", "third", "--k", "3"}).code == 0);
  CHECK(run({"lambda-d", "--N", "1009", "--D", "50"}).code == 0);
  CHECK(run({"apsearch", "--N", "1e5", "--k", "3", "--d", "6"}).code == 0);
  CHECK(run({"apsearch", "--mode", "narrowness", "--ladder", "1e4,1e5", "--subset-mod", "3", "--subset-res", "1"}).code == 0);
  CHECK(run({"cutoff-check", "--kind", "cosine", "--m", "2"}).code == 0);
}
