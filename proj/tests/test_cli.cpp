#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "logdiam/cli.hpp"
#include "logdiam/modarith.hpp"

using namespace logdiam;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "logdiam");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("logdiam_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string read(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string sl2() { return write("sl2.json", R"({"kind":"SL","dims":[2],"generators":[[[1,1],[0,1]],[[1,0],[1,1]]],"close_symmetric":true})"); }

std::string sa2() {
  return write("sa2.json", R"({"kind":"SA","dims":[2],"close_symmetric":true,"generators":[
    {"linear":[[1,1],[0,1]],"trans":[0,0]},{"linear":[[1,0],[1,1]],"trans":[0,0]},
    {"linear":[[1,0],[0,1]],"trans":[1,0]},{"linear":[[1,0],[0,1]],"trans":[0,1]}]})");
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("q lists") {
  CHECK(parse_q_list("2..5") == std::vector<u64>{2, 3, 4, 5});
  CHECK(parse_q_list("7") == std::vector<u64>{7});
  CHECK(parse_q_list("2,3..4,9") == std::vector<u64>{2, 3, 4, 9});
  CHECK_THROWS_AS(parse_q_list("0"), ConfigError);
  CHECK_THROWS_AS(parse_q_list("5..2"), ConfigError);
  CHECK_THROWS_AS(parse_q_list("x"), ConfigError);
  CHECK_THROWS_AS(parse_q_list(""), ConfigError);
}

TEST_CASE("diam") {
  const auto spec = sl2();
  const std::string csv = (scratch() / "scan.csv").string();
  const auto r = run({"diam", "--spec", spec, "--q", "2..64", "--out", csv, "--stable"});
  REQUIRE(r.code == exit_ok);
  const std::string text = read(csv);
  CHECK(count_lines(text) == 64);
  CHECK(text.rfind("q,|Xq|,diam,ratio,ms\n2,6,3,", 0) == 0);
  const json summary = json::parse(read(csv + ".summary.json"));
  CHECK(summary.contains("fitted_c"));
  CHECK(summary.contains("argmax_q"));

  const auto one = run({"diam", "--spec", spec, "--q", "1", "--stable"});
  CHECK(one.code == exit_ok);
  CHECK(one.out == "q,|Xq|,diam,ratio,ms\n1,1,0,,0.000\n");

  const auto a = run({"diam", "--spec", spec, "--q", "2..20", "--stable", "--threads", "1"});
  const auto b = run({"diam", "--spec", spec, "--q", "2..20", "--stable", "--threads", "3"});
  CHECK(a.out == b.out);
  CHECK(a.err == b.err);

  CHECK(run({"diam", "--spec", (scratch() / "missing.json").string(), "--q", "2"}).code == exit_config);
  CHECK(run({"diam", "--spec", spec, "--q", "0"}).code == exit_config);
  CHECK(run({"diam", "--spec", write("bad.json", "{not json"), "--q", "2"}).code == exit_config);
  const auto budget = run({"diam", "--spec", spec, "--q", "2..3", "--budget-mem", "100", "--stable"});
  CHECK(budget.code == exit_budget);
  CHECK(budget.err.find("q = 2") != std::string::npos);
}

TEST_CASE("argument errors") {
  CHECK(run({}).code == exit_config);
  CHECK(run({"frobnicate"}).code == exit_config);
  CHECK(run({"diam", "--q", "2"}).code == exit_config);
  CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("surjectivity") {
  const auto r = run({"surjectivity", "--spec", sl2(), "--q", "2..4"});
  CHECK(r.code == exit_ok);
  CHECK(r.out == "q,order,closure,surjective\n2,6,6,true\n3,24,24,true\n4,48,48,true\n");
  const auto t = write("t.json", R"({"kind":"SL","dims":[2],"generators":[[[1,1],[0,1]]],"close_symmetric":true})");
  CHECK(run({"surjectivity", "--spec", t, "--q", "5"}).out == "q,order,closure,surjective\n5,120,5,false\n");
}

TEST_CASE("check-seed") {
  const auto r = run({"check-seed", "--q", "243", "--L", "2", "--rng-seed", "4"});
  CHECK(r.code == exit_ok);
  const json j = json::parse(r.out);
  CHECK(j["g0_check"]["ok"] == true);
  CHECK(j["g0p_check"]["ok"] == true);

  const auto good = write("seeds.json", R"({"g0":[[2,9],[3,14]],"g0p":[[2,3],[9,14]]})");
  CHECK(run({"check-seed", "--q", "243", "--seeds", good}).code == exit_ok);
  const auto bad = write("badseeds.json", R"({"g0":[[1,0],[0,1]],"g0p":[[2,3],[9,14]]})");
  const auto rb = run({"check-seed", "--q", "243", "--seeds", bad});
  CHECK(rb.code == exit_verify);
  CHECK(json::parse(rb.out)["g0_check"]["ok"] == false);
  CHECK(run({"check-seed", "--q", "243", "--seeds", write("noseeds.json", "{}")}).code == exit_config);
}

TEST_CASE("decompose") {
  const auto seeds = write("seeds.json", R"({"g0":[[2,9],[3,14]],"g0p":[[2,3],[9,14]]})");
  const auto id = run({"decompose", "--q", "243", "--seeds", seeds});
  CHECK(id.code == exit_ok);
  CHECK(json::parse(id.out)["length"] == 0);

  // [[82, 81], [81, d]] with d = (1 + 81^2) / 82 mod 243
  const u64 d = mul_mod(1 + 81 * 81 % 243, inv_mod(82, 243), 243);
  const auto target = write("target.json", "[[82,81],[81," + std::to_string(d) + "]]");
  const auto cert = (scratch() / "dec.json").string();
  const auto r = run({"decompose", "--q", "243", "--L", "2", "--seeds", seeds, "--target", target, "--out", cert});
  REQUIRE(r.code == exit_ok);
  json j = json::parse(read(cert));
  CHECK(j["verified"] == true);
  CHECK(j["length"].get<int>() <= 12);
  CHECK(run({"decompose", "--verify", cert}).code == exit_ok);

  j["target"][0][1] = 0;
  j["target"][1][1] = 1;
  j["target"][0][0] = 1;
  j["target"][1][0] = 81;
  const auto tampered = write("tampered.json", j.dump());
  CHECK(run({"decompose", "--verify", tampered}).code == exit_verify);

  const auto far = write("far.json", "[[1,1],[0,1]]");
  const auto rf = run({"decompose", "--q", "243", "--seeds", seeds, "--target", far});
  CHECK(rf.code == exit_config);
  CHECK(rf.err.find("not I mod q2 = 81") != std::string::npos);
}

TEST_CASE("certify") {
  const auto spec = sa2();
  const auto id = run({"certify", "--spec", spec, "--q", "243", "--L", "2"});
  REQUIRE(id.code == exit_ok);
  CHECK(json::parse(id.out)["certificate"]["length"] == 0);

  const auto cert = (scratch() / "cert.json").string();
  const auto r = run({"certify", "--spec", spec, "--q", "243", "--L", "2", "--target", "random", "--rng-seed", "2", "--out", cert});
  REQUIRE(r.code == exit_ok);
  json j = json::parse(read(cert));
  CHECK(j["verified"] == true);
  CHECK(j["certificate"]["accounting"]["within"] == true);
  CHECK(run({"certify", "--verify", cert}).code == exit_ok);

  // the stored kit replays as a seeds file
  const auto kit = write("kit.json", j["kit"].dump());
  const auto again = run({"certify", "--spec", spec, "--q", "243", "--seeds", kit, "--target", "random", "--rng-seed", "2"});
  CHECK(again.code == exit_ok);
  CHECK(json::parse(again.out)["certificate"]["word"] == j["certificate"]["word"]);

  j["certificate"]["word"].push_back(0);
  j["certificate"]["length"] = j["certificate"]["word"].size();
  CHECK(run({"certify", "--verify", write("bad_cert.json", j.dump())}).code == exit_verify);

  const auto budget = run({"certify", "--spec", spec, "--q", "243", "--budget-mem", "20000"});
  CHECK(budget.code == exit_budget);
  CHECK(budget.err.find("\"status\": \"budget\"") != std::string::npos);
  CHECK(run({"certify", "--spec", spec, "--q", "243", "--mode", "product"}).code == exit_config);
  CHECK(run({"certify", "--spec", sl2(), "--q", "243"}).code == exit_config);
}
