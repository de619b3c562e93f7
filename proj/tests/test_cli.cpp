#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "config.hpp"
#include "json.hpp"

using sandpile::cli::run;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST_CASE("enumerate reports count, determinant and orders") {
    const auto two = call({"enumerate", "--dims", "2"});
    CHECK(two.code == 0);
    CHECK(two.err.find("|R^o|=3 det(Delta^o)=3") != std::string::npos);
    CHECK(two.err.find("n=(3,3)") != std::string::npos);
    CHECK(two.out.find("0,1\n1,0\n1,1\n") != std::string::npos);

    const auto one = call({"enumerate", "--dims", "1"});
    CHECK(one.err.find("|R^o|=2 det(Delta^o)=2") != std::string::npos);
    const auto three = call({"enumerate", "--dims", "3"});
    CHECK(three.err.find("|R^o|=4 det(Delta^o)=4") != std::string::npos);
}

TEST_CASE("enumerate json output") {
    const auto r = call({"enumerate", "--dims", "2,2", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["summary"]["recurrent_count"] == 192);
    CHECK(doc["metadata"]["lattice_dims"] == nlohmann::json::array({2, 2}));
    CHECK(doc["sections"][0]["rows"].size() == 192);
}

TEST_CASE("capacity errors exit with code 3") {
    const auto r = call({"enumerate", "--dims", "5,5"});
    CHECK(r.code == 3);
    CHECK(r.err.find("capacity") != std::string::npos);
}

TEST_CASE("simulate is deterministic per seed") {
    const auto a = call({"simulate", "--dims", "2,2", "--steps", "500", "--seed", "9"});
    const auto b = call({"simulate", "--dims", "2,2", "--steps", "500", "--seed", "9"});
    const auto c = call({"simulate", "--dims", "2,2", "--steps", "500", "--seed", "10"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != c.out);
    CHECK(a.out.find("t,site_added,u,q0,q1,q2,q3,f0,f1,f2,f3\n") != std::string::npos);
}

TEST_CASE("simulate with zero steps echoes the initial state") {
    const auto r = call({"simulate", "--dims", "2", "--steps", "0", "--init", "[0.8,0.7]"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\n0,-1,0,1,1,0.30000000000000004,0.19999999999999996\n") != std::string::npos);
}

TEST_CASE("fixed-amount simulate reports conservation in the metadata") {
    const auto r = call({"simulate", "--dims", "2", "--a", "sqrt2-1", "--b", "sqrt2-1", "--steps", "2000"});
    CHECK(r.code == 0);
    CHECK(r.out.find("# fractional_sum_conservation=pass") != std::string::npos);
    CHECK(r.out.find("# a=sqrt2-1") != std::string::npos);
}

TEST_CASE("couple rejects a >= b") {
    const auto r = call({"couple", "--a", "0.5", "--b", "0.5"});
    CHECK(r.code == 2);
    CHECK(r.err.find("coupling requires a < b") != std::string::npos);
}

TEST_CASE("couple writes per-replica logs") {
    const auto r = call({"couple", "--dims", "2", "--replicas", "2", "--epochs", "500"});
    CHECK(r.code == 0);
    CHECK(r.out.find("# replica=0\nepoch,O_occurred,coalesced\n1,") != std::string::npos);
    CHECK(r.out.find("# replica=1\n") != std::string::npos);
}

TEST_CASE("invariance passes on the 2-site path") {
    const auto r = call({"invariance", "--dims", "2", "--samples", "100000"});
    CHECK(r.code == 0);
    CHECK(r.out.find("# pass=1") != std::string::npos);
}

TEST_CASE("limit-rational passes on a short chain") {
    const auto r = call({"limit-rational", "--dims", "2", "--a", "0.5", "--steps", "200", "--samples", "20000"});
    CHECK(r.code == 0);
    const auto bad = call({"limit-rational", "--dims", "2", "--a", "0.3"});
    CHECK(bad.code == 2);
}

TEST_CASE("fourier echoes closed-form and Monte Carlo values") {
    const auto r = call({"fourier", "--m", "1", "--N", "100", "--kmax", "1", "--samples", "20000"});
    CHECK(r.code == 0);
    CHECK(r.out.find("k0,closed_re,closed_im,mc_re,mc_im,std_error,z,bound,pass") != std::string::npos);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 3);
}

TEST_CASE("ergodic reports cell fractions") {
    const auto r = call({"ergodic", "--dims", "2", "--steps", "200000", "--samples", "20000"});
    CHECK(r.code == 0);
    CHECK(r.out.find("h0,h1,time_fraction,mu_estimate,expected,pass") != std::string::npos);
}

TEST_CASE("config file values are overridden by flags") {
    const auto path = temp_file("sandpile_cfg_ok.json",
                                "{\n  \"lattice\": {\"dims\": [3]},\n  \"steps\": 7,\n  \"seed\": 4\n}\n");
    const auto from_file = call({"simulate", "--config", path.string(), "--thin", "1"});
    REQUIRE(from_file.code == 0);
    CHECK(from_file.out.find("# lattice_dims=[3]") != std::string::npos);
    CHECK(from_file.out.find("# steps=7") != std::string::npos);
    const auto overridden = call({"simulate", "--config", path.string(), "--steps", "3"});
    CHECK(overridden.out.find("# steps=3") != std::string::npos);
    CHECK(overridden.out.find("# seed=4") != std::string::npos);
}

TEST_CASE("config errors carry the line and exit with code 2") {
    const auto path = temp_file("sandpile_cfg_bad.json", "{\n  \"lattice\": {\"dims\": [2]},\n  \"a\": 1.5\n}\n");
    const auto r = call({"simulate", "--config", path.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find(":3:") != std::string::npos);

    const auto unknown = temp_file("sandpile_cfg_unknown.json", "{\n  \"stepz\": 3\n}\n");
    const auto u = call({"simulate", "--config", unknown.string()});
    CHECK(u.code == 2);
    CHECK(u.err.find(":2:") != std::string::npos);
}

TEST_CASE("flag validation") {
    CHECK(call({"simulate", "--dims", "0"}).code == 2);
    CHECK(call({"simulate", "--a", "abc"}).code == 2);
    CHECK(call({"simulate", "--a", "0.9", "--b", "0.1"}).code == 2);
    CHECK(call({"simulate", "--init", "[1.2, 0.1]"}).code == 2);
    CHECK(call({"simulate", "--init", "[0.1]"}).code == 2);
    CHECK(call({"simulate", "--init", "warm"}).code == 2);
    CHECK(call({"simulate", "--format", "xml"}).code == 2);
    CHECK(call({"simulate", "--bogus"}).code == 2);
    CHECK(call({}).code == 2);
}

TEST_CASE("init accepts decomposed arrays and mu") {
    CHECK(call({"simulate", "--dims", "2", "--steps", "5", "--init", R"({"quanta":[1,1],"frac":[0.1,0.2]})"}).code == 0);
    CHECK(call({"simulate", "--dims", "2", "--steps", "5", "--init", "mu"}).code == 0);
    CHECK(call({"simulate", "--dims", "2", "--steps", "5", "--init", "max"}).code == 0);
}

TEST_CASE("output file") {
    const auto path = std::filesystem::temp_directory_path() / "sandpile_enum.csv";
    std::filesystem::remove(path);
    const auto r = call({"enumerate", "--dims", "2", "--out", path.string()});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first == "# command=enumerate");
}

TEST_CASE("real parsing is locale independent") {
    bool irrational = false;
    CHECK(sandpile::cli::parse_real("0.25") == 0.25);
    CHECK(sandpile::cli::parse_real("sqrt2-1", &irrational) == doctest::Approx(0.41421356237309503));
    CHECK(irrational);
    CHECK_THROWS_AS(sandpile::cli::parse_real("0,25"), sandpile::cli::ConfigError);
}
