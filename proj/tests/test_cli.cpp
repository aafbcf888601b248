#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qsd/cli.hpp"
#include "qsd/errors.hpp"

using namespace qsd;
using namespace qsd::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "qsd_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::string& command, KeyValues flags, const std::optional<std::string>& config = {})
{
    std::ostringstream out, err;
    const int code = run_command(command, flags, config, out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("key=value parsing")
{
    std::istringstream in("# comment\n\nmodel = cusum\nthreshold=7.5\n");
    const auto kv = parse_key_values(in);
    CHECK(kv.at("model") == "cusum");
    CHECK(kv.at("threshold") == "7.5");
    std::istringstream bad("model cusum\n");
    CHECK_THROWS_AS(parse_key_values(bad), ConfigError);
}

TEST_CASE("field parsers")
{
    CHECK(parse_y_factors("1,2,4,8") == std::vector<double>{1, 2, 4, 8});
    CHECK_THROWS_AS(parse_y_factors("1,4,2"), ConfigError);
    CHECK_THROWS_AS(parse_y_factors("2,4"), ConfigError);
    CHECK(parse_phi("power:0.5").describe() == "power:0.5");
    CHECK(parse_phi("max-one").describe() == "max-one");
    CHECK_THROWS_AS(parse_phi("power"), ConfigError);
    CHECK_THROWS_AS(parse_phi("affine:-1"), ConfigError);
    CHECK(parse_innovation("lr-gaussian:1:post").describe() == "lr-gaussian:1:post");
    CHECK_THROWS_AS(parse_innovation("lognormal:0"), ConfigError);
    CHECK_THROWS_AS(parse_innovation("lr-gaussian:1:during"), ConfigError);
    const auto g = parse_grid("uniform:50:0.5");
    CHECK(g.kind == GridKind::uniform);
    CHECK(g.n_cells == 50);
    CHECK(g.lower == 0.5);
    CHECK_THROWS_AS(parse_grid("geometric:1"), ConfigError);
    CHECK_THROWS_AS(parse_grid("geometric:10:0"), ConfigError);
    CHECK_THROWS_AS(parse_grid("chebyshev:10"), ConfigError);
}

TEST_CASE("config validation names the failing field")
{
    try {
        resolve_config("solve", {}, {{"threshold", "5"}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "model");
    }
    CHECK_THROWS_AS(resolve_config("solve", {}, {{"model", "cusum"}, {"threshold", "1.0"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("simulate", {}, {{"model", "cusum"}, {"reps", "1"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("solve", {}, {{"model", "cusum"}, {"bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("solve", {}, {{"model", "cusum"}, {"tol", "0"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config("solve", {}, {{"model", "inline"}, {"phi", "max-one"}}), ConfigError);

    const auto c = resolve_config("solve", {{"model", "cusum"}, {"threshold", "9"}}, {{"threshold", "12"}});
    CHECK(c.threshold == 12.0);
    CHECK(c.model == "cusum");

    // check-conditions works without a threshold.
    const auto cc = resolve_config("check-conditions", {},
                                   {{"model", "inline"}, {"phi", "power:2"}, {"innovation", "lognormal:0:1"}});
    CHECK_FALSE(cc.threshold.has_value());
}

TEST_CASE("manifest round-trips through resolve_config")
{
    const auto c = resolve_config("simulate", {},
                                  {{"model", "shiryaev-roberts"}, {"threshold", "7.389"}, {"seed", "42"},
                                   {"couple", "1.5"}, {"grid", "uniform:64:0.25"}});
    KeyValues kv;
    for (const auto& [k, v] : c.manifest()) {
        kv[k] = v;
    }
    const auto back = resolve_config("simulate", kv, {});
    CHECK(back.manifest() == c.manifest());
    CHECK(back.mc.seed == 42);
    CHECK(back.couple == 1.5);
}

TEST_CASE("exit codes")
{
    const std::string out = scratch("codes").string();
    CHECK(run("solve", {{"threshold", "5"}, {"out", out}}).code == kConfigError);
    CHECK(run("solve", {{"model", "cusum"}, {"threshold", "1.0"}, {"out", out}}).code == kConfigError);
    CHECK(run("simulate", {{"model", "cusum"}, {"reps", "1"}, {"out", out}}).code == kConfigError);
    CHECK(run("sweep", {{"model", "cusum"}, {"y_factors", "1,4,2"}, {"out", out}}).code == kConfigError);
    CHECK(run("check-conditions", {{"model", "inline"}, {"phi", "pow:2"}, {"out", out}}).code == kConfigError);

    const auto missing = run("solve", {{"threshold", "5"}, {"out", out}});
    CHECK(missing.err.find("model") != std::string::npos);

    const auto p2 = run("check-conditions",
                        {{"model", "inline"}, {"phi", "power:2"}, {"innovation", "lognormal:0:1"}, {"out", out}});
    CHECK(p2.code == kConditionFailed);
    const auto csv = slurp(out + ".conditions.csv");
    CHECK(csv.find("condition_id,passed,worst_violation,witness\n") == 0);
    CHECK(csv.find("\nD4,false,") != std::string::npos);

    CHECK(run("check-conditions", {{"model", "cusum"}, {"out", out}}).code == kOk);

    const auto capped = run("solve", {{"model", "shiryaev-roberts"}, {"max_iter", "3"}, {"out", out}});
    CHECK(capped.code == kNotConverged);
}

TEST_CASE("solve writes its files")
{
    const std::string out = scratch("sr").string();
    const auto r = run("solve", {{"model", "shiryaev-roberts"}, {"threshold", "7.389"}, {"grid", "geometric:400"},
                                 {"out", out}});
    REQUIRE(r.code == kOk);
    CHECK(r.out.find("qsd_vs_conditioned_l1") != std::string::npos);
    const auto qsd = slurp(out + ".qsd.csv");
    CHECK(qsd.find("x_edge,cdf,cell_mass\n") == 0);
    CHECK(std::count(qsd.begin(), qsd.end(), '\n') == 402);
    const auto result = slurp(out + ".result");
    for (const char* key : {"lambda=", "expected_exit_time=", "iterations=", "residual=", "converged=true",
                            "qsd_vs_conditioned_l1="}) {
        CHECK(result.find(key) != std::string::npos);
    }
    CHECK(fs::exists(out + ".manifest"));
}

TEST_CASE("simulate is reproducible and reruns from its manifest")
{
    const std::string out = scratch("mc").string();
    const KeyValues flags{{"model", "cusum"}, {"threshold", "7.389"}, {"reps", "2000"}, {"grid", "geometric:100"},
                          {"couple", "2"}, {"paths", "100"}, {"steps", "20"}, {"out", out}};
    REQUIRE(run("simulate", flags).code == kOk);
    const auto hist = slurp(out + ".mc.csv");
    const auto res = slurp(out + ".mc.result");
    const auto coup = slurp(out + ".coupling.result");
    CHECK(hist.find("t,count\n") == 0);
    CHECK(res.find("geometric_fit_passed=") != std::string::npos);
    CHECK(coup.find("violations=0\n") != std::string::npos);

    const auto manifest = (fs::path(out + ".manifest")).string();
    const auto saved = scratch("mc.saved.manifest").string();
    fs::copy_file(manifest, saved, fs::copy_options::overwrite_existing);
    REQUIRE(run("simulate", {}, saved).code == kOk);
    CHECK(slurp(out + ".mc.csv") == hist);
    CHECK(slurp(out + ".mc.result") == res);
    CHECK(slurp(out + ".coupling.result") == coup);
    CHECK(slurp(out + ".manifest") == slurp(saved));
}

TEST_CASE("sweep writes one CSV row per factor")
{
    const std::string out = scratch("sweep").string();
    const auto r = run("sweep", {{"model", "shiryaev-roberts"}, {"grid", "geometric:100"}, {"out", out}});
    CHECK(r.code == kOk);
    const auto csv = slurp(out + ".sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(r.out.find("monotone=true") != std::string::npos);
}
