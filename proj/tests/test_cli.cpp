#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "rruc/cli.hpp"
#include "rruc/fleet.hpp"
#include "rruc/text.hpp"
#include "test_support.hpp"

using namespace rruc;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "rruc_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

fs::path two_unit_fleet() {
    const fs::path p = scratch("two.csv");
    write_file(p,
               "id,p_min_mw,p_max_mw,a_usd_per_mw2h,b_usd_per_mwh,c_usd_per_h\n"
               "g1,10,100,0.01,10,50\n"
               "g2,10,150,0.02,12,40\n");
    return p;
}

}  // namespace

TEST_CASE("solve writes u, p and objective") {
    const auto fleet = two_unit_fleet();
    const auto out = scratch("solve.json");
    const auto r = cli({"solve", "--fleet", fleet.string(), "--out", out.string(), "--demand", "80"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(read_file(out));
    CHECK(j["solution"]["u"].size() == 2);
    CHECK(j["solution"]["p_mw"].size() == 2);
    CHECK(j["solution"]["objective_usd_per_h"].get<double>() > 0.0);
    CHECK(j["config"]["demand_mw"].get<double>() == 80.0);
    CHECK(j["config"]["sigma_d_mw"].get<double>() == doctest::Approx(1.6));
    CHECK(j["config"].contains("stride"));
    CHECK(j["config"].contains("threads"));
    CHECK(fs::exists(fs::path(out.string() + ".meta.json")));
}

TEST_CASE("infeasible fleet exits 1 and names the reserve") {
    const auto fleet = two_unit_fleet();
    const auto r = cli({"solve", "--fleet", fleet.string(), "--out", scratch("x.json").string(), "--demand", "200"});
    CHECK(r.code == kExitInfeasible);
    CHECK(r.err.find("reserve") != std::string::npos);
}

TEST_CASE("input errors exit 2") {
    CHECK(cli({"solve", "--fleet", "/nonexistent.csv", "--out", "x.json"}).code == kExitInputError);
    CHECK(cli({"bogus"}).code == kExitInputError);
    const auto bad = scratch("bad.csv");
    write_file(bad, "id,p_min_mw,p_max_mw,a_usd_per_mw2h,b_usd_per_mwh,c_usd_per_h\ng1,100,10,0,1,1\n");
    CHECK(cli({"solve", "--fleet", bad.string(), "--out", scratch("y.json").string()}).code == kExitInputError);
    const auto big = scratch("big.csv");
    save_fleet(testing::random_fleet(25, 3), big, FleetFormat::Csv);
    CHECK(cli({"compare", "--fleet", big.string(), "--out", scratch("z.json").string()}).code == kExitInputError);
}

TEST_CASE("compare reports a non-negative deviation") {
    const auto fleet = scratch("ten.json");
    save_fleet(testing::random_fleet(10, 123), fleet, FleetFormat::Json);
    const auto out = scratch("compare.json");
    const auto r = cli({"compare", "--fleet", fleet.string(), "--out", out.string()});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(read_file(out));
    CHECK(j["deviation"].get<double>() >= -1e-9);
    CHECK(j["rruc"]["objective_usd_per_h"].get<double>() >= j["oracle"]["objective_usd_per_h"].get<double>() * (1 - 1e-6));
}

TEST_CASE("repeated runs produce byte-identical outputs") {
    const auto fleet = scratch("rep_base.csv");
    save_fleet(testing::random_fleet(12, 9), fleet, FleetFormat::Csv);
    std::string first;
    for (const char* threads : {"1", "4"}) {
        const auto rep = scratch("rep.csv");
        REQUIRE(cli({"replicate", "--fleet", fleet.string(), "--out", rep.string(), "--multiplier", "3"}).code == kExitOk);
        const auto out = scratch("rep_solve.json");
        REQUIRE(cli({"solve", "--fleet", rep.string(), "--out", out.string(), "--threads", threads}).code == kExitOk);
        auto j = nlohmann::json::parse(read_file(out));
        j["config"].erase("threads");
        const std::string text = read_file(rep) + j.dump();
        if (first.empty())
            first = text;
        else
            CHECK(text == first);
    }

    const auto sweep1 = scratch("sweep1.csv"), sweep2 = scratch("sweep2.csv");
    for (const auto& p : {sweep1, sweep2})
        REQUIRE(cli({"sweep-stats", "--fleet", fleet.string(), "--out", p.string(), "--load-start", "100",
                     "--load-step", "100", "--load-end", "600"})
                    .code == kExitOk);
    CHECK(read_file(sweep1) == read_file(sweep2));
}

TEST_CASE("bench and fit commands") {
    const auto fleet = scratch("bench_base.json");
    save_fleet(testing::random_fleet(6, 44), fleet, FleetFormat::Json);
    const auto out = scratch("bench.csv");
    REQUIRE(cli({"bench", "--fleet", fleet.string(), "--out", out.string(), "--multipliers", "1,2", "--methods",
                 "rruc,oracle", "--trials", "1", "--warmup", "0"})
                .code == kExitOk);
    const auto csv = read_file(out);
    CHECK(csv.rfind("n_units,method,wall_time,objective,deviation\n", 0) == 0);
    CHECK(cli({"bench", "--fleet", fleet.string(), "--out", out.string(), "--methods", "mip"}).code ==
          kExitInputError);

    const auto curves = scratch("curves.json");
    write_file(curves,
               R"([{"id":"u1","no_load_cost_usd_per_h":250,"startup_usd":1000,"eco_min_mw":10,"eco_max_mw":100,)"
               R"("steps":[{"mw":50,"price_usd_per_mwh":20},{"mw":100,"price_usd_per_mwh":20}]}])");
    const auto fitted = scratch("fitted.csv");
    REQUIRE(cli({"fit", "--curves", curves.string(), "--out", fitted.string()}).code == kExitOk);
    const Fleet f = load_fleet(fitted, FleetFormat::Csv);
    REQUIRE(f.size() == 1);
    // Constant price: the fit is exact with a = 0.
    CHECK(f.generators[0].a == doctest::Approx(0.0));
    CHECK(f.generators[0].b == doctest::Approx(20.0));
    CHECK(f.generators[0].c == doctest::Approx(250.0));
}

#ifdef RRUC_CLI_PATH
TEST_CASE("binary help and exit status") {
    const std::string bin = RRUC_CLI_PATH;
    const auto help = scratch("help.txt");
    CHECK(std::system((bin + " solve --help > " + help.string()).c_str()) == 0);
    const auto text = read_file(help);
    CHECK(text.find("MW") != std::string::npos);
    const int status = std::system((bin + " solve --fleet /nonexistent.csv --out x.json 2>/dev/null").c_str());
    CHECK(WEXITSTATUS(status) == kExitInputError);
}
#endif
