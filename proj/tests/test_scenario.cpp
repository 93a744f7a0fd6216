#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qr/errors.hpp"
#include "qr/scenario.hpp"

using qr::Scenario;

namespace {

nlohmann::json parse_json(const char* text) { return nlohmann::json::parse(text); }

Scenario tiny_equation_scenario() {
    return qr::parse_scenario(parse_json(R"({
        "name": "tiny",
        "mode": "riccati",
        "coeffs": {"a": {"components": [{"poly": [1], "exp": -1}, 0, 0, 0]}},
        "seeds": [0, 1],
        "horizon": 6,
        "checks": ["closed-form-3.2", "identity-2.7"]
    })"),
                              "tiny");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("scenario parsing validates structure") {
    CHECK_THROWS_AS((void)qr::parse_scenario(parse_json(R"({"mode": "riccati"})"), "s"),
                    qr::SchemaError);
    CHECK_THROWS_AS((void)qr::parse_scenario(parse_json(R"({"name": "x"})"), "s"),
                    qr::SchemaError);
    CHECK_THROWS_AS(
        (void)qr::parse_scenario(parse_json(R"({"name": "x", "mode": "banana"})"), "s"),
        qr::SchemaError);
    // riccati mode needs coeffs and a nonempty seed list
    CHECK_THROWS_AS((void)qr::parse_scenario(
                        parse_json(R"({"name": "x", "mode": "riccati", "checks": []})"), "s"),
                    qr::SchemaError);
    CHECK_THROWS_AS(
        (void)qr::parse_scenario(
            parse_json(
                R"({"name": "x", "mode": "riccati", "coeffs": {"a": {"const": 1}}, "seeds": [], "checks": []})"),
            "s"),
        qr::SchemaError);
    // system mode needs pairs
    CHECK_THROWS_AS(
        (void)qr::parse_scenario(
            parse_json(R"({"name": "x", "mode": "system", "system": {}, "checks": []})"), "s"),
        qr::SchemaError);
    // horizon must exceed t1
    CHECK_THROWS_AS(
        (void)qr::parse_scenario(
            parse_json(
                R"({"name": "x", "mode": "riccati", "coeffs": {"a": {"const": 1}}, "seeds": [0], "horizon": 0, "checks": []})"),
            "s"),
        qr::SchemaError);
}

TEST_CASE("check lists are validated against the mode") {
    auto base = [](const char* checks) {
        return std::string(R"({"name": "x", "mode": "riccati",
            "coeffs": {"a": {"const": 1}}, "seeds": [0], "horizon": 2, "checks": )") +
               checks + "}";
    };
    CHECK_THROWS_AS(
        (void)qr::parse_scenario(nlohmann::json::parse(base(R"(["no-such-check"])")), "s"),
        qr::SchemaError);
    // a pair-system check in equation mode is rejected with a mode message
    try {
        (void)qr::parse_scenario(nlohmann::json::parse(base(R"(["thm42"])")), "s");
        FAIL("expected SchemaError");
    } catch (const qr::SchemaError& e) {
        CHECK(std::string(e.what()).find("mode") != std::string::npos);
    }
    CHECK_THROWS_AS((void)qr::parse_scenario(
                        nlohmann::json::parse(base(R"(["identity-2.7", "identity-2.7"])")),
                        "s"),
                    qr::SchemaError);
    // object form with parameters parses and keeps the params
    const Scenario sc = qr::parse_scenario(
        nlohmann::json::parse(base(R"([{"id": "classification", "expect_verdict": "normal"}])")),
        "s");
    REQUIRE(sc.checks.size() == 1);
    CHECK(sc.checks[0].id == "classification");
    CHECK(sc.checks[0].params.at("expect_verdict") == "normal");
}

TEST_CASE("serialization round trips") {
    const Scenario sc = qr::builtin_scenario("example-3.1-exp");
    const nlohmann::ordered_json once = qr::serialize(sc);
    const Scenario back = qr::parse_scenario(once, "round");
    CHECK(qr::serialize(back).dump() == once.dump());
    CHECK(back.name == sc.name);
    CHECK(back.seeds.size() == sc.seeds.size());
    CHECK(back.checks.size() == sc.checks.size());

    const Scenario sys = qr::builtin_scenario("thm-4.2-real-extremal");
    const nlohmann::ordered_json sys_once = qr::serialize(sys);
    CHECK(qr::serialize(qr::parse_scenario(sys_once, "round")).dump() == sys_once.dump());
}

TEST_CASE("builtin catalog lists the advertised scenarios") {
    const std::vector<std::string> names = qr::builtin_names();
    for (const char* required :
         {"example-3.1-exp", "example-3.3-lambda", "thm-4.2-real-extremal"}) {
        CHECK(std::find(names.begin(), names.end(), required) != names.end());
        CHECK(qr::is_builtin(required));
        CHECK_FALSE(qr::builtin_description(required).empty());
    }
    CHECK_FALSE(qr::is_builtin("no-such-scenario"));
    CHECK_THROWS_AS((void)qr::builtin_scenario("no-such-scenario"), qr::OutOfRange);
    for (const std::string& name : names) {
        const Scenario sc = qr::builtin_scenario(name);
        CHECK(sc.name == name);
        CHECK_FALSE(sc.checks.empty());
    }
}

TEST_CASE("run produces one result per requested check, in order") {
    const Scenario sc = tiny_equation_scenario();
    qr::RunOptions opt;
    opt.write_files = false;
    const qr::RunReport report = qr::run_scenario(sc, opt);
    CHECK(report.scenario == "tiny");
    REQUIRE(report.checks.size() == 2);
    CHECK(report.checks[0].id == "closed-form-3.2");
    CHECK(report.checks[1].id == "identity-2.7");
    CHECK(report.all_passed);
    CHECK(report.checks[0].passed);
    CHECK(report.checks[0].deviation < 1e-6);
    CHECK(report.csv_files.empty());

    const nlohmann::ordered_json j = qr::serialize(report);
    CHECK(j.at("all_passed") == true);
    CHECK(j.at("checks").size() == 2);
    CHECK(j.at("checks")[0].at("id") == "closed-form-3.2");
    CHECK(j.at("checks")[0].contains("deviation"));
    CHECK(j.at("checks")[0].contains("details"));
}

TEST_CASE("a throwing check is reported failed without aborting the run") {
    Scenario sc = tiny_equation_scenario();
    // escape expectation for a seed index that does not exist
    sc.checks[0].params["escape"] = {{"seed", 7}, {"time", 1.0}};
    qr::RunOptions opt;
    opt.write_files = false;
    const qr::RunReport report = qr::run_scenario(sc, opt);
    REQUIRE(report.checks.size() == 2);
    CHECK_FALSE(report.checks[0].passed);
    CHECK(report.checks[0].summary.rfind("error:", 0) == 0);
    CHECK(report.checks[1].passed);
    CHECK_FALSE(report.all_passed);
}

TEST_CASE("expectation mismatches fail the check") {
    Scenario sc = tiny_equation_scenario();
    sc.checks[1].params["tol"] = 1e-18;  // unreachably tight
    qr::RunOptions opt;
    opt.write_files = false;
    const qr::RunReport report = qr::run_scenario(sc, opt);
    CHECK_FALSE(report.checks[1].passed);
    CHECK_FALSE(report.all_passed);
}

TEST_CASE("emitted files are byte-identical across runs") {
    const Scenario sc = tiny_equation_scenario();
    const std::filesystem::path root_a = "scenario-out-a";
    const std::filesystem::path root_b = "scenario-out-b";
    std::filesystem::remove_all(root_a);
    std::filesystem::remove_all(root_b);

    qr::RunOptions opt;
    opt.out_dir = root_a.string();
    const qr::RunReport ra = qr::run_scenario(sc, opt);
    opt.out_dir = root_b.string();
    const qr::RunReport rb = qr::run_scenario(sc, opt);

    REQUIRE(ra.csv_files.size() == 2);  // one series per seed
    CHECK(ra.csv_files == rb.csv_files);
    for (const std::string& rel : ra.csv_files) {
        const std::string a = slurp(root_a / rel);
        const std::string b = slurp(root_b / rel);
        CHECK_FALSE(a.empty());
        CHECK(a == b);
    }
    CHECK(std::filesystem::exists(root_a / "tiny" / "report.json"));

    // the header names the documented columns
    const std::string csv = slurp(root_a / ra.csv_files[0]);
    CHECK(csv.rfind("t,q0,q1,q2,q3,abs_q,abs_phi,abs_psi,mu0,mu1,mu2,mu3\n", 0) == 0);

    std::filesystem::remove_all(root_a);
    std::filesystem::remove_all(root_b);
}

TEST_CASE("option overrides replace scenario values") {
    const Scenario sc = tiny_equation_scenario();
    const std::filesystem::path root = "scenario-out-override";
    std::filesystem::remove_all(root);
    qr::RunOptions opt;
    opt.out_dir = root.string();
    opt.horizon = 3.0;
    const qr::RunReport report = qr::run_scenario(sc, opt);
    CHECK(report.all_passed);
    // the emitted series ends at the overridden horizon
    const std::string csv = slurp(root / report.csv_files[0]);
    const size_t last_line = csv.rfind('\n', csv.size() - 2);
    CHECK(csv.compare(last_line + 1, 2, "3,") == 0);
    std::filesystem::remove_all(root);
}

TEST_CASE("system scenarios emit pair series") {
    const Scenario sc = qr::builtin_scenario("remark-4.3");
    const std::filesystem::path root = "scenario-out-system";
    std::filesystem::remove_all(root);
    qr::RunOptions opt;
    opt.out_dir = root.string();
    const qr::RunReport report = qr::run_scenario(sc, opt);
    CHECK(report.all_passed);
    REQUIRE_FALSE(report.csv_files.empty());
    const std::string csv = slurp(root / report.csv_files[0]);
    CHECK(csv.rfind("t,phi0,phi1,phi2,phi3,psi0,psi1,psi2,psi3,abs_phi,abs_psi\n", 0) == 0);
    std::filesystem::remove_all(root);
}
