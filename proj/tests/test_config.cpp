#include "mmq/config.hpp"
#include "mmq/io.hpp"

#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mmq;
using mmq::test::thrown_code;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "network": {
    "generator": [[-1, 1], [1, -1]],
    "lambda": [[2, 4], [0, 0]],
    "mu": [[[0, 0], [1, 1]], [[0, 0], [0, 0]]],
    "sink": [false, true]
  }
})";

nlohmann::ordered_json minimal() { return nlohmann::ordered_json::parse(kMinimal); }

ErrorCode code_of(const nlohmann::ordered_json& doc) {
    return thrown_code([&] { (void)config_from_json(doc); });
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("minimal config round-trips", "[config]") {
    const RunConfig a = parse_config_text(kMinimal);
    REQUIRE(a.network);
    CHECK(a.network->queues() == 2);
    CHECK(a.scaling.alpha == 1.0);
    const RunConfig b = parse_config_text(serialize_config(a));
    CHECK(a == b);
    CHECK(serialize_config(a) == serialize_config(b));
}

TEST_CASE("full config round-trips", "[config]") {
    auto doc = minimal();
    doc["network"]["lambda_hat"] = {{0.5, -0.25}, {0, 0}};
    doc["scaling"] = {{"alpha", 0.5}, {"n_list", {100, 1000}}, {"init_rule", "poisson"}, {"rho0", {0.1, 0}}};
    doc["run"] = {{"T", 2.5}, {"grid_step", 0.1}, {"reps", 7}, {"seed", 18446744073709551615ULL}, {"worker_count", 2},
                  {"check_times", {1.0, 2.5}}};
    doc["tolerance"] = {{"fluid_cap", 0.2}, {"bootstrap_resamples", 50}, {"psd_tolerance", 1e-8}};
    doc["verify"] = {{"reference_scale", 2.0}, {"fluid_offset", 0.1}};
    doc["output"] = {{"directory", "x"}, {"formats", {"json"}}, {"keep_raw", true}};
    const RunConfig a = config_from_json(doc);
    CHECK(a.run.seed == 18446744073709551615ULL);
    CHECK(a.scaling.init_rule == InitRule::Poisson);
    CHECK(a.ns() == std::vector<std::int64_t>{100, 1000});
    CHECK(a.tolerance.fluid_cap == 0.2);
    CHECK(a.output.wants("json"));
    CHECK_FALSE(a.output.wants("csv"));
    const RunConfig b = parse_config_text(serialize_config(a));
    CHECK(a == b);
    const VerifySettings s = a.verify_settings();
    CHECK(s.overrides.reference_scale == 2.0);
    CHECK(s.keep_raw);
    CHECK(s.check_times == std::vector<double>{1.0, 2.5});
}

TEST_CASE("model3 block is reduced", "[config]") {
    nlohmann::ordered_json doc = {{"schema_version", 1},
                                  {"model3",
                                   {{"generator", {{-1, 1}, {1, -1}}},
                                    {"lambda_star", {1, 2}},
                                    {"kappa_star", {3, 4}},
                                    {"mu_star", {5, 6}}}}};
    const RunConfig c = config_from_json(doc);
    REQUIRE(c.model3);
    const NetworkSpec spec = c.spec();
    CHECK(spec.queues() == 3);
    CHECK(spec.mu(1, 2, 1) == 24.0);
    CHECK(parse_config_text(serialize_config(c)) == c);
}

TEST_CASE("config errors", "[config]") {
    SECTION("misspelt field") {
        auto doc = minimal();
        doc["network"]["lamda"] = doc["network"]["lambda"];
        try {
            (void)config_from_json(doc);
            FAIL("expected UnknownField");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnknownField);
            CHECK(std::string(e.what()).find("lamda") != std::string::npos);
        }
    }
    SECTION("lambda with too few rows") {
        auto doc = minimal();
        doc["network"]["lambda"] = {{2, 4}};
        CHECK(code_of(doc) == ErrorCode::DimensionMismatch);
    }
    SECTION("declared dimension disagrees") {
        auto doc = minimal();
        doc["network"]["L"] = 3;
        CHECK(code_of(doc) == ErrorCode::DimensionMismatch);
    }
    SECTION("rho0 length") {
        auto doc = minimal();
        doc["scaling"] = {{"rho0", {1, 2, 3}}};
        CHECK(code_of(doc) == ErrorCode::DimensionMismatch);
    }
    SECTION("missing fields") {
        auto doc = minimal();
        doc["network"].erase("mu");
        CHECK(code_of(doc) == ErrorCode::MissingRequired);
        auto no_version = minimal();
        no_version.erase("schema_version");
        CHECK(code_of(no_version) == ErrorCode::MissingRequired);
        CHECK(code_of({{"schema_version", 1}}) == ErrorCode::MissingRequired);
    }
    SECTION("both network and model3") {
        auto doc = minimal();
        doc["model3"] = nlohmann::ordered_json::object();
        CHECK(code_of(doc) == ErrorCode::InvalidArgument);
    }
    SECTION("wrong types") {
        auto doc = minimal();
        doc["run"] = {{"seed", -1}};
        CHECK(code_of(doc) == ErrorCode::ParseError);
        doc["run"] = {{"reps", "many"}};
        CHECK(code_of(doc) == ErrorCode::ParseError);
        doc["run"] = nlohmann::ordered_json::object();
        doc["scaling"] = {{"init_rule", "ceil"}};
        CHECK(code_of(doc) == ErrorCode::ParseError);
    }
    SECTION("unsupported schema") {
        auto doc = minimal();
        doc["schema_version"] = 2;
        CHECK(code_of(doc) == ErrorCode::ParseError);
    }
    SECTION("alpha and grid") {
        auto doc = minimal();
        doc["scaling"] = {{"alpha", 0}};
        CHECK(code_of(doc) == ErrorCode::NonpositiveAlpha);
        doc["scaling"] = nlohmann::ordered_json::object();
        doc["run"] = {{"T", 1.0}, {"grid_step", 0.3}};
        CHECK(code_of(doc) == ErrorCode::GridMismatch);
    }
    SECTION("malformed JSON reports the line") {
        try {
            (void)parse_config_text("{\n  \"schema_version\": 1,\n  oops\n}");
            FAIL("expected ParseError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ParseError);
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }
    SECTION("unreadable file") {
        CHECK(thrown_code([] { (void)parse_config("/nonexistent/config.json"); }) == ErrorCode::IoError);
    }
}

TEST_CASE("CSV layouts", "[io]") {
    const auto dir = std::filesystem::temp_directory_path() / "mmq_io_test";
    std::filesystem::remove_all(dir);

    FluidSolution empty;
    write_fluid_csv(dir / "empty.csv", empty, 2);
    CHECK(slurp(dir / "empty.csv") == "t,rho_1,rho_2\n");

    FluidSolution fluid;
    fluid.grid = TimeGrid(0.1, 1);
    fluid.rho = {test::vec({1.0, 0.0}), test::vec({0.1, 1.0 / 3.0})};
    write_fluid_csv(dir / "fluid.csv", fluid, 2);
    CHECK(slurp(dir / "fluid.csv") ==
          "t,rho_1,rho_2\n0,1,0\n0.10000000000000001,0.10000000000000001,0.33333333333333331\n");
    // Idempotent overwrite.
    const std::string first = slurp(dir / "fluid.csv");
    write_fluid_csv(dir / "fluid.csv", fluid, 2);
    CHECK(slurp(dir / "fluid.csv") == first);

    CHECK(moments_header(2) == std::vector<std::string>{"t", "m_1", "m_2", "V_11", "V_12", "V_22"});
    CHECK(trajectory_header(3) == std::vector<std::string>{"t", "j_state", "q_1", "q_2", "q_3"});
    CHECK(std::stod(format_double(0.1)) == 0.1);
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);

    CHECK(thrown_code([&] { write_csv("/proc/mmq/none.csv", {"a"}, {}); }) == ErrorCode::IoError);
    std::filesystem::remove_all(dir);
}
