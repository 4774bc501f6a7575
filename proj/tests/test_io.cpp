#include <catch_amalgamated.hpp>

#include <random>

#include <nlmedium/io/config.hpp>

using namespace nlmedium;
using io::json;

TEST_CASE("numbers are written with 17 significant digits", "[io]") {
    CHECK(io::fmt(0.1) == "0.10000000000000001");
    CHECK(io::fmt(1.0) == "1");
    CHECK(io::fmt(0.0) == "0");
    CHECK(io::fmt(-0.0) == "-0");
    CHECK(io::dump(json::array({0.1, 2.5})) == "[0.10000000000000001, 2.5]\n");
    CHECK_THROWS_AS(io::dump(json(std::nan(""))), ValidationError);
}

TEST_CASE("doubles round-trip through the writer", "[io]") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    json arr = json::array();
    for (int i = 0; i < 200; ++i) arr.push_back(u(rng) * std::pow(10.0, i % 40 - 20));
    const json back = io::parse_text(io::dump(arr));
    for (std::size_t i = 0; i < arr.size(); ++i) CHECK(back[i].get<double>() == arr[i].get<double>());
}

TEST_CASE("malformed JSON reports line and column", "[io]") {
    const std::string text = "{\n  \"a\": 1,\n  \"b\": ]\n}\n";
    try {
        io::parse_text(text, "cfg.json");
        FAIL("no error");
    } catch (const io::ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.column == 8);
        CHECK(std::string(e.what()).find("cfg.json:3:8") == 0);
    }
}

TEST_CASE("medium round-trip", "[io]") {
    MediumParams m;
    m.chi_s = 1.25;
    m.alpha = 0.7;
    m.nu_spec = TabulatedCoupling{{0.0, 1.0, 2.0}, {0.1, 0.05, 0.0}};
    const MediumParams back = io::medium_from(io::parse_text(io::dump(io::to_json(m))));
    CHECK(back.chi_s == m.chi_s);
    CHECK(back.alpha == m.alpha);
    const auto& t = std::get<TabulatedCoupling>(back.nu_spec);
    CHECK(t.values == std::vector<double>{0.1, 0.05, 0.0});
    CHECK_THROWS_AS(io::medium_from(json{{"g", 0.5}}), ValidationError);
    CHECK_THROWS_AS(io::medium_from(json{{"omega0", -1.0}}), ValidationError);
    CHECK_THROWS_WITH(io::medium_from(json{{"nu", {{"type", "gaussian"}}}}), "unknown coupling type 'gaussian'");
}

TEST_CASE("lambda specs", "[io]") {
    const Rank4 a = io::lambda_from(json::parse(R"({"isotropic": [1, 0.5, 0.25]})"));
    CHECK(max_abs_diff(a, lambda_isotropic(1.0, 0.5, 0.25)) == 0.0);
    json table = json::array();
    for (std::size_t k = 0; k < 81; ++k) table.push_back(io::to_json(a[k]));
    CHECK(max_abs_diff(io::lambda_from(json{{"table", table}}), a) == 0.0);
    CHECK_THROWS_AS(io::lambda_from(json::parse(R"({"isotropic": [1, 2]})")), ValidationError);
    CHECK_THROWS_AS(io::lambda_from(json::object()), ValidationError);
}

TEST_CASE("comb round-trip", "[io]") {
    FrequencyComb c;
    c.lines.push_back({-0.3, cvec3(cplx{0.1, -0.2}, 0.0, cplx{0.0, 1.0 / 3.0})});
    c.lines.push_back({0.3, cvec3(cplx{0.1, 0.2}, 0.0, cplx{0.0, -1.0 / 3.0})});
    const FrequencyComb back = io::comb_from(io::parse_text(io::dump(io::to_json(c))));
    REQUIRE(back.lines.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.lines[i].omega == c.lines[i].omega);
        CHECK(back.lines[i].amp == c.lines[i].amp);
    }
    CHECK(io::comb_from(json::parse(R"({"lines": [], "tolerance": 1e-6})")).tolerance == 1e-6);
    CHECK_THROWS_AS(io::comb_from(json::parse(R"([{"omega": 1, "amp": [1, 2]}])")), ValidationError);
}

TEST_CASE("frequency grids", "[io]") {
    CHECK(io::grid_values({0.0, 1.0, 3}) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(io::frequencies_from(json{{"frequencies", {0.1, 0.2}}}, {}) == std::vector<double>{0.1, 0.2});
    CHECK_THROWS_AS(io::frequencies_from(json{{"frequencies", {0.2, 0.1}}}, {}), ValidationError);
    CHECK_THROWS_AS(io::grid_values({1.0, 0.0, 3}), ValidationError);
}
