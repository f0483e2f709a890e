#include <cstdio>
#include <filesystem>
#include <fstream>

#include "capalloc/errors.hpp"
#include "capalloc/portfolio.hpp"
#include "doctest.h"

using namespace capalloc;

namespace
{
    std::filesystem::path write_temp(const std::string &name, const std::string &content)
    {
        auto path = std::filesystem::temp_directory_path() / name;
        std::ofstream out(path);
        out << content;
        return path;
    }

    const char *kTable1Json = R"({
      "units": [
        {"id": "A", "name": "A", "rwa_capital": 230, "lbs_capital": 150, "revenue": 23},
        {"id": "B", "name": "B", "rwa_capital": 120, "lbs_capital": 250, "revenue": 25},
        {"id": "C", "name": "C", "rwa_capital": 150, "lbs_capital": 250, "revenue": 25},
        {"id": "D", "name": "D", "rwa_capital": 250, "lbs_capital": 150, "revenue": 25},
        {"id": "E", "name": "E", "rwa_capital": 150, "lbs_capital": 200, "revenue": 20}
      ]
    })";
} // namespace

TEST_CASE("capital_from_exposures applies the ratios")
{
    CapitalRatios basel{0.045, 0.03};
    auto pair = capital_from_exposures(10000, 20000, basel);
    CHECK(pair.rwa_capital == doctest::Approx(450.0));
    CHECK(pair.lbs_capital == doctest::Approx(600.0));
    CHECK(pair.binding() == doctest::Approx(600.0));

    auto zero = capital_from_exposures(0, 0, basel);
    CHECK(zero.rwa_capital == 0.0);
    CHECK(zero.lbs_capital == 0.0);

    auto other = capital_from_exposures(1000, 1000, CapitalRatios{0.10, 0.05});
    CHECK(other.rwa_capital == doctest::Approx(100.0));
    CHECK(other.lbs_capital == doctest::Approx(50.0));
    CHECK(other.binding() == doctest::Approx(100.0));

    CHECK_THROWS_AS(capital_from_exposures(-1, 0, basel), validation_error);
    CHECK_THROWS_AS(capital_from_exposures(1, 1, CapitalRatios{1.5, 0.03}), validation_error);
}

TEST_CASE("load_portfolio reads the stylized fixture")
{
    auto path = write_temp("capalloc_t1.json", kTable1Json);
    Portfolio portfolio = load_portfolio(path);
    CHECK(portfolio.size() == 5);
    CHECK(portfolio.units[0].id == "A");
    CHECK(portfolio.total_rwa() == doctest::Approx(900.0));
    CHECK(portfolio.total_lbs() == doctest::Approx(1000.0));

    SUBCASE("unit order equals file order")
    {
        CHECK(portfolio.units[3].id == "D");
        CHECK(portfolio.units[4].id == "E");
    }

    SUBCASE("round-trip preserves every field")
    {
        auto copy = parse_portfolio_json(portfolio_to_json(portfolio));
        REQUIRE(copy.size() == portfolio.size());
        for (int i = 0; i < portfolio.size(); ++i)
        {
            const auto &lhs = portfolio.units[static_cast<std::size_t>(i)];
            const auto &rhs = copy.units[static_cast<std::size_t>(i)];
            CHECK(lhs.id == rhs.id);
            CHECK(lhs.name == rhs.name);
            CHECK(lhs.rwa_capital == rhs.rwa_capital);
            CHECK(lhs.lbs_capital == rhs.lbs_capital);
            CHECK(lhs.revenue == rhs.revenue);
            CHECK(lhs.entity == rhs.entity);
        }
        CHECK(copy.tree.subsidiaries == portfolio.tree.subsidiaries);
    }
}

TEST_CASE("portfolio totals match per-unit sums")
{
    Portfolio portfolio = parse_portfolio_json(kTable1Json);
    double rwa = 0, lbs = 0;
    for (const auto &u : portfolio.units)
    {
        rwa += u.rwa_capital;
        lbs += u.lbs_capital;
    }
    CHECK(std::abs(portfolio.total_rwa() - rwa) <= 1e-12 * rwa);
    CHECK(std::abs(portfolio.total_lbs() - lbs) <= 1e-12 * lbs);
}

TEST_CASE("load_portfolio validation failures")
{
    SUBCASE("parse failure")
    {
        CHECK_THROWS_AS(parse_portfolio_json("{not json"), validation_error);
    }
    SUBCASE("empty unit list")
    {
        CHECK_THROWS_AS(parse_portfolio_json(R"({"units": []})"), validation_error);
    }
    SUBCASE("negative capital names the unit")
    {
        const char *bad = R"({"units": [
          {"id": "U1", "rwa_capital": -5, "lbs_capital": 1, "revenue": 0}]})";
        CHECK_THROWS_WITH_AS(parse_portfolio_json(bad),
                             doctest::Contains("U1"), validation_error);
    }
    SUBCASE("duplicate id")
    {
        const char *bad = R"({"units": [
          {"id": "U1", "rwa_capital": 1, "lbs_capital": 1},
          {"id": "U1", "rwa_capital": 2, "lbs_capital": 2}]})";
        CHECK_THROWS_WITH_AS(parse_portfolio_json(bad),
                             doctest::Contains("duplicate"), validation_error);
    }
    SUBCASE("unit in two subsidiaries")
    {
        const char *bad = R"({"units": [
          {"id": "U1", "rwa_capital": 1, "lbs_capital": 1, "entity": "X"},
          {"id": "U1", "rwa_capital": 1, "lbs_capital": 1, "entity": "Y"}],
          "subsidiaries": ["X", "Y"]})";
        CHECK_THROWS_WITH_AS(parse_portfolio_json(bad),
                             doctest::Contains("overlapping subsidiaries"), validation_error);
    }
    SUBCASE("undeclared entity")
    {
        const char *bad = R"({"units": [
          {"id": "U1", "rwa_capital": 1, "lbs_capital": 1, "entity": "X"}]})";
        CHECK_THROWS_AS(parse_portfolio_json(bad), validation_error);
    }
}

TEST_CASE("exposure-based units convert through the ratios at load")
{
    const char *doc = R"({
      "units": [{"id": "U1", "rwa_exposure": 10000, "lbs_exposure": 20000}],
      "ratios": {"cet1": 0.045, "t1": 0.03}
    })";
    Portfolio portfolio = parse_portfolio_json(doc);
    CHECK(portfolio.units[0].rwa_capital == doctest::Approx(450.0));
    CHECK(portfolio.units[0].lbs_capital == doctest::Approx(600.0));

    const char *missing_ratios = R"({
      "units": [{"id": "U1", "rwa_exposure": 1, "lbs_exposure": 1}]
    })";
    CHECK_THROWS_AS(parse_portfolio_json(missing_ratios), validation_error);
}

TEST_CASE("zero-capital units are permitted")
{
    const char *doc = R"({"units": [
      {"id": "U1", "rwa_capital": 0, "lbs_capital": 0},
      {"id": "U2", "rwa_capital": 5, "lbs_capital": 3}]})";
    Portfolio portfolio = parse_portfolio_json(doc);
    CHECK(portfolio.units[0].rwa_capital == 0.0);
}
