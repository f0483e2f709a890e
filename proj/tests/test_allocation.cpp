#include <algorithm>
#include <cmath>
#include <numeric>

#include "capalloc/allocation.hpp"
#include "capalloc/cost_functions.hpp"
#include "capalloc/errors.hpp"
#include "capalloc/experiments.hpp"
#include "capalloc/rng.hpp"
#include "capalloc/shapley.hpp"
#include "doctest.h"

using namespace capalloc;

namespace
{
    std::vector<long> rounded(const std::vector<double> &values)
    {
        std::vector<long> out;
        for (double v : values)
            out.push_back(std::lround(v));
        return out;
    }

    std::vector<std::size_t> ranking(const std::vector<double> &values)
    {
        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
        return order;
    }

    Portfolio swapped_components(Portfolio portfolio)
    {
        for (auto &unit : portfolio.units)
            std::swap(unit.rwa_capital, unit.lbs_capital);
        return portfolio;
    }
} // namespace

TEST_CASE("standalone allocation")
{
    auto portfolio = table1_portfolio();
    auto alloc = standalone_allocation(portfolio);
    CHECK(rounded(alloc.values) == std::vector<long>{195, 212, 212, 212, 169});
    CHECK(std::abs(alloc.sum() - 1000.0) <= 1e-10 * 1000.0);

    SUBCASE("single unit keeps its standalone capital")
    {
        Portfolio single;
        single.units = {{"U", "U", 40.0, 90.0, 1.0, ""}};
        CHECK(standalone_allocation(single).values[0] == doctest::Approx(90.0));
    }
    SUBCASE("identical units split equally")
    {
        Portfolio same;
        for (int i = 0; i < 4; ++i)
            same.units.push_back({"U" + std::to_string(i), "", 30.0, 50.0, 0.0, ""});
        auto equal = standalone_allocation(same);
        for (double v : equal.values)
            CHECK(v == doctest::Approx(equal.values[0]));
    }
    SUBCASE("all-zero portfolio is rejected")
    {
        Portfolio zero;
        zero.units = {{"U", "U", 0.0, 0.0, 0.0, ""}};
        CHECK_THROWS_AS(standalone_allocation(zero), validation_error);
    }
}

TEST_CASE("euler allocation returns the binding side")
{
    auto portfolio = table1_portfolio();
    auto alloc = euler_allocation(portfolio);
    CHECK(alloc.values == std::vector<double>{150, 250, 250, 150, 200});

    SUBCASE("swapping the components leaves the binding values in place")
    {
        auto swapped = euler_allocation(swapped_components(portfolio));
        CHECK(swapped.values == alloc.values);
    }
    SUBCASE("exact tie takes the subgradient midpoint")
    {
        Portfolio tie;
        tie.units = {{"U1", "", 10.0, 30.0, 0.0, ""}, {"U2", "", 30.0, 10.0, 0.0, ""}};
        auto mid = euler_allocation(tie);
        CHECK(mid.values[0] == doctest::Approx(20.0));
        CHECK(mid.values[1] == doctest::Approx(20.0));
    }
}

TEST_CASE("dominance probability moment matching")
{
    auto portfolio = table1_portfolio();
    auto stats = dominance_probability(portfolio.rwa_vector(), portfolio.lbs_vector());
    CHECK(stats.mu_s == doctest::Approx(-50.0).epsilon(1e-14));
    CHECK(stats.sigma_s == doctest::Approx(92.0144916122).epsilon(1e-10));
    CHECK(stats.p == doctest::Approx(0.7065702632438).epsilon(1e-10));

    SUBCASE("equal components give the coin-flip limit")
    {
        std::vector<double> v{3.0, 1.0, 2.0};
        auto same = dominance_probability(v, v);
        CHECK(same.mu_s == 0.0);
        CHECK(same.sigma_s == 0.0);
        CHECK(same.p == 0.5);
    }
    SUBCASE("single-unit closed form")
    {
        auto one = dominance_probability(std::vector<double>{2.0}, std::vector<double>{1.0});
        CHECK(one.mu_s == doctest::Approx(0.5));
        CHECK(one.sigma_s == doctest::Approx(0.5));
        CHECK(one.p == doctest::Approx(0.15865525393146).epsilon(1e-10));
    }
    SUBCASE("length mismatch is rejected")
    {
        CHECK_THROWS_AS(
            dominance_probability(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
            validation_error);
    }
}

TEST_CASE("dominance probability agrees with the prefix-frequency experiment")
{
    // Frequency of sum_{i in prefix}(a_i - b_i) < 0 under a uniform
    // permutation with a uniform cut in {0..n}, ties counting one half.
    // The analytic value is a normal approximation, so agreement is to a
    // few percent at n = 5, not to sampling error.
    auto portfolio = table1_portfolio();
    const auto a = portfolio.rwa_vector();
    const auto b = portfolio.lbs_vector();
    auto stats = dominance_probability(a, b);

    SubstreamRng rng(2024, 0);
    const int n = portfolio.size();
    double hits = 0;
    const int samples = 200000;
    for (int t = 0; t < samples; ++t)
    {
        auto perm = rng.permutation(n);
        const int cut = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n) + 1));
        double diff = 0;
        for (int j = 0; j < cut; ++j)
        {
            const auto i = static_cast<std::size_t>(perm[static_cast<std::size_t>(j)]);
            diff += a[i] - b[i];
        }
        if (diff < 0)
            hits += 1.0;
        else if (diff == 0)
            hits += 0.5;
    }
    const double frequency = hits / samples;
    CHECK(std::abs(frequency - stats.p) < 0.025);
}

TEST_CASE("linear max allocation reproduces the stylized example")
{
    auto result = linear_max_allocation(table1_portfolio());
    CHECK(rounded(result.allocation.values) == std::vector<long>{179, 218, 227, 185, 191});
    CHECK(result.rates.beta == doctest::Approx(1.0302300121).epsilon(1e-9));
    CHECK(result.rates.weights[0] == doctest::Approx(0.3023001213).epsilon(1e-8));
    CHECK(result.rates.weights[1] == doctest::Approx(0.7279298909).epsilon(1e-8));
    CHECK(std::abs(result.allocation.sum() - 1000.0) <= 1e-12 * 1000.0);

    SUBCASE("ranking matches the exact Shapley ranking")
    {
        auto exact = exact_shapley(*additive_max_cost(table1_portfolio()));
        CHECK(ranking(result.allocation.values) == ranking(exact.values));
    }
}

TEST_CASE("linear max allocation edge cases")
{
    SUBCASE("one unit is allocated its binding capital exactly")
    {
        auto result = linear_max_allocation(std::vector<double>{7.0}, std::vector<double>{4.0});
        CHECK(result.allocation.values[0] == doctest::Approx(7.0).epsilon(1e-14));
    }
    SUBCASE("parity components give beta one and even weights")
    {
        std::vector<double> v{10.0, 20.0, 5.0};
        auto result = linear_max_allocation(v, v);
        CHECK(result.rates.beta == doctest::Approx(1.0));
        CHECK(result.rates.weights[0] == doctest::Approx(0.5));
        CHECK(result.rates.weights[1] == doctest::Approx(0.5));
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(result.allocation.values[i] == doctest::Approx(v[i]));
    }
    SUBCASE("all-zero components trip the singular-scale guard")
    {
        std::vector<double> zero(3, 0.0);
        CHECK_THROWS_AS(linear_max_allocation(zero, zero), numeric_error);
    }
}

TEST_CASE("scale invariance of rates under component scaling")
{
    auto portfolio = table1_portfolio();
    const auto a = portfolio.rwa_vector();
    const auto b = portfolio.lbs_vector();
    auto base = linear_max_allocation(a, b);
    for (double t : {0.1, 3.0})
    {
        std::vector<double> ta(a.size()), tb(b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            ta[i] = t * a[i];
            tb[i] = t * b[i];
        }
        auto scaled = linear_max_allocation(ta, tb);
        CHECK(scaled.stats.p == doctest::Approx(base.stats.p).epsilon(1e-12));
        CHECK(scaled.rates.beta == doctest::Approx(base.rates.beta).epsilon(1e-12));
        CHECK(scaled.rates.weights[0] ==
              doctest::Approx(base.rates.weights[0]).epsilon(1e-12));
        CHECK(scaled.rates.weights[1] ==
              doctest::Approx(base.rates.weights[1]).epsilon(1e-12));
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(scaled.allocation.values[i] ==
                  doctest::Approx(t * base.allocation.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("linear approximation tracks Shapley across portfolio sizes")
{
    // 20 draws with components uniform on (0,1); exact enumeration when it
    // fits, Monte Carlo above the cap.
    for (int n : {5, 10, 20, 50})
    {
        std::vector<double> correlations;
        for (int draw = 0; draw < 20; ++draw)
        {
            SubstreamRng rng(7, static_cast<std::uint64_t>(n) * 997 +
                                    static_cast<std::uint64_t>(draw));
            std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
            {
                a[static_cast<std::size_t>(i)] = rng.next_double();
                b[static_cast<std::size_t>(i)] = rng.next_double();
            }
            auto linear = linear_max_allocation(a, b);
            auto cost = additive_max_cost(a, b);
            auto shapley = n <= kExactShapleyCap
                               ? exact_shapley(*cost)
                               : mc_shapley(*cost, 100000,
                                            7000 + static_cast<std::uint64_t>(n) * 13 +
                                                static_cast<std::uint64_t>(draw));
            correlations.push_back(
                pearson_correlation(linear.allocation.values, shapley.values));
        }
        const double mean =
            std::accumulate(correlations.begin(), correlations.end(), 0.0) /
            static_cast<double>(correlations.size());
        CHECK(mean >= 0.995);
    }
}

TEST_CASE("two-function allocation")
{
    SUBCASE("identical allocations pass through")
    {
        std::vector<double> alpha{4.0, 2.0, 6.0};
        auto result = two_function_allocation(alpha, alpha);
        for (std::size_t i = 0; i < alpha.size(); ++i)
            CHECK(result.allocation.values[i] == doctest::Approx(alpha[i]));
    }
    SUBCASE("additive costs reduce to the raw-component form")
    {
        auto portfolio = table1_portfolio();
        const auto a = portfolio.rwa_vector();
        const auto b = portfolio.lbs_vector();
        auto via_pair = two_function_allocation(a, b);
        auto direct = linear_max_allocation(a, b);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(via_pair.allocation.values[i] ==
                  doctest::Approx(direct.allocation.values[i]).epsilon(1e-14));
    }
}

TEST_CASE("two-function allocation approximates the Shapley of a VaR max")
{
    // f and g play the role of two capital metrics of the same business
    // units, so their books are related: g's PnL is a per-unit rescaling of
    // f's plus independent noise.
    const int n = 6;
    SubstreamRng rng(23, 5);
    PnLMatrix p1 = generate_pnl(n, 250, 23, 1);
    PnLMatrix noise = generate_pnl(n, 250, 23, 2);
    PnLMatrix p2 = p1;
    std::vector<double> scale(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        scale[static_cast<std::size_t>(j)] = 0.95 + 0.1 * rng.next_double();
    for (int t = 0; t < 250; ++t)
        for (int j = 0; j < n; ++j)
            p2.at(t, j) = p2.at(t, j) * scale[static_cast<std::size_t>(j)] +
                          0.05 * noise.at(t, j);

    auto f = std::shared_ptr<const SetCost>(var_cost(p1, 0.99));
    auto g = std::shared_ptr<const SetCost>(var_cost(p2, 0.99));
    auto alpha_f = exact_shapley(*f).values;
    auto alpha_g = exact_shapley(*g).values;
    auto exact = exact_shapley(*max_cost(f, g));
    auto approx = two_function_allocation(alpha_f, alpha_g);

    CHECK(std::abs(approx.allocation.sum() - exact.sum()) <= 1e-10 * exact.sum());
    double err = 0, norm = 0;
    for (std::size_t i = 0; i < exact.values.size(); ++i)
    {
        const double d = approx.allocation.values[i] - exact.values[i];
        err += d * d;
        norm += exact.values[i] * exact.values[i];
    }
    CHECK(std::sqrt(err / norm) <= 0.02);
}
