#include <cmath>

#include "capalloc/errors.hpp"
#include "capalloc/experiments.hpp"
#include "capalloc/optimizer.hpp"
#include "capalloc/rng.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace capalloc;

TEST_CASE("synthetic covariance blocks")
{
    auto identity = synthetic_covariance(5, 0.0, 1.0);
    CHECK(identity.matrix.isApprox(Eigen::MatrixXd::Identity(10, 10)));
    CHECK(identity.provenance == "synthetic");

    auto correlated = synthetic_covariance(5, 0.95, 1.0);
    for (int i = 0; i < 5; ++i)
    {
        CHECK(correlated.matrix(2 * i, 2 * i) == 1.0);
        CHECK(correlated.matrix(2 * i, 2 * i + 1) == 0.95);
        CHECK(correlated.matrix(2 * i + 1, 2 * i) == 0.95);
    }
    CHECK(correlated.matrix.cwiseAbs().sum() ==
          doctest::Approx(5 * (2.0 + 2 * 0.95)));

    auto wide = synthetic_covariance(2, -0.5, 4.0);
    CHECK(wide.matrix(0, 0) == 4.0);
    CHECK(wide.matrix(0, 1) == -2.0);

    CHECK_THROWS_AS(synthetic_covariance(2, 1.0, 1.0), validation_error);
    CHECK_THROWS_AS(synthetic_covariance(0, 0.0, 1.0), validation_error);
}

TEST_CASE("covariance estimation from series")
{
    SUBCASE("constant series becomes a ridge-regularized near-zero model")
    {
        Eigen::MatrixXd series = Eigen::MatrixXd::Ones(10, 3) * 4.2;
        auto model = estimate_covariance(series);
        CHECK(model.provenance == "historical");
        Eigen::LLT<Eigen::MatrixXd> llt(model.matrix);
        CHECK(llt.info() == Eigen::Success);
        CHECK(model.matrix.cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("full shrinkage keeps only the diagonal")
    {
        SubstreamRng rng(8, 0);
        Eigen::MatrixXd series(50, 3);
        for (int t = 0; t < 50; ++t)
            for (int j = 0; j < 3; ++j)
                series(t, j) = rng.next_normal();
        auto full = estimate_covariance(series, 0.0);
        auto diag = estimate_covariance(series, 1.0);
        CHECK(diag.matrix.diagonal().isApprox(full.matrix.diagonal(), 1e-12));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j)
                    CHECK(diag.matrix(i, j) == 0.0);
    }
    SUBCASE("estimate converges toward the generating covariance")
    {
        const int m = 4;
        SubstreamRng rng(99, 0);
        Eigen::MatrixXd truth = testsupport::random_spd(m, rng);
        Eigen::LLT<Eigen::MatrixXd> llt(truth);
        Eigen::MatrixXd chol = llt.matrixL();
        // Random walk whose daily increments have covariance `truth`.
        Eigen::MatrixXd series(501, m);
        series.row(0).setZero();
        for (int t = 1; t <= 500; ++t)
        {
            Eigen::VectorXd shock = chol * testsupport::random_vector(m, rng);
            series.row(t) = series.row(t - 1) + shock.transpose();
        }
        auto coarse = estimate_covariance(series.topRows(101));
        auto fine = estimate_covariance(series);
        const double err_coarse = (coarse.matrix - truth).norm();
        const double err_fine = (fine.matrix - truth).norm();
        CHECK(err_fine < err_coarse);
    }
    SUBCASE("input validation")
    {
        CHECK_THROWS_AS(estimate_covariance(Eigen::MatrixXd::Ones(1, 2)), validation_error);
        CHECK_THROWS_AS(estimate_covariance(Eigen::MatrixXd::Ones(5, 2), 1.5),
                        validation_error);
    }
}

TEST_CASE("exchange-rate jacobian")
{
    auto portfolio = table1_portfolio();
    const Eigen::VectorXd h =
        interleave_components(portfolio.rwa_vector(), portfolio.lbs_vector());
    const Eigen::VectorXd w = exchange_rates_single_entity(h);
    const Eigen::MatrixXd fd = exchange_rate_jacobian(h, RateModel::single_entity);

    SUBCASE("degree-zero homogeneity: J h vanishes")
    {
        CHECK((fd * h).cwiseAbs().maxCoeff() <= 1e-8 * w.norm());
    }
    SUBCASE("analytic entries agree with finite differences")
    {
        const Eigen::MatrixXd analytic = exchange_rate_jacobian_analytic(h);
        const double scale = analytic.cwiseAbs().maxCoeff();
        CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-6 * scale);
    }
    SUBCASE("parity point keeps even rates and a finite jacobian")
    {
        Eigen::VectorXd parity = h;
        for (int i = 0; i < 5; ++i)
            parity(2 * i) *= 1000.0 / 900.0;
        const Eigen::VectorXd w_parity = exchange_rates_single_entity(parity);
        for (int i = 0; i < w_parity.size(); ++i)
            CHECK(w_parity(i) == doctest::Approx(0.5).epsilon(1e-12));
        const Eigen::MatrixXd at_parity =
            exchange_rate_jacobian(parity, RateModel::single_entity);
        CHECK(at_parity.allFinite());
    }
}

namespace
{
    OptimizationProblem random_problem(int m, double epsilon, double z,
                                       capalloc::SubstreamRng &rng, bool with_jacobian)
    {
        OptimizationProblem p;
        p.h = testsupport::random_vector(m, rng) * 10.0;
        p.r = testsupport::random_vector(m, rng);
        p.w = testsupport::random_vector(m, rng);
        if (with_jacobian)
        {
            Eigen::MatrixXd raw(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    raw(i, j) = 0.05 * rng.next_normal();
            p.jacobian = 0.5 * (raw + raw.transpose());
        }
        else
        {
            p.jacobian = Eigen::MatrixXd::Zero(m, m);
        }
        p.covariance = CovarianceModel{testsupport::random_spd(m, rng), "synthetic"};
        p.epsilon = epsilon;
        p.revenue_target = z;
        return p;
    }
} // namespace

TEST_CASE("local optimum solves the stationarity system")
{
    SUBCASE("already optimal when w is proportional to r")
    {
        const int m = 6;
        SubstreamRng rng(41, 0);
        auto p = random_problem(m, 0.5, 0.0, rng, false);
        p.r = testsupport::random_vector(m, rng);
        const double c = 2.5;
        p.w = c * p.r;
        auto solution = solve_local_optimum(p);
        CHECK(solution.delta.cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(solution.lambda == doctest::Approx(c).epsilon(1e-10));
    }

    SUBCASE("matches the dense KKT oracle on random instances")
    {
        SubstreamRng rng(1234, 0);
        int instance = 0;
        for (double epsilon : {0.01, 0.1, 1.0})
        {
            for (int repeat = 0; repeat < 33; ++repeat)
            {
                ++instance;
                const double z = (instance % 3 == 0) ? 2.0 : 0.0;
                auto p = random_problem(10, epsilon, z, rng, true);
                auto mine = solve_local_optimum(p);
                auto oracle = testsupport::dense_kkt_solve(p);
                CHECK((mine.delta - oracle.delta).cwiseAbs().maxCoeff() <=
                      1e-8 * (1.0 + oracle.delta.cwiseAbs().maxCoeff()));
                CHECK(mine.lambda == doctest::Approx(oracle.lambda).epsilon(1e-8));
                CHECK(mine.constraint_residual <= 1e-8 * (1.0 + std::abs(z)));
                CHECK(mine.kkt_stationarity <= 1e-8 * (1.0 + p.w.norm()));
            }
        }
    }

    SUBCASE("thresholds of the stylized revenue model")
    {
        auto result = run_table2();
        CHECK(result.lambda == doctest::Approx(8.2773).epsilon(2e-3));
        CHECK(result.threshold_rwa == doctest::Approx(0.0365).epsilon(2e-3));
        CHECK(result.threshold_lbs == doctest::Approx(0.0879).epsilon(2e-3));
    }
}

TEST_CASE("crude solver")
{
    SUBCASE("no move when w is already proportional to r")
    {
        const int m = 4;
        SubstreamRng rng(77, 0);
        auto p = random_problem(m, 0.1, 0.0, rng, false);
        p.w = 3.0 * p.r;
        auto solution = solve_crude(p.h, p.r, p.covariance, p.w, 0.0, 0.1);
        CHECK(solution.delta.cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("agrees with the full solver at J = 0")
    {
        SubstreamRng rng(555, 0);
        for (int repeat = 0; repeat < 50; ++repeat)
        {
            auto p = random_problem(8, 0.1, repeat % 2 ? 1.0 : 0.0, rng, false);
            auto crude = solve_crude(p.h, p.r, p.covariance, p.w, p.revenue_target, p.epsilon);
            auto full = solve_local_optimum(p);
            CHECK((crude.delta - full.delta).cwiseAbs().maxCoeff() <=
                  1e-10 * (1.0 + full.delta.cwiseAbs().maxCoeff()));
            CHECK(crude.lambda == doctest::Approx(full.lambda).epsilon(1e-10));
        }
    }
    SUBCASE("sign pattern of the identity-covariance optimum")
    {
        auto panels = run_table3();
        for (const auto &panel : panels)
        {
            if (panel.label != "z=0,V=I")
                continue;
            for (double d : panel.delta_rwa)
                CHECK(d > 0.0);
            for (double d : panel.delta_lbs)
                CHECK(d < 0.0);
            // A and D gain total allocation, B, C, E lose.
            CHECK(panel.unit_total_change[0] > 0.0);
            CHECK(panel.unit_total_change[3] > 0.0);
            CHECK(panel.unit_total_change[1] < 0.0);
            CHECK(panel.unit_total_change[2] < 0.0);
            CHECK(panel.unit_total_change[4] < 0.0);
        }
    }
    SUBCASE("degenerate r is rejected")
    {
        auto identity = synthetic_covariance(2, 0.0, 1.0);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
        CHECK_THROWS_AS(solve_crude(zero, zero, identity, zero, 0.0, 0.1), numeric_error);
    }
}

TEST_CASE("kkt residual probes")
{
    SubstreamRng rng(313, 0);
    auto p = random_problem(7, 0.1, 1.5, rng, true);
    auto solution = solve_local_optimum(p);
    auto [stationarity, constraint] = kkt_residual(p, solution);
    CHECK(stationarity <= 1e-8 * (1.0 + p.w.norm()));
    CHECK(constraint <= 1e-8 * (1.0 + std::abs(p.revenue_target)));

    SUBCASE("perturbing the optimum strictly increases the stationarity residual")
    {
        auto perturbed = solution;
        perturbed.delta += 1e-3 * testsupport::random_vector(7, rng);
        auto [worse, ignored] = kkt_residual(p, perturbed);
        CHECK(worse > stationarity);
    }
    SUBCASE("zero move reports the raw gradient")
    {
        OptimizationSolution rest;
        rest.delta = Eigen::VectorXd::Zero(7);
        rest.lambda = 0.0;
        auto [grad_norm, cresidual] = kkt_residual(p, rest);
        CHECK(grad_norm ==
              doctest::Approx((p.w + p.jacobian * p.h).norm()).epsilon(1e-12));
        CHECK(cresidual == doctest::Approx(std::abs(p.revenue_target)));
    }
}

TEST_CASE("plausibility penalty monotonicity")
{
    SubstreamRng rng(616, 0);
    auto base = random_problem(6, 0.01, 1.0, rng, true);
    double previous = std::numeric_limits<double>::infinity();
    for (double epsilon : {0.01, 0.1, 1.0})
    {
        auto p = base;
        p.epsilon = epsilon;
        auto solution = solve_local_optimum(p);
        CHECK(solution.mahalanobis <= previous + 1e-12);
        previous = solution.mahalanobis;
    }
}

TEST_CASE("correlated covariance reverses the optimal direction")
{
    auto panels = run_table3();
    for (const auto &panel : panels)
    {
        if (panel.label == "z=0,rho=0.95")
        {
            std::size_t best = 0, worst = 0;
            for (std::size_t i = 1; i < panel.unit_total_change.size(); ++i)
            {
                if (panel.unit_total_change[i] > panel.unit_total_change[best])
                    best = i;
                if (panel.unit_total_change[i] < panel.unit_total_change[worst])
                    worst = i;
            }
            CHECK(best == 1);  // B
            CHECK(worst == 4); // E
            CHECK(panel.capital_change < 0.0);
        }
        if (panel.label == "z=2,rho=0.95")
            CHECK(panel.capital_change > 0.0);
    }
}

TEST_CASE("zero-capital units are flagged with zero RoC")
{
    Portfolio portfolio;
    portfolio.units = {{"U1", "", 10.0, 20.0, 3.0, ""}, {"U2", "", 0.0, 0.0, 1.0, ""}};
    auto problem = make_capital_problem(portfolio, synthetic_covariance(2, 0.0, 1.0), 0.1,
                                        0.0, false);
    CHECK(problem.r(2) == 0.0);
    CHECK(problem.r(3) == 0.0);
    REQUIRE(problem.zero_capital_units.size() == 1);
    CHECK(problem.zero_capital_units[0] == 1);
}
