#include "capalloc/optimizer.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "capalloc/allocation.hpp"
#include "capalloc/csv.hpp"
#include "capalloc/errors.hpp"
#include "capalloc/normal.hpp"

namespace capalloc
{

    namespace
    {
        void require_spd(const Eigen::MatrixXd &v, const std::string &who)
        {
            if (v.rows() != v.cols())
                throw validation_error(who + ": covariance must be square");
            const double asym = (v - v.transpose()).cwiseAbs().maxCoeff();
            if (asym > 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff()))
                throw validation_error(who + ": covariance is not symmetric");
            Eigen::LLT<Eigen::MatrixXd> llt(v);
            if (llt.info() != Eigen::Success)
                throw numeric_error(who + ": covariance is not positive-definite");
        }
    } // namespace

    CovarianceModel estimate_covariance(const Eigen::MatrixXd &series, double shrinkage)
    {
        if (series.rows() < 2)
            throw validation_error("estimate_covariance: need at least 2 observations");
        if (shrinkage < 0.0 || shrinkage > 1.0)
            throw validation_error("estimate_covariance: shrinkage must lie in [0,1]");

        const Eigen::Index diffs = series.rows() - 1;
        Eigen::MatrixXd d(diffs, series.cols());
        for (Eigen::Index t = 0; t < diffs; ++t)
            d.row(t) = series.row(t + 1) - series.row(t);
        Eigen::RowVectorXd mean = d.colwise().mean();
        d.rowwise() -= mean;
        const double denom = diffs > 1 ? static_cast<double>(diffs - 1) : 1.0;
        Eigen::MatrixXd sample = d.transpose() * d / denom;
        sample = 0.5 * (sample + sample.transpose());

        Eigen::MatrixXd shrunk = (1.0 - shrinkage) * sample;
        shrunk += shrinkage * sample.diagonal().asDiagonal().toDenseMatrix();

        Eigen::LLT<Eigen::MatrixXd> llt(shrunk);
        if (llt.info() != Eigen::Success)
        {
            const double trace = shrunk.trace();
            const double ridge = 1e-10 * (trace > 0.0 ? trace : 1.0);
            shrunk += ridge * Eigen::MatrixXd::Identity(shrunk.rows(), shrunk.cols());
            Eigen::LLT<Eigen::MatrixXd> retry(shrunk);
            if (retry.info() != Eigen::Success)
                throw numeric_error("estimate_covariance: ridge regularization failed");
        }
        return CovarianceModel{std::move(shrunk), "historical"};
    }

    CovarianceModel synthetic_covariance(int n_units, double rho, double scale)
    {
        if (n_units < 1)
            throw validation_error("synthetic_covariance: need at least one unit");
        if (!(std::abs(rho) < 1.0))
            throw validation_error("synthetic_covariance: |rho| must be < 1");
        if (!(scale > 0.0))
            throw validation_error("synthetic_covariance: scale must be > 0");

        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2 * n_units, 2 * n_units);
        for (int i = 0; i < n_units; ++i)
        {
            v(2 * i, 2 * i) = scale;
            v(2 * i + 1, 2 * i + 1) = scale;
            v(2 * i, 2 * i + 1) = rho * scale;
            v(2 * i + 1, 2 * i) = rho * scale;
        }
        return CovarianceModel{std::move(v), "synthetic"};
    }

    Eigen::MatrixXd load_series_csv(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw validation_error("cannot open series file: " + path.string());
        std::vector<std::vector<double>> rows;
        std::string line;
        bool first = true;
        std::size_t width = 0;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            auto fields = split_csv_line(line);
            if (first)
            {
                first = false;
                // Optional header: skip if any field is non-numeric.
                bool numeric = true;
                for (const auto &f : fields)
                {
                    char *end = nullptr;
                    std::strtod(f.c_str(), &end);
                    if (end == f.c_str() || (end && *end != '\0'))
                    {
                        numeric = false;
                        break;
                    }
                }
                width = fields.size();
                if (!numeric)
                    continue;
            }
            if (fields.size() != width)
                throw validation_error("series row width mismatch in " + path.string());
            std::vector<double> row;
            row.reserve(fields.size());
            for (const auto &f : fields)
                row.push_back(parse_csv_double(f, "series"));
            rows.push_back(std::move(row));
        }
        if (rows.empty())
            throw validation_error("series file has no data rows: " + path.string());
        Eigen::MatrixXd series(static_cast<Eigen::Index>(rows.size()),
                               static_cast<Eigen::Index>(width));
        for (std::size_t t = 0; t < rows.size(); ++t)
            for (std::size_t j = 0; j < width; ++j)
                series(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
        return series;
    }

    Eigen::VectorXd interleave_components(std::span<const double> rwa,
                                          std::span<const double> lbs)
    {
        if (rwa.size() != lbs.size())
            throw validation_error("interleave_components: lengths differ");
        Eigen::VectorXd h(2 * static_cast<Eigen::Index>(rwa.size()));
        for (std::size_t i = 0; i < rwa.size(); ++i)
        {
            h(2 * static_cast<Eigen::Index>(i)) = rwa[i];
            h(2 * static_cast<Eigen::Index>(i) + 1) = lbs[i];
        }
        return h;
    }

    Eigen::VectorXd exchange_rates_single_entity(const Eigen::VectorXd &h)
    {
        if (h.size() % 2 != 0 || h.size() == 0)
            throw validation_error("exchange_rates_single_entity: h must interleave (rwa,lbs) pairs");
        const auto n = static_cast<std::size_t>(h.size() / 2);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            a[i] = h(2 * static_cast<Eigen::Index>(i));
            b[i] = h(2 * static_cast<Eigen::Index>(i) + 1);
        }
        auto result = linear_max_allocation(a, b);
        Eigen::VectorXd w(h.size());
        for (std::size_t i = 0; i < n; ++i)
        {
            w(2 * static_cast<Eigen::Index>(i)) = result.rates.weights[0];
            w(2 * static_cast<Eigen::Index>(i) + 1) = result.rates.weights[1];
        }
        return w;
    }

    Eigen::MatrixXd exchange_rate_jacobian(
        const Eigen::VectorXd &h,
        const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &rate_map)
    {
        const Eigen::Index m = h.size();
        Eigen::MatrixXd jac(m, m);
        Eigen::VectorXd probe = h;
        for (Eigen::Index j = 0; j < m; ++j)
        {
            const double step = std::max(1e-6 * std::abs(h(j)), 1e-8);
            probe(j) = h(j) + step;
            Eigen::VectorXd up;
            try
            {
                up = rate_map(probe);
            }
            catch (const numeric_error &err)
            {
                throw numeric_error("exchange_rate_jacobian: singular scale at +step of component " +
                                    std::to_string(j) + ": " + err.what());
            }
            probe(j) = h(j) - step;
            Eigen::VectorXd down;
            try
            {
                down = rate_map(probe);
            }
            catch (const numeric_error &err)
            {
                throw numeric_error("exchange_rate_jacobian: singular scale at -step of component " +
                                    std::to_string(j) + ": " + err.what());
            }
            probe(j) = h(j);
            jac.col(j) = (up - down) / (2.0 * step);
        }
        return jac;
    }

    Eigen::MatrixXd exchange_rate_jacobian(const Eigen::VectorXd &h, RateModel model)
    {
        switch (model)
        {
        case RateModel::single_entity:
            return exchange_rate_jacobian(h, exchange_rates_single_entity);
        }
        throw validation_error("exchange_rate_jacobian: unknown rate model");
    }

    Eigen::MatrixXd exchange_rate_jacobian_analytic(const Eigen::VectorXd &h)
    {
        if (h.size() % 2 != 0 || h.size() == 0)
            throw validation_error("exchange_rate_jacobian_analytic: bad layout");
        const Eigen::Index m = h.size();
        const auto n = static_cast<std::size_t>(m / 2);

        double sum_a = 0, sum_b = 0, sum_d2 = 0;
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            const double a = h(2 * static_cast<Eigen::Index>(i));
            const double b = h(2 * static_cast<Eigen::Index>(i) + 1);
            sum_a += a;
            sum_b += b;
            d[i] = a - b;
            sum_d2 += d[i] * d[i];
        }
        const double sum_d = sum_a - sum_b;
        const double mu = 0.5 * sum_d;
        const double sig2 = sum_d2 / 6.0 + sum_d * sum_d / 12.0;
        const double sig = std::sqrt(sig2);
        if (!(sig > 0.0))
            throw numeric_error("exchange_rate_jacobian_analytic: sigma_s = 0 (kink)");
        if (sum_a == sum_b)
            throw numeric_error("exchange_rate_jacobian_analytic: total parity (max kink)");
        const double t = -mu / sig;
        const double p = normal_cdf(t);
        const double phi = normal_pdf(t);
        const double big = std::max(sum_a, sum_b);
        const double denom = sum_a - 2.0 * p * mu;
        const double beta = big / denom;

        // Derivatives with respect to a_j and b_j; slot parity picks sign.
        Eigen::VectorXd dwa(m), dwb(m);
        const bool a_binding = sum_a > sum_b;
        for (Eigen::Index col = 0; col < m; ++col)
        {
            const auto unit = static_cast<std::size_t>(col / 2);
            const bool is_a = (col % 2 == 0);
            const double dd = is_a ? 1.0 : -1.0; // d d_j / d h_col
            const double dmu = 0.5 * dd;
            const double dsig2 = dd * (d[unit] / 3.0 + sum_d / 6.0);
            const double dsig = dsig2 / (2.0 * sig);
            const double dt = -dmu / sig + mu * dsig / sig2;
            const double dp = phi * dt;
            const double dbig = (a_binding == is_a) ? 1.0 : 0.0;
            const double ddenom = (is_a ? 1.0 : 0.0) - 2.0 * (dp * mu + p * dmu);
            const double dbeta = (dbig * denom - big * ddenom) / (denom * denom);
            dwa(col) = dbeta * (1.0 - p) - beta * dp;
            dwb(col) = dbeta * p + beta * dp;
        }

        Eigen::MatrixXd jac(m, m);
        for (Eigen::Index row = 0; row < m; ++row)
            jac.row(row) = (row % 2 == 0) ? dwa.transpose() : dwb.transpose();
        return jac;
    }

    namespace
    {
        Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd &v, const std::string &who)
        {
            require_spd(v, who);
            Eigen::LLT<Eigen::MatrixXd> llt(v);
            return llt.solve(Eigen::MatrixXd::Identity(v.rows(), v.cols()));
        }

        double condition_number(const Eigen::MatrixXd &k)
        {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(k);
            const auto &sv = svd.singularValues();
            const double smallest = sv(sv.size() - 1);
            if (smallest <= 0.0)
                return std::numeric_limits<double>::infinity();
            return sv(0) / smallest;
        }
    } // namespace

    OptimizationSolution solve_local_optimum(const OptimizationProblem &problem)
    {
        const Eigen::Index m = problem.h.size();
        if (problem.r.size() != m || problem.w.size() != m ||
            problem.jacobian.rows() != m || problem.jacobian.cols() != m ||
            problem.covariance.matrix.rows() != m)
            throw validation_error("solve_local_optimum: dimension mismatch");
        if (!(problem.epsilon > 0.0))
            throw validation_error("solve_local_optimum: epsilon must be > 0");
        if (problem.r.norm() == 0.0)
            throw validation_error("solve_local_optimum: r must be nonzero");

        const Eigen::MatrixXd v_inv = inverse_spd(problem.covariance.matrix, "solve_local_optimum");
        const Eigen::MatrixXd k = problem.jacobian + problem.epsilon * v_inv;
        if (condition_number(k) > 1e12)
            throw numeric_error("solve_local_optimum: system matrix condition number exceeds 1e12");

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
        const Eigen::VectorXd a_w = lu.solve(problem.w);
        const Eigen::VectorXd a_jh = lu.solve(problem.jacobian * problem.h);
        const Eigen::VectorXd a_r = lu.solve(problem.r);

        const double gram = problem.r.dot(a_r);
        if (std::abs(gram) < 1e-14)
            throw numeric_error("solve_local_optimum: r' (J+eps V^-1)^-1 r is numerically zero");

        OptimizationSolution solution;
        solution.solver = "full";
        solution.lambda =
            (problem.revenue_target + problem.r.dot(a_w) + problem.r.dot(a_jh)) / gram;
        solution.delta = lu.solve(solution.lambda * problem.r - problem.w -
                                  problem.jacobian * problem.h);
        auto [stationarity, constraint] = kkt_residual(problem, solution);
        solution.kkt_stationarity = stationarity;
        solution.constraint_residual = constraint;
        solution.capital_change = problem.w.dot(solution.delta);
        solution.mahalanobis = std::sqrt(std::max(0.0, solution.delta.dot(v_inv * solution.delta)));
        return solution;
    }

    OptimizationSolution solve_crude(const Eigen::VectorXd &h, const Eigen::VectorXd &r,
                                     const CovarianceModel &covariance,
                                     const Eigen::VectorXd &w, double z, double epsilon)
    {
        const Eigen::Index m = h.size();
        if (r.size() != m || w.size() != m || covariance.matrix.rows() != m)
            throw validation_error("solve_crude: dimension mismatch");
        if (!(epsilon > 0.0))
            throw validation_error("solve_crude: epsilon must be > 0");
        require_spd(covariance.matrix, "solve_crude");

        const Eigen::VectorXd vr = covariance.matrix * r;
        const double gram = r.dot(vr);
        if (std::abs(gram) < 1e-14)
            throw numeric_error("solve_crude: r'Vr is numerically zero");

        OptimizationSolution solution;
        solution.solver = "crude";
        solution.lambda = (epsilon * z + r.dot(covariance.matrix * w)) / gram;
        solution.delta = covariance.matrix * (solution.lambda * r - w) / epsilon;
        solution.constraint_residual = std::abs(r.dot(solution.delta) - z);
        solution.capital_change = w.dot(solution.delta);

        OptimizationProblem equivalent;
        equivalent.h = h;
        equivalent.r = r;
        equivalent.w = w;
        equivalent.jacobian = Eigen::MatrixXd::Zero(m, m);
        equivalent.covariance = covariance;
        equivalent.epsilon = epsilon;
        equivalent.revenue_target = z;
        auto [stationarity, constraint] = kkt_residual(equivalent, solution);
        solution.kkt_stationarity = stationarity;
        solution.constraint_residual = constraint;

        Eigen::LLT<Eigen::MatrixXd> llt(covariance.matrix);
        const Eigen::VectorXd v_inv_delta = llt.solve(solution.delta);
        solution.mahalanobis = std::sqrt(std::max(0.0, solution.delta.dot(v_inv_delta)));
        return solution;
    }

    std::pair<double, double> kkt_residual(const OptimizationProblem &problem,
                                           const OptimizationSolution &solution)
    {
        const Eigen::Index m = problem.h.size();
        if (solution.delta.size() != m)
            throw validation_error("kkt_residual: dimension mismatch");
        Eigen::LLT<Eigen::MatrixXd> llt(problem.covariance.matrix);
        if (llt.info() != Eigen::Success)
            throw numeric_error("kkt_residual: covariance is not positive-definite");
        const Eigen::VectorXd v_inv_delta = llt.solve(solution.delta);
        const Eigen::VectorXd stationarity = problem.w +
                                             problem.jacobian * (problem.h + solution.delta) +
                                             problem.epsilon * v_inv_delta -
                                             solution.lambda * problem.r;
        const double constraint = std::abs(problem.r.dot(solution.delta) - problem.revenue_target);
        return {stationarity.norm(), constraint};
    }

    OptimizationProblem make_capital_problem(const Portfolio &portfolio,
                                             CovarianceModel covariance, double epsilon,
                                             double z, bool with_jacobian)
    {
        validate_portfolio(portfolio);
        const auto a = portfolio.rwa_vector();
        const auto b = portfolio.lbs_vector();
        const auto revenue = portfolio.revenue_vector();
        const auto n = a.size();

        OptimizationProblem problem;
        problem.h = interleave_components(a, b);
        problem.r.resize(2 * static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
        {
            const double denom = a[i] + b[i];
            double roc = 0.0;
            if (denom > 0.0)
                roc = revenue[i] / denom;
            else
                problem.zero_capital_units.push_back(static_cast<int>(i));
            problem.r(2 * static_cast<Eigen::Index>(i)) = roc;
            problem.r(2 * static_cast<Eigen::Index>(i) + 1) = roc;
        }
        problem.w = exchange_rates_single_entity(problem.h);
        problem.jacobian = with_jacobian
                               ? exchange_rate_jacobian(problem.h, RateModel::single_entity)
                               : Eigen::MatrixXd::Zero(problem.h.size(), problem.h.size());
        if (covariance.matrix.rows() != problem.h.size())
            throw validation_error("make_capital_problem: covariance dimension (" +
                                   std::to_string(covariance.matrix.rows()) +
                                   ") must be 2n = " + std::to_string(2 * n));
        problem.covariance = std::move(covariance);
        problem.epsilon = epsilon;
        problem.revenue_target = z;
        return problem;
    }

    std::vector<double> total_allocation_change(const Eigen::VectorXd &h,
                                                const Eigen::VectorXd &delta)
    {
        if (h.size() != delta.size() || h.size() % 2 != 0)
            throw validation_error("total_allocation_change: bad layout");
        const auto n = static_cast<std::size_t>(h.size() / 2);
        std::vector<double> a0(n), b0(n), a1(n), b1(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            a0[i] = h(2 * static_cast<Eigen::Index>(i));
            b0[i] = h(2 * static_cast<Eigen::Index>(i) + 1);
            a1[i] = a0[i] + delta(2 * static_cast<Eigen::Index>(i));
            b1[i] = b0[i] + delta(2 * static_cast<Eigen::Index>(i) + 1);
        }
        const auto before = linear_max_allocation(a0, b0).allocation;
        const auto after = linear_max_allocation(a1, b1).allocation;
        std::vector<double> change(n);
        for (std::size_t i = 0; i < n; ++i)
            change[i] = after.values[i] - before.values[i];
        return change;
    }

    void write_optimization_report(std::ostream &out, const Portfolio &portfolio,
                                   const OptimizationProblem &problem,
                                   const OptimizationSolution &solution)
    {
        const auto n = static_cast<std::size_t>(portfolio.size());
        if (problem.h.size() != 2 * static_cast<Eigen::Index>(n))
            throw validation_error("optimization report: dimension mismatch");

        const auto change = total_allocation_change(problem.h, solution.delta);
        CsvWriter csv(out);
        csv.row(std::vector<std::string>{"component", "h", "w", "r", "delta", "new_h",
                                         "unit_total_change"});
        for (std::size_t i = 0; i < n; ++i)
        {
            for (int side = 0; side < 2; ++side)
            {
                const Eigen::Index idx = 2 * static_cast<Eigen::Index>(i) + side;
                csv.row(std::vector<std::string>{
                    portfolio.units[i].id + (side == 0 ? ":rwa" : ":lbs"),
                    format_csv_double(problem.h(idx)),
                    format_csv_double(problem.w(idx)),
                    format_csv_double(problem.r(idx)),
                    format_csv_double(solution.delta(idx)),
                    format_csv_double(problem.h(idx) + solution.delta(idx)),
                    side == 0 ? format_csv_double(change[i]) : std::string(),
                });
            }
        }
        csv.row(std::vector<std::string>{
            "summary",
            "lambda=" + format_csv_double(solution.lambda),
            "capital_change=" + format_csv_double(solution.capital_change),
            "kkt_stationarity=" + format_csv_double(solution.kkt_stationarity),
            "constraint_residual=" + format_csv_double(solution.constraint_residual),
            "mahalanobis=" + format_csv_double(solution.mahalanobis),
            "solver=" + solution.solver,
        });
    }

} // namespace capalloc
