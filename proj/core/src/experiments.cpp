#include "capalloc/experiments.hpp"

#include <cmath>
#include <fstream>

#include "capalloc/cost_functions.hpp"
#include "capalloc/csv.hpp"
#include "capalloc/errors.hpp"
#include "capalloc/rng.hpp"
#include "capalloc/shapley.hpp"

namespace capalloc
{

    double pearson_correlation(std::span<const double> x, std::span<const double> y)
    {
        if (x.size() != y.size() || x.size() < 2)
            throw validation_error("pearson_correlation: need two equal samples of size >= 2");
        const double n = static_cast<double>(x.size());
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            mx += x[i];
            my += y[i];
        }
        mx /= n;
        my /= n;
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double dx = x[i] - mx;
            const double dy = y[i] - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        if (sxx <= 0.0 || syy <= 0.0)
            throw numeric_error("pearson_correlation: zero variance sample");
        return sxy / std::sqrt(sxx * syy);
    }

    Portfolio table1_portfolio()
    {
        Portfolio portfolio;
        portfolio.units = {
            {"A", "A", 230.0, 150.0, 23.0, ""},
            {"B", "B", 120.0, 250.0, 25.0, ""},
            {"C", "C", 150.0, 250.0, 25.0, ""},
            {"D", "D", 250.0, 150.0, 25.0, ""},
            {"E", "E", 150.0, 200.0, 20.0, ""},
        };
        return portfolio;
    }

    Table1Result run_table1()
    {
        Table1Result result;
        result.portfolio = table1_portfolio();
        result.standalone = standalone_allocation(result.portfolio).values;
        result.euler = euler_allocation(result.portfolio).values;
        result.shapley = exact_shapley(*additive_max_cost(result.portfolio)).values;
        auto linear = linear_max_allocation(result.portfolio);
        result.linear = linear.allocation.values;
        result.rates = linear.rates;
        result.stats = linear.stats;
        return result;
    }

    Table2Result run_table2()
    {
        Table2Result result;
        result.portfolio = table1_portfolio();
        const auto problem = make_capital_problem(
            result.portfolio, synthetic_covariance(result.portfolio.size(), 0.0, 1.0), 0.1,
            0.0, /*with_jacobian=*/false);
        const auto solution = solve_crude(problem.h, problem.r, problem.covariance,
                                          problem.w, 0.0, 0.1);
        for (int i = 0; i < result.portfolio.size(); ++i)
            result.returns.push_back(problem.r(2 * i));
        result.lambda = solution.lambda;
        result.threshold_rwa = problem.w(0) / solution.lambda;
        result.threshold_lbs = problem.w(1) / solution.lambda;
        return result;
    }

    std::vector<Table3Panel> run_table3(double epsilon)
    {
        const Portfolio portfolio = table1_portfolio();
        const int n = portfolio.size();

        struct PanelSpec
        {
            std::string label;
            double z;
            double rho;
        };
        const std::vector<PanelSpec> panels = {
            {"z=0,V=I", 0.0, 0.0},
            {"z=0,rho=0.95", 0.0, 0.95},
            {"z=2,rho=0.95", 2.0, 0.95},
        };

        std::vector<Table3Panel> out;
        for (const auto &spec : panels)
        {
            for (const bool crude : {false, true})
            {
                auto covariance = synthetic_covariance(n, spec.rho, 1.0);
                auto problem = make_capital_problem(portfolio, std::move(covariance), epsilon,
                                                    spec.z, /*with_jacobian=*/!crude);
                OptimizationSolution solution =
                    crude ? solve_crude(problem.h, problem.r, problem.covariance, problem.w,
                                        spec.z, epsilon)
                          : solve_local_optimum(problem);

                Table3Panel panel;
                panel.label = spec.label;
                panel.solver = crude ? "crude" : "full";
                panel.z = spec.z;
                panel.lambda = solution.lambda;
                panel.capital_change = solution.capital_change;
                panel.unit_total_change = total_allocation_change(problem.h, solution.delta);
                for (int i = 0; i < n; ++i)
                {
                    panel.delta_rwa.push_back(solution.delta(2 * i));
                    panel.delta_lbs.push_back(solution.delta(2 * i + 1));
                }
                out.push_back(std::move(panel));
            }
        }
        return out;
    }

    namespace
    {
        std::uint64_t mix_stream(std::uint64_t seed, std::uint64_t salt)
        {
            // Distinct deterministic seeds for nested MC runs.
            return seed * 0x100000001b3ULL + salt;
        }
    } // namespace

    std::vector<CorrelationRow> fig1_correlations(std::uint64_t seed, std::int64_t mc_samples)
    {
        if (mc_samples < 1)
            throw validation_error("fig1_correlations: samples must be >= 1");
        std::vector<CorrelationRow> rows;
        constexpr int kDraws = 20;
        for (int n = 5; n <= 50; n += 5)
        {
            std::vector<double> correlations;
            for (int draw = 0; draw < kDraws; ++draw)
            {
                SubstreamRng rng(seed, mix_stream(0x11, static_cast<std::uint64_t>(n) * 100 +
                                                            static_cast<std::uint64_t>(draw)));
                std::vector<double> a(static_cast<std::size_t>(n));
                std::vector<double> b(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i)
                {
                    a[static_cast<std::size_t>(i)] = rng.next_double();
                    b[static_cast<std::size_t>(i)] = rng.next_double();
                }
                const auto linear = linear_max_allocation(a, b);
                const auto cost = additive_max_cost(a, b);
                AllocationEstimate shapley =
                    n <= kExactShapleyCap
                        ? exact_shapley(*cost)
                        : mc_shapley(*cost, mc_samples,
                                     mix_stream(seed, static_cast<std::uint64_t>(n) * 1000 +
                                                          static_cast<std::uint64_t>(draw)));
                correlations.push_back(
                    pearson_correlation(linear.allocation.values, shapley.values));
            }
            double mean = 0;
            for (double c : correlations)
                mean += c;
            mean /= correlations.size();
            double var = 0;
            for (double c : correlations)
                var += (c - mean) * (c - mean);
            rows.push_back({n, mean, std::sqrt(var / correlations.size())});
        }
        return rows;
    }

    std::vector<CorrelationRow> fig2_correlations(std::uint64_t seed,
                                                  std::int64_t alloc_samples,
                                                  int prefix_samples)
    {
        if (alloc_samples < 1 || prefix_samples < 2)
            throw validation_error("fig2_correlations: bad sample counts");
        constexpr int kDraws = 20;
        constexpr int kScenarios = 250;
        constexpr double kLevel = 0.99;

        std::vector<CorrelationRow> rows;
        for (int n = 5; n <= 50; n += 5)
        {
            std::vector<double> correlations;
            for (int draw = 0; draw < kDraws; ++draw)
            {
                const std::uint64_t salt = static_cast<std::uint64_t>(n) * 100 +
                                           static_cast<std::uint64_t>(draw);
                PnLMatrix pnl = generate_pnl(n, kScenarios, seed, mix_stream(0x22, salt));
                auto cost = var_cost(std::move(pnl), kLevel);

                AllocationEstimate alpha =
                    n <= kExactShapleyCap
                        ? exact_shapley(*cost)
                        : mc_shapley(*cost, alloc_samples, mix_stream(seed, salt));

                // corr(c(S), l(S)) over random nonempty permutation prefixes.
                SubstreamRng rng(seed, mix_stream(0x33, salt));
                auto acc = cost->make_accumulator();
                std::vector<double> cs(static_cast<std::size_t>(prefix_samples));
                std::vector<double> ls(static_cast<std::size_t>(prefix_samples));
                std::vector<int> perm(static_cast<std::size_t>(n));
                for (int t = 0; t < prefix_samples; ++t)
                {
                    for (int i = 0; i < n; ++i)
                        perm[static_cast<std::size_t>(i)] = i;
                    rng.shuffle(perm);
                    const int cut =
                        1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
                    acc->reset();
                    double lin = 0.0;
                    for (int j = 0; j < cut; ++j)
                    {
                        acc->add(perm[static_cast<std::size_t>(j)]);
                        lin += alpha.values[static_cast<std::size_t>(
                            perm[static_cast<std::size_t>(j)])];
                    }
                    cs[static_cast<std::size_t>(t)] = acc->cost();
                    ls[static_cast<std::size_t>(t)] = lin;
                }
                correlations.push_back(pearson_correlation(cs, ls));
            }
            double mean = 0;
            for (double c : correlations)
                mean += c;
            mean /= correlations.size();
            double var = 0;
            for (double c : correlations)
                var += (c - mean) * (c - mean);
            rows.push_back({n, mean, std::sqrt(var / correlations.size())});
        }
        return rows;
    }

    std::vector<Fig3Row> fig3_sweep()
    {
        const Portfolio base = table1_portfolio();
        const auto a = base.rwa_vector();
        const auto b = base.lbs_vector();
        const double base_total = base.total_rwa();

        std::vector<Fig3Row> rows;
        for (int target = 500; target <= 1500; target += 50)
        {
            const double scale = static_cast<double>(target) / base_total;
            std::vector<double> scaled(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                scaled[i] = a[i] * scale;
            const auto result = linear_max_allocation(scaled, b);
            rows.push_back({static_cast<double>(target), result.rates.weights[0],
                            result.rates.weights[1], result.rates.beta, result.stats.p});
        }
        return rows;
    }

    namespace
    {
        std::ofstream open_output(const std::filesystem::path &dir, const std::string &name)
        {
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            const auto path = dir / name;
            std::ofstream out(path);
            if (!out)
                throw validation_error("cannot write experiment output: " + path.string());
            return out;
        }

        std::vector<std::filesystem::path> write_table1(const std::filesystem::path &dir)
        {
            const auto result = run_table1();
            auto out = open_output(dir, "table1.csv");
            CsvWriter csv(out);
            csv.row(std::vector<std::string>{"unit_id", "rwa_capital", "lbs_capital", "revenue",
                                             "alloc_standalone", "alloc_euler", "alloc_shapley",
                                             "alloc_linear", "roc_standalone", "roc_euler",
                                             "roc_shapley", "roc_linear"});
            double totals[4] = {0, 0, 0, 0};
            for (std::size_t i = 0; i < result.portfolio.units.size(); ++i)
            {
                const auto &unit = result.portfolio.units[i];
                totals[0] += result.standalone[i];
                totals[1] += result.euler[i];
                totals[2] += result.shapley[i];
                totals[3] += result.linear[i];
                csv.row(std::vector<std::string>{
                    unit.id,
                    format_csv_double(unit.rwa_capital),
                    format_csv_double(unit.lbs_capital),
                    format_csv_double(unit.revenue),
                    format_csv_double(result.standalone[i]),
                    format_csv_double(result.euler[i]),
                    format_csv_double(result.shapley[i]),
                    format_csv_double(result.linear[i]),
                    format_csv_double(unit.revenue / result.standalone[i]),
                    format_csv_double(unit.revenue / result.euler[i]),
                    format_csv_double(unit.revenue / result.shapley[i]),
                    format_csv_double(unit.revenue / result.linear[i]),
                });
            }
            csv.row(std::vector<std::string>{
                "Total",
                format_csv_double(result.portfolio.total_rwa()),
                format_csv_double(result.portfolio.total_lbs()),
                format_csv_double(118.0),
                format_csv_double(totals[0]),
                format_csv_double(totals[1]),
                format_csv_double(totals[2]),
                format_csv_double(totals[3]),
                "", "", "", "",
            });
            return {dir / "table1.csv"};
        }

        std::vector<std::filesystem::path> write_table2(const std::filesystem::path &dir)
        {
            const auto result = run_table2();
            auto out = open_output(dir, "table2.csv");
            CsvWriter csv(out);
            csv.row(std::vector<std::string>{"unit_id", "rwa_capital", "lbs_capital", "revenue",
                                             "return_on_rwa", "return_on_lbs", "threshold_rwa",
                                             "threshold_lbs"});
            for (std::size_t i = 0; i < result.portfolio.units.size(); ++i)
            {
                const auto &unit = result.portfolio.units[i];
                csv.row(std::vector<std::string>{
                    unit.id,
                    format_csv_double(unit.rwa_capital),
                    format_csv_double(unit.lbs_capital),
                    format_csv_double(unit.revenue),
                    format_csv_double(result.returns[i]),
                    format_csv_double(result.returns[i]),
                    format_csv_double(result.threshold_rwa),
                    format_csv_double(result.threshold_lbs),
                });
            }
            csv.row(std::vector<std::string>{"lambda", format_csv_double(result.lambda), "", "",
                                             "", "", "", ""});
            return {dir / "table2.csv"};
        }

        std::vector<std::filesystem::path> write_table3(const std::filesystem::path &dir)
        {
            const auto panels = run_table3();
            const auto portfolio = table1_portfolio();
            auto out = open_output(dir, "table3.csv");
            CsvWriter csv(out);
            csv.row(std::vector<std::string>{"panel", "solver", "unit_id", "delta_rwa",
                                             "delta_lbs", "unit_total_change"});
            for (const auto &panel : panels)
            {
                double sum_rwa = 0, sum_lbs = 0;
                for (std::size_t i = 0; i < panel.delta_rwa.size(); ++i)
                {
                    sum_rwa += panel.delta_rwa[i];
                    sum_lbs += panel.delta_lbs[i];
                    csv.row(std::vector<std::string>{
                        panel.label,
                        panel.solver,
                        portfolio.units[i].id,
                        format_csv_double(panel.delta_rwa[i]),
                        format_csv_double(panel.delta_lbs[i]),
                        format_csv_double(panel.unit_total_change[i]),
                    });
                }
                csv.row(std::vector<std::string>{
                    panel.label,
                    panel.solver,
                    "Total",
                    format_csv_double(sum_rwa),
                    format_csv_double(sum_lbs),
                    "capital_change=" + format_csv_double(panel.capital_change),
                });
            }
            return {dir / "table3.csv"};
        }

        std::vector<std::filesystem::path> write_correlation_rows(
            const std::filesystem::path &dir, const std::string &name,
            const std::vector<CorrelationRow> &rows)
        {
            auto out = open_output(dir, name);
            CsvWriter csv(out);
            csv.row(std::vector<std::string>{"n", "mean_corr", "std_corr"});
            for (const auto &row : rows)
                csv.row(std::vector<std::string>{std::to_string(row.n),
                                                 format_csv_double(row.mean_corr),
                                                 format_csv_double(row.std_corr)});
            return {dir / name};
        }

        std::vector<std::filesystem::path> write_fig3(const std::filesystem::path &dir)
        {
            auto rows = fig3_sweep();
            auto out = open_output(dir, "fig3.csv");
            CsvWriter csv(out);
            csv.row(std::vector<std::string>{"rwa_total", "w_rwa", "w_lbs", "beta", "p"});
            for (const auto &row : rows)
                csv.row(std::vector<std::string>{
                    format_csv_double(row.rwa_total), format_csv_double(row.w_rwa),
                    format_csv_double(row.w_lbs), format_csv_double(row.beta),
                    format_csv_double(row.p)});
            return {dir / "fig3.csv"};
        }
    } // namespace

    std::vector<std::filesystem::path> run_experiment(const ExperimentSpec &spec)
    {
        if (spec.name == "table1")
            return write_table1(spec.out_dir);
        if (spec.name == "table2")
            return write_table2(spec.out_dir);
        if (spec.name == "table3")
            return write_table3(spec.out_dir);
        if (spec.name == "fig1")
            return write_correlation_rows(
                spec.out_dir, "fig1.csv",
                fig1_correlations(spec.seed, spec.samples > 0 ? spec.samples : 100000));
        if (spec.name == "fig2")
            return write_correlation_rows(
                spec.out_dir, "fig2.csv",
                fig2_correlations(spec.seed, spec.samples > 0 ? spec.samples : 20000));
        if (spec.name == "fig3")
            return write_fig3(spec.out_dir);
        throw validation_error("unknown experiment name: " + spec.name);
    }

} // namespace capalloc
