// capalloc: Shapley-style capital allocation and reduced-form capital
// optimization. Subcommands: allocate, optimize, experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "capalloc/allocation.hpp"
#include "capalloc/cost_functions.hpp"
#include "capalloc/errors.hpp"
#include "capalloc/experiments.hpp"
#include "capalloc/optimizer.hpp"
#include "capalloc/portfolio.hpp"
#include "capalloc/shapley.hpp"

namespace
{

    namespace fs = std::filesystem;
    using namespace capalloc;

    std::ofstream open_report(const fs::path &dir, const std::string &name)
    {
        std::error_code ec;
        fs::create_directories(dir, ec);
        std::ofstream out(dir / name);
        if (!out)
            throw validation_error("cannot write output file: " + (dir / name).string());
        return out;
    }

    int run_allocate(const std::string &portfolio_path, const std::string &method,
                     std::uint64_t seed, std::int64_t samples, const fs::path &out_dir)
    {
        const Portfolio portfolio = load_portfolio(portfolio_path);

        ComponentAllocation allocation;
        ExchangeRates rates;
        bool has_rates = false;

        if (method == "standalone")
        {
            allocation = standalone_allocation(portfolio);
        }
        else if (method == "euler")
        {
            allocation = euler_allocation(portfolio);
        }
        else if (method == "shapley")
        {
            auto estimate = exact_shapley(*additive_max_cost(portfolio));
            allocation.values = std::move(estimate.values);
            allocation.stderrs = std::move(estimate.stderrs);
            allocation.samples = estimate.samples;
            allocation.method = AllocationMethod::shapley_exact;
        }
        else if (method == "mc")
        {
            auto estimate = mc_shapley(*additive_max_cost(portfolio), samples, seed);
            allocation.values = std::move(estimate.values);
            allocation.stderrs = std::move(estimate.stderrs);
            allocation.samples = estimate.samples;
            allocation.method = AllocationMethod::shapley_mc;
        }
        else if (method == "linear")
        {
            auto result = linear_max_allocation(portfolio);
            allocation = std::move(result.allocation);
            rates = std::move(result.rates);
            has_rates = true;
        }
        else if (method == "hierarchy")
        {
            auto components = hierarchy_components_from_portfolio(portfolio);
            auto result = hierarchy_allocation(components, samples, seed);
            allocation = std::move(result.allocation);
            rates = std::move(result.rates);
            has_rates = true;
        }
        else
        {
            throw validation_error("unknown method '" + method + "'");
        }

        auto out = open_report(out_dir, "allocation.csv");
        write_allocation_report(out, portfolio, allocation, has_rates ? &rates : nullptr);
        std::printf("wrote %s (method=%s, total=%.6f)\n",
                    (out_dir / "allocation.csv").string().c_str(),
                    method_name(allocation.method).c_str(), allocation.sum());
        return 0;
    }

    int run_optimize(const std::string &portfolio_path, const std::string &cov_spec,
                     double epsilon, double z, const std::string &solver,
                     const fs::path &out_dir)
    {
        const Portfolio portfolio = load_portfolio(portfolio_path);
        const int n = portfolio.size();

        CovarianceModel covariance;
        if (cov_spec == "identity")
        {
            covariance = synthetic_covariance(n, 0.0, 1.0);
        }
        else if (cov_spec.rfind("rho=", 0) == 0)
        {
            covariance = synthetic_covariance(n, std::stod(cov_spec.substr(4)), 1.0);
        }
        else if (cov_spec.rfind("file:", 0) == 0)
        {
            covariance = estimate_covariance(load_series_csv(cov_spec.substr(5)));
        }
        else
        {
            throw validation_error("unknown covariance source '" + cov_spec +
                                   "' (expected identity | rho=<r> | file:<path>)");
        }

        const bool crude = solver == "crude";
        if (!crude && solver != "full")
            throw validation_error("unknown solver '" + solver + "' (expected full | crude)");

        auto problem = make_capital_problem(portfolio, std::move(covariance), epsilon, z,
                                            /*with_jacobian=*/!crude);
        const OptimizationSolution solution =
            crude ? solve_crude(problem.h, problem.r, problem.covariance, problem.w, z, epsilon)
                  : solve_local_optimum(problem);

        auto out = open_report(out_dir, "optimization.csv");
        write_optimization_report(out, portfolio, problem, solution);
        std::printf("lambda=%.6f capital_change=%.6f kkt_stationarity=%.3e "
                    "constraint_residual=%.3e mahalanobis=%.6f\n",
                    solution.lambda, solution.capital_change, solution.kkt_stationarity,
                    solution.constraint_residual, solution.mahalanobis);
        std::printf("wrote %s\n", (out_dir / "optimization.csv").string().c_str());
        return 0;
    }

    int run_experiment_cmd(const std::string &name, std::uint64_t seed, std::int64_t samples,
                           const fs::path &out_dir)
    {
        ExperimentSpec spec;
        spec.name = name;
        spec.seed = seed;
        spec.samples = samples;
        spec.out_dir = out_dir;
        const auto files = run_experiment(spec);
        for (const auto &file : files)
            std::printf("wrote %s\n", file.string().c_str());
        return 0;
    }

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Shapley-style capital allocation and reduced-form capital optimization"};
    app.require_subcommand(1);

    std::string portfolio_path;
    std::string method = "linear";
    std::string cov_spec = "identity";
    std::string solver = "full";
    std::string experiment_name;
    std::string out_dir = ".";
    std::uint64_t seed = 7;
    std::int64_t samples = 100000;
    double epsilon = 0.1;
    double z = 0.0;

    auto *allocate = app.add_subcommand("allocate", "Allocate total capital to business units");
    allocate->add_option("--portfolio", portfolio_path, "Portfolio JSON file")->required();
    allocate->add_option("--method", method,
                         "standalone | euler | shapley | mc | linear | hierarchy");
    allocate->add_option("--seed", seed, "RNG seed for MC methods");
    allocate->add_option("--samples", samples, "Permutation samples for MC methods");
    allocate->add_option("--out", out_dir, "Output directory")->required();

    auto *optimize = app.add_subcommand("optimize", "Solve the local capital optimization");
    optimize->add_option("--portfolio", portfolio_path, "Portfolio JSON file")->required();
    optimize->add_option("--cov", cov_spec, "identity | rho=<r> | file:<series.csv>");
    optimize->add_option("--epsilon", epsilon, "Plausibility penalty (> 0)");
    optimize->add_option("--z", z, "Revenue-change target");
    optimize->add_option("--solver", solver, "full | crude");
    optimize->add_option("--out", out_dir, "Output directory")->required();

    auto *experiment = app.add_subcommand("experiment", "Reproduce a table or figure as CSV");
    experiment->add_option("--name", experiment_name,
                           "table1 | table2 | table3 | fig1 | fig2 | fig3")->required();
    experiment->add_option("--seed", seed, "RNG seed");
    experiment->add_option("--samples", samples, "MC sample override (0 = default)");
    experiment->add_option("--out", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (allocate->parsed())
            return run_allocate(portfolio_path, method, seed, samples, out_dir);
        if (optimize->parsed())
            return run_optimize(portfolio_path, cov_spec, epsilon, z, solver, out_dir);
        if (experiment->parsed())
            return run_experiment_cmd(experiment_name, seed,
                                      experiment->count("--samples") ? samples : 0, out_dir);
    }
    catch (const capalloc::validation_error &err)
    {
        std::fprintf(stderr, "validation error: %s\n", err.what());
        return 1;
    }
    catch (const capalloc::numeric_error &err)
    {
        std::fprintf(stderr, "numeric error: %s\n", err.what());
        return 2;
    }
    catch (const std::exception &err)
    {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 0;
}
