#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "capalloc/allocation.hpp"
#include "capalloc/optimizer.hpp"
#include "capalloc/portfolio.hpp"

namespace capalloc
{

    /// Pearson correlation of two equal-length samples.
    double pearson_correlation(std::span<const double> x, std::span<const double> y);

    /// The five-unit stylized portfolio used across the table and figure
    /// reproductions (embedded so golden tests need no fixture files).
    Portfolio table1_portfolio();

    struct Table1Result
    {
        Portfolio portfolio;
        std::vector<double> standalone;
        std::vector<double> euler;
        std::vector<double> shapley;
        std::vector<double> linear;
        ExchangeRates rates;
        DominanceStats stats;
    };
    Table1Result run_table1();

    struct Table2Result
    {
        Portfolio portfolio;
        std::vector<double> returns; // revenue_i / (rwa_i + lbs_i)
        double lambda = 0.0;
        double threshold_rwa = 0.0; // w_rwa / lambda
        double threshold_lbs = 0.0; // w_lbs / lambda
    };
    Table2Result run_table2();

    struct Table3Panel
    {
        std::string label;  // e.g. "z=0,V=I"
        std::string solver; // "full" | "crude"
        double z = 0.0;
        std::vector<double> delta_rwa;
        std::vector<double> delta_lbs;
        std::vector<double> unit_total_change; // allocation change per unit
        double capital_change = 0.0;           // w . delta
        double lambda = 0.0;
    };
    std::vector<Table3Panel> run_table3(double epsilon = 0.1);

    struct CorrelationRow
    {
        int n = 0;
        double mean_corr = 0.0;
        double std_corr = 0.0;
    };

    /// Linear-vs-Shapley correlation sweep: for each n in {5,10,...,50},
    /// 20 portfolios with components uniform on (0,1); exact Shapley up to
    /// the enumeration cap, Monte Carlo above it.
    std::vector<CorrelationRow> fig1_correlations(std::uint64_t seed,
                                                  std::int64_t mc_samples = 100000);

    /// VaR linearization sweep: corr(c(S), l(S)) over random permutation
    /// prefixes, 20 generated PnL sets per n.
    std::vector<CorrelationRow> fig2_correlations(std::uint64_t seed,
                                                  std::int64_t alloc_samples = 20000,
                                                  int prefix_samples = 2000);

    struct Fig3Row
    {
        double rwa_total = 0.0;
        double w_rwa = 0.0;
        double w_lbs = 0.0;
        double beta = 0.0;
        double p = 0.0;
    };
    /// Exchange-rate scenario sweep: unit RWA capital scaled so total RWA
    /// runs 500..1500 in steps of 50, LBS held at 1000.
    std::vector<Fig3Row> fig3_sweep();

    struct ExperimentSpec
    {
        std::string name; // table1|table2|table3|fig1|fig2|fig3
        std::uint64_t seed = 7;
        std::int64_t samples = 0; // 0 = experiment default
        std::filesystem::path out_dir;
    };

    /// Runs one named experiment and writes its CSV artifacts; returns the
    /// files written. Deterministic for fixed (name, seed, samples).
    std::vector<std::filesystem::path> run_experiment(const ExperimentSpec &spec);

} // namespace capalloc
