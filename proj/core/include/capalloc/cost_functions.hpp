#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "capalloc/portfolio.hpp"
#include "capalloc/set_cost.hpp"

namespace capalloc
{

    /// Scenario-by-unit profit/loss matrix (row-major, m scenarios x n units).
    struct PnLMatrix
    {
        int scenarios = 0;
        int units = 0;
        std::vector<double> data;
        std::vector<std::string> unit_ids;

        double at(int scenario, int unit) const
        {
            return data[static_cast<std::size_t>(scenario) * static_cast<std::size_t>(units) +
                        static_cast<std::size_t>(unit)];
        }
        double &at(int scenario, int unit)
        {
            return data[static_cast<std::size_t>(scenario) * static_cast<std::size_t>(units) +
                        static_cast<std::size_t>(unit)];
        }
    };

    void validate_pnl(const PnLMatrix &pnl);
    PnLMatrix load_pnl_csv(const std::filesystem::path &path);
    void save_pnl_csv(const PnLMatrix &pnl, const std::filesystem::path &path);

    /// c(S) = max(sum of subset RWA capital, sum of subset LBS capital).
    std::unique_ptr<SetCost> additive_max_cost(const Portfolio &portfolio);
    std::unique_ptr<SetCost> additive_max_cost(std::vector<double> rwa,
                                               std::vector<double> lbs);

    /// Per-unit capital components of a two-subsidiary legal entity
    /// hierarchy: consolidated (theta) plus subsidiaries X and Y. Subsidiary
    /// entries must be zero for units outside that subsidiary.
    struct HierarchyComponents
    {
        std::vector<double> f_theta, g_theta; // consolidated LBS / RWA capital
        std::vector<double> f_x, g_x;
        std::vector<double> f_y, g_y;
        std::vector<int> members_x, members_y;

        int size() const { return static_cast<int>(f_theta.size()); }
        bool degenerate() const; // all subsidiary components zero
    };
    void validate_hierarchy_components(const HierarchyComponents &components);

    /// Nested legal-entity cost:
    ///   c(S) = max( max(f_theta(S), g_theta(S)),
    ///               max(f_x(S&X), g_x(S&X)) + max(f_y(S&Y), g_y(S&Y)) )
    /// with every f,g additive over the supplied per-unit components.
    std::unique_ptr<SetCost> nested_max_cost(const HierarchyComponents &components);

    /// Builds hierarchy components from a portfolio with exactly two
    /// declared subsidiaries: consolidated components are the unit capital
    /// amounts and each unit's subsidiary components replicate them within
    /// its own subsidiary.
    HierarchyComponents hierarchy_components_from_portfolio(const Portfolio &portfolio);

    /// Historical-simulation VaR of the subset loss at the given level.
    /// Losses are negated sums of member PnL columns; the quantile is the
    /// ceil((1-level)*m)-th largest loss. c(empty) = 0.
    std::unique_ptr<SetCost> var_cost(PnLMatrix pnl, double level);

    /// l(S) = max(sum of alpha_f over S, sum of alpha_g over S). When the
    /// inputs are efficient allocations of f and g, l(Omega) = max(f,g)(Omega).
    std::unique_ptr<SetCost> linearized_cost(std::vector<double> alpha_f,
                                             std::vector<double> alpha_g);

    /// Seedable PnL generator used by the VaR linearization experiment:
    /// 250-scenario normal PnL with per-unit volatilities uniform on
    /// [0.5, 2.0] and a one-factor correlation structure with loadings
    /// uniform on [0.3, 0.9].
    PnLMatrix generate_pnl(int units, int scenarios, std::uint64_t seed,
                           std::uint64_t stream = 0);

} // namespace capalloc
