#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace capalloc
{

    /// Regulatory capital ratios applied to raw exposures: the core tier-one
    /// ratio converts RWA exposure, the tier-one ratio converts leveraged
    /// balance sheet exposure. Both must lie strictly inside (0, 1).
    struct CapitalRatios
    {
        double cet1 = 0.045;
        double t1 = 0.03;
    };

    struct BusinessUnit
    {
        std::string id;
        std::string name;
        double rwa_capital = 0.0;
        double lbs_capital = 0.0;
        double revenue = 0.0;
        std::string entity; // subsidiary id, or empty for consolidated-only
    };

    /// Consolidated entity plus disjoint subsidiaries. Membership is carried
    /// on the units; this type records the declared subsidiary ids and the
    /// derived unit->subsidiary map.
    struct LegalEntityTree
    {
        std::string consolidated = "consolidated";
        std::vector<std::string> subsidiaries;
        std::unordered_map<std::string, std::string> membership; // unit id -> subsidiary
    };

    struct Portfolio
    {
        std::vector<BusinessUnit> units;
        LegalEntityTree tree;
        std::optional<CapitalRatios> ratios;

        int size() const { return static_cast<int>(units.size()); }
        std::vector<double> rwa_vector() const;
        std::vector<double> lbs_vector() const;
        std::vector<double> revenue_vector() const;
        double total_rwa() const;
        double total_lbs() const;
    };

    /// Converts raw exposures into the (rwa_capital, lbs_capital) pair of
    /// capital amounts; the binding capital is the max of the two.
    struct CapitalPair
    {
        double rwa_capital;
        double lbs_capital;
        double binding() const { return rwa_capital > lbs_capital ? rwa_capital : lbs_capital; }
    };
    CapitalPair capital_from_exposures(double rwa_exposure, double lbs_exposure,
                                       const CapitalRatios &ratios);

    /// Validates a fully-built portfolio: unique ids, nonnegative capital,
    /// consistent entity labels, at least one unit. Throws validation_error
    /// naming the offending unit and field.
    void validate_portfolio(const Portfolio &portfolio);

    Portfolio load_portfolio(const std::filesystem::path &path);
    Portfolio parse_portfolio_json(const std::string &text);
    std::string portfolio_to_json(const Portfolio &portfolio);
    void save_portfolio(const Portfolio &portfolio, const std::filesystem::path &path);

} // namespace capalloc
