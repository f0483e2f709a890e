#include "capalloc/portfolio.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "capalloc/errors.hpp"
#include "json.hpp"

namespace capalloc
{

    namespace
    {
        using nlohmann::json;

        void check_ratios(const CapitalRatios &ratios)
        {
            if (!(ratios.cet1 > 0.0 && ratios.cet1 < 1.0))
                throw validation_error("ratios.cet1 must lie in (0,1)");
            if (!(ratios.t1 > 0.0 && ratios.t1 < 1.0))
                throw validation_error("ratios.t1 must lie in (0,1)");
        }
    } // namespace

    std::vector<double> Portfolio::rwa_vector() const
    {
        std::vector<double> out;
        out.reserve(units.size());
        for (const auto &u : units)
            out.push_back(u.rwa_capital);
        return out;
    }

    std::vector<double> Portfolio::lbs_vector() const
    {
        std::vector<double> out;
        out.reserve(units.size());
        for (const auto &u : units)
            out.push_back(u.lbs_capital);
        return out;
    }

    std::vector<double> Portfolio::revenue_vector() const
    {
        std::vector<double> out;
        out.reserve(units.size());
        for (const auto &u : units)
            out.push_back(u.revenue);
        return out;
    }

    double Portfolio::total_rwa() const
    {
        double s = 0.0;
        for (const auto &u : units)
            s += u.rwa_capital;
        return s;
    }

    double Portfolio::total_lbs() const
    {
        double s = 0.0;
        for (const auto &u : units)
            s += u.lbs_capital;
        return s;
    }

    CapitalPair capital_from_exposures(double rwa_exposure, double lbs_exposure,
                                       const CapitalRatios &ratios)
    {
        check_ratios(ratios);
        if (rwa_exposure < 0.0)
            throw validation_error("rwa_exposure must be >= 0");
        if (lbs_exposure < 0.0)
            throw validation_error("lbs_exposure must be >= 0");
        return CapitalPair{ratios.cet1 * rwa_exposure, ratios.t1 * lbs_exposure};
    }

    void validate_portfolio(const Portfolio &portfolio)
    {
        if (portfolio.units.empty())
            throw validation_error("portfolio has an empty unit list");
        if (portfolio.ratios)
            check_ratios(*portfolio.ratios);

        std::set<std::string> subsidiary_ids(portfolio.tree.subsidiaries.begin(),
                                             portfolio.tree.subsidiaries.end());
        if (subsidiary_ids.size() != portfolio.tree.subsidiaries.size())
            throw validation_error("subsidiaries list contains duplicates");

        std::unordered_map<std::string, std::string> seen_entity;
        for (const auto &unit : portfolio.units)
        {
            if (unit.id.empty())
                throw validation_error("unit with empty id");
            if (unit.rwa_capital < 0.0)
                throw validation_error("unit '" + unit.id + "': rwa_capital is negative");
            if (unit.lbs_capital < 0.0)
                throw validation_error("unit '" + unit.id + "': lbs_capital is negative");
            if (!unit.entity.empty() && !subsidiary_ids.count(unit.entity))
                throw validation_error("unit '" + unit.id + "': entity '" + unit.entity +
                                       "' is not a declared subsidiary");

            auto it = seen_entity.find(unit.id);
            if (it != seen_entity.end())
            {
                if (it->second != unit.entity)
                    throw validation_error("overlapping subsidiaries: unit '" + unit.id +
                                           "' assigned to both '" + it->second + "' and '" +
                                           unit.entity + "'");
                throw validation_error("duplicate unit id '" + unit.id + "'");
            }
            seen_entity.emplace(unit.id, unit.entity);
        }
    }

    Portfolio parse_portfolio_json(const std::string &text)
    {
        json doc;
        try
        {
            doc = json::parse(text);
        }
        catch (const json::parse_error &err)
        {
            throw validation_error(std::string("portfolio parse failure: ") + err.what());
        }

        Portfolio portfolio;
        try
        {
            if (!doc.contains("units") || !doc["units"].is_array())
                throw validation_error("portfolio file missing 'units' array");

            if (doc.contains("subsidiaries"))
                for (const auto &s : doc["subsidiaries"])
                    portfolio.tree.subsidiaries.push_back(s.get<std::string>());

            if (doc.contains("ratios"))
            {
                CapitalRatios ratios;
                ratios.cet1 = doc["ratios"].at("cet1").get<double>();
                ratios.t1 = doc["ratios"].at("t1").get<double>();
                portfolio.ratios = ratios;
            }

            for (const auto &ju : doc["units"])
            {
                BusinessUnit unit;
                unit.id = ju.at("id").get<std::string>();
                unit.name = ju.value("name", unit.id);
                unit.revenue = ju.value("revenue", 0.0);
                if (!ju.contains("entity") || ju["entity"].is_null())
                    unit.entity.clear();
                else
                    unit.entity = ju["entity"].get<std::string>();

                // Either pre-converted capital amounts, or raw exposures plus
                // portfolio-level ratios.
                if (ju.contains("rwa_capital") || ju.contains("lbs_capital"))
                {
                    unit.rwa_capital = ju.at("rwa_capital").get<double>();
                    unit.lbs_capital = ju.at("lbs_capital").get<double>();
                }
                else if (ju.contains("rwa_exposure") || ju.contains("lbs_exposure"))
                {
                    if (!portfolio.ratios)
                        throw validation_error("unit '" + unit.id +
                                               "': exposures given but portfolio has no ratios");
                    auto pair = capital_from_exposures(ju.at("rwa_exposure").get<double>(),
                                                       ju.at("lbs_exposure").get<double>(),
                                                       *portfolio.ratios);
                    unit.rwa_capital = pair.rwa_capital;
                    unit.lbs_capital = pair.lbs_capital;
                }
                else
                {
                    throw validation_error("unit '" + unit.id +
                                           "': needs rwa_capital/lbs_capital or exposures");
                }
                portfolio.units.push_back(std::move(unit));
            }
        }
        catch (const json::exception &err)
        {
            throw validation_error(std::string("portfolio field error: ") + err.what());
        }

        for (const auto &unit : portfolio.units)
            if (!unit.entity.empty())
                portfolio.tree.membership[unit.id] = unit.entity;

        validate_portfolio(portfolio);
        return portfolio;
    }

    Portfolio load_portfolio(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw validation_error("cannot open portfolio file: " + path.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return parse_portfolio_json(buffer.str());
    }

    std::string portfolio_to_json(const Portfolio &portfolio)
    {
        json doc;
        doc["units"] = json::array();
        for (const auto &unit : portfolio.units)
        {
            json ju;
            ju["id"] = unit.id;
            ju["name"] = unit.name;
            ju["rwa_capital"] = unit.rwa_capital;
            ju["lbs_capital"] = unit.lbs_capital;
            ju["revenue"] = unit.revenue;
            if (!unit.entity.empty())
                ju["entity"] = unit.entity;
            doc["units"].push_back(std::move(ju));
        }
        if (!portfolio.tree.subsidiaries.empty())
            doc["subsidiaries"] = portfolio.tree.subsidiaries;
        if (portfolio.ratios)
            doc["ratios"] = {{"cet1", portfolio.ratios->cet1}, {"t1", portfolio.ratios->t1}};
        return doc.dump(2);
    }

    void save_portfolio(const Portfolio &portfolio, const std::filesystem::path &path)
    {
        std::ofstream out(path);
        if (!out)
            throw validation_error("cannot write portfolio file: " + path.string());
        out << portfolio_to_json(portfolio) << '\n';
    }

} // namespace capalloc
