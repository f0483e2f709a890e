#include "capalloc/cost_functions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "capalloc/csv.hpp"
#include "capalloc/errors.hpp"
#include "capalloc/rng.hpp"

namespace capalloc
{

    void validate_pnl(const PnLMatrix &pnl)
    {
        if (pnl.scenarios < 1)
            throw validation_error("PnL matrix needs at least one scenario");
        if (pnl.units < 1)
            throw validation_error("PnL matrix needs at least one unit");
        if (pnl.data.size() != static_cast<std::size_t>(pnl.scenarios) *
                                   static_cast<std::size_t>(pnl.units))
            throw validation_error("PnL matrix storage size mismatch");
        for (double v : pnl.data)
            if (!std::isfinite(v))
                throw validation_error("PnL matrix contains a non-finite value");
    }

    PnLMatrix load_pnl_csv(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw validation_error("cannot open PnL file: " + path.string());
        std::string line;
        if (!std::getline(in, line))
            throw validation_error("PnL file is empty: " + path.string());

        PnLMatrix pnl;
        pnl.unit_ids = split_csv_line(line);
        pnl.units = static_cast<int>(pnl.unit_ids.size());
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            auto fields = split_csv_line(line);
            if (static_cast<int>(fields.size()) != pnl.units)
                throw validation_error("PnL row has " + std::to_string(fields.size()) +
                                       " fields, expected " + std::to_string(pnl.units));
            for (const auto &f : fields)
                pnl.data.push_back(parse_csv_double(f, "PnL"));
            ++pnl.scenarios;
        }
        validate_pnl(pnl);
        return pnl;
    }

    void save_pnl_csv(const PnLMatrix &pnl, const std::filesystem::path &path)
    {
        validate_pnl(pnl);
        std::ofstream out(path);
        if (!out)
            throw validation_error("cannot write PnL file: " + path.string());
        CsvWriter csv(out);
        std::vector<std::string> header = pnl.unit_ids;
        if (header.empty())
            for (int j = 0; j < pnl.units; ++j)
                header.push_back("u" + std::to_string(j));
        csv.row(header);
        for (int t = 0; t < pnl.scenarios; ++t)
        {
            std::vector<std::string> row;
            row.reserve(static_cast<std::size_t>(pnl.units));
            for (int j = 0; j < pnl.units; ++j)
                row.push_back(format_csv_double(pnl.at(t, j)));
            csv.row(row);
        }
    }

    // ------------------------------------------------------------------
    // additive max
    // ------------------------------------------------------------------

    namespace
    {
        class AdditiveMaxAccumulator final : public CostAccumulator
        {
        public:
            AdditiveMaxAccumulator(const std::vector<double> *a, const std::vector<double> *b)
                : a_(a), b_(b) {}
            void add(int unit) override
            {
                sum_a_ += (*a_)[static_cast<std::size_t>(unit)];
                sum_b_ += (*b_)[static_cast<std::size_t>(unit)];
            }
            double cost() const override { return sum_a_ > sum_b_ ? sum_a_ : sum_b_; }
            void reset() override { sum_a_ = sum_b_ = 0.0; }

        private:
            const std::vector<double> *a_;
            const std::vector<double> *b_;
            double sum_a_ = 0.0;
            double sum_b_ = 0.0;
        };

        class AdditiveMaxCost final : public SetCost
        {
        public:
            AdditiveMaxCost(std::vector<double> a, std::vector<double> b)
                : a_(std::move(a)), b_(std::move(b))
            {
                if (a_.size() != b_.size())
                    throw validation_error("additive_max_cost: component lengths differ");
                if (a_.empty())
                    throw validation_error("additive_max_cost: empty component vectors");
            }
            int size() const override { return static_cast<int>(a_.size()); }
            std::unique_ptr<CostAccumulator> make_accumulator() const override
            {
                return std::make_unique<AdditiveMaxAccumulator>(&a_, &b_);
            }

        private:
            std::vector<double> a_;
            std::vector<double> b_;
        };
    } // namespace

    std::unique_ptr<SetCost> additive_max_cost(std::vector<double> rwa,
                                               std::vector<double> lbs)
    {
        return std::make_unique<AdditiveMaxCost>(std::move(rwa), std::move(lbs));
    }

    std::unique_ptr<SetCost> additive_max_cost(const Portfolio &portfolio)
    {
        validate_portfolio(portfolio);
        return additive_max_cost(portfolio.rwa_vector(), portfolio.lbs_vector());
    }

    // ------------------------------------------------------------------
    // nested legal-entity max
    // ------------------------------------------------------------------

    bool HierarchyComponents::degenerate() const
    {
        auto all_zero = [](const std::vector<double> &v) {
            return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
        };
        return all_zero(f_x) && all_zero(g_x) && all_zero(f_y) && all_zero(g_y);
    }

    void validate_hierarchy_components(const HierarchyComponents &components)
    {
        const std::size_t n = components.f_theta.size();
        if (n == 0)
            throw validation_error("hierarchy components: empty unit set");
        for (const auto *v : {&components.g_theta, &components.f_x, &components.g_x,
                              &components.f_y, &components.g_y})
            if (v->size() != n)
                throw validation_error("hierarchy components: vector lengths differ");

        std::vector<bool> in_x(n, false), in_y(n, false);
        for (int i : components.members_x)
        {
            if (i < 0 || static_cast<std::size_t>(i) >= n)
                throw validation_error("hierarchy components: X member index out of range");
            in_x[static_cast<std::size_t>(i)] = true;
        }
        for (int i : components.members_y)
        {
            if (i < 0 || static_cast<std::size_t>(i) >= n)
                throw validation_error("hierarchy components: Y member index out of range");
            if (in_x[static_cast<std::size_t>(i)])
                throw validation_error("hierarchy components: unit " + std::to_string(i) +
                                       " belongs to both subsidiaries");
            in_y[static_cast<std::size_t>(i)] = true;
        }
        for (std::size_t i = 0; i < n; ++i)
        {
            if (!in_x[i] && (components.f_x[i] != 0.0 || components.g_x[i] != 0.0))
                throw validation_error("hierarchy components: unit " + std::to_string(i) +
                                       " has X components but is not an X member");
            if (!in_y[i] && (components.f_y[i] != 0.0 || components.g_y[i] != 0.0))
                throw validation_error("hierarchy components: unit " + std::to_string(i) +
                                       " has Y components but is not a Y member");
        }
    }

    namespace
    {
        class NestedMaxAccumulator final : public CostAccumulator
        {
        public:
            explicit NestedMaxAccumulator(const HierarchyComponents *c) : c_(c) {}
            void add(int unit) override
            {
                const auto i = static_cast<std::size_t>(unit);
                ft_ += c_->f_theta[i];
                gt_ += c_->g_theta[i];
                fx_ += c_->f_x[i];
                gx_ += c_->g_x[i];
                fy_ += c_->f_y[i];
                gy_ += c_->g_y[i];
            }
            double cost() const override
            {
                const double consolidated = ft_ > gt_ ? ft_ : gt_;
                const double subs = (fx_ > gx_ ? fx_ : gx_) + (fy_ > gy_ ? fy_ : gy_);
                return consolidated > subs ? consolidated : subs;
            }
            void reset() override { ft_ = gt_ = fx_ = gx_ = fy_ = gy_ = 0.0; }

        private:
            const HierarchyComponents *c_;
            double ft_ = 0, gt_ = 0, fx_ = 0, gx_ = 0, fy_ = 0, gy_ = 0;
        };

        class NestedMaxCost final : public SetCost
        {
        public:
            explicit NestedMaxCost(HierarchyComponents components)
                : components_(std::move(components))
            {
                validate_hierarchy_components(components_);
            }
            int size() const override { return components_.size(); }
            std::unique_ptr<CostAccumulator> make_accumulator() const override
            {
                return std::make_unique<NestedMaxAccumulator>(&components_);
            }

        private:
            HierarchyComponents components_;
        };
    } // namespace

    std::unique_ptr<SetCost> nested_max_cost(const HierarchyComponents &components)
    {
        return std::make_unique<NestedMaxCost>(components);
    }

    HierarchyComponents hierarchy_components_from_portfolio(const Portfolio &portfolio)
    {
        validate_portfolio(portfolio);
        if (portfolio.tree.subsidiaries.size() != 2)
            throw validation_error("hierarchy allocation needs exactly two subsidiaries, got " +
                                   std::to_string(portfolio.tree.subsidiaries.size()));
        const std::string &x = portfolio.tree.subsidiaries[0];
        const std::string &y = portfolio.tree.subsidiaries[1];

        const auto n = static_cast<std::size_t>(portfolio.size());
        HierarchyComponents c;
        c.f_theta.assign(n, 0.0);
        c.g_theta.assign(n, 0.0);
        c.f_x.assign(n, 0.0);
        c.g_x.assign(n, 0.0);
        c.f_y.assign(n, 0.0);
        c.g_y.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto &unit = portfolio.units[i];
            c.f_theta[i] = unit.lbs_capital;
            c.g_theta[i] = unit.rwa_capital;
            if (unit.entity == x)
            {
                c.members_x.push_back(static_cast<int>(i));
                c.f_x[i] = unit.lbs_capital;
                c.g_x[i] = unit.rwa_capital;
            }
            else if (unit.entity == y)
            {
                c.members_y.push_back(static_cast<int>(i));
                c.f_y[i] = unit.lbs_capital;
                c.g_y[i] = unit.rwa_capital;
            }
        }
        validate_hierarchy_components(c);
        return c;
    }

    // ------------------------------------------------------------------
    // historical VaR
    // ------------------------------------------------------------------

    namespace
    {
        // k-th largest element of losses, k >= 1, by a single scan keeping
        // the top-k in a small sorted buffer. k is tiny for the levels this
        // library runs at (e.g. 3 for 99% of 250 scenarios).
        double kth_largest(const std::vector<double> &losses, int k)
        {
            const int m = static_cast<int>(losses.size());
            if (k >= m)
                return *std::min_element(losses.begin(), losses.end());
            std::vector<double> top;
            top.reserve(static_cast<std::size_t>(k));
            for (double v : losses)
            {
                if (static_cast<int>(top.size()) < k)
                {
                    top.insert(std::upper_bound(top.begin(), top.end(), v), v);
                }
                else if (v > top.front())
                {
                    top.erase(top.begin());
                    top.insert(std::upper_bound(top.begin(), top.end(), v), v);
                }
            }
            return top.front();
        }

        class VarAccumulator final : public CostAccumulator
        {
        public:
            VarAccumulator(const PnLMatrix *pnl, int quantile_rank)
                : pnl_(pnl), rank_(quantile_rank),
                  losses_(static_cast<std::size_t>(pnl->scenarios), 0.0) {}

            void add(int unit) override
            {
                const int m = pnl_->scenarios;
                for (int t = 0; t < m; ++t)
                    losses_[static_cast<std::size_t>(t)] -= pnl_->at(t, unit);
                empty_ = false;
            }
            double cost() const override
            {
                if (empty_)
                    return 0.0;
                return kth_largest(losses_, rank_);
            }
            void reset() override
            {
                std::fill(losses_.begin(), losses_.end(), 0.0);
                empty_ = true;
            }

        private:
            const PnLMatrix *pnl_;
            int rank_;
            std::vector<double> losses_;
            bool empty_ = true;
        };

        class VarCost final : public SetCost
        {
        public:
            VarCost(PnLMatrix pnl, double level) : pnl_(std::move(pnl))
            {
                validate_pnl(pnl_);
                if (!(level > 0.0 && level < 1.0))
                    throw validation_error("var_cost: level must lie in (0,1)");
                rank_ = static_cast<int>(
                    std::ceil((1.0 - level) * static_cast<double>(pnl_.scenarios)));
                rank_ = std::max(1, std::min(rank_, pnl_.scenarios));
            }
            int size() const override { return pnl_.units; }
            std::unique_ptr<CostAccumulator> make_accumulator() const override
            {
                return std::make_unique<VarAccumulator>(&pnl_, rank_);
            }

        private:
            PnLMatrix pnl_;
            int rank_;
        };
    } // namespace

    std::unique_ptr<SetCost> var_cost(PnLMatrix pnl, double level)
    {
        return std::make_unique<VarCost>(std::move(pnl), level);
    }

    // ------------------------------------------------------------------
    // linearized surrogate
    // ------------------------------------------------------------------

    std::unique_ptr<SetCost> linearized_cost(std::vector<double> alpha_f,
                                             std::vector<double> alpha_g)
    {
        if (alpha_f.size() != alpha_g.size())
            throw validation_error("linearized_cost: allocation lengths differ");
        return additive_max_cost(std::move(alpha_f), std::move(alpha_g));
    }

    // ------------------------------------------------------------------
    // PnL generator for the VaR linearization experiment
    // ------------------------------------------------------------------

    PnLMatrix generate_pnl(int units, int scenarios, std::uint64_t seed,
                           std::uint64_t stream)
    {
        if (units < 1 || scenarios < 1)
            throw validation_error("generate_pnl: units and scenarios must be >= 1");
        SubstreamRng rng(seed, stream);
        std::vector<double> vol(static_cast<std::size_t>(units));
        std::vector<double> loading(static_cast<std::size_t>(units));
        for (int j = 0; j < units; ++j)
        {
            vol[static_cast<std::size_t>(j)] = 0.5 + 1.5 * rng.next_double();
            loading[static_cast<std::size_t>(j)] = 0.3 + 0.6 * rng.next_double();
        }
        PnLMatrix pnl;
        pnl.units = units;
        pnl.scenarios = scenarios;
        pnl.data.resize(static_cast<std::size_t>(units) * static_cast<std::size_t>(scenarios));
        for (int j = 0; j < units; ++j)
            pnl.unit_ids.push_back("u" + std::to_string(j));
        for (int t = 0; t < scenarios; ++t)
        {
            const double factor = rng.next_normal();
            for (int j = 0; j < units; ++j)
            {
                const double lam = loading[static_cast<std::size_t>(j)];
                const double idio = rng.next_normal();
                pnl.at(t, j) = vol[static_cast<std::size_t>(j)] *
                               (lam * factor + std::sqrt(1.0 - lam * lam) * idio);
            }
        }
        return pnl;
    }

} // namespace capalloc
