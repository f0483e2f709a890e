#include "capalloc/allocation.hpp"

#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "capalloc/csv.hpp"
#include "capalloc/errors.hpp"
#include "capalloc/normal.hpp"
#include "capalloc/rng.hpp"

namespace capalloc
{

    std::string method_name(AllocationMethod method)
    {
        switch (method)
        {
        case AllocationMethod::standalone: return "standalone";
        case AllocationMethod::euler: return "euler";
        case AllocationMethod::shapley_exact: return "shapley-exact";
        case AllocationMethod::shapley_mc: return "shapley-mc";
        case AllocationMethod::linear: return "linear";
        case AllocationMethod::hierarchy_linear: return "hierarchy-linear";
        }
        return "unknown";
    }

    double ComponentAllocation::sum() const
    {
        double s = 0.0;
        for (double v : values)
            s += v;
        return s;
    }

    DominanceStats dominance_probability(std::span<const double> a,
                                         std::span<const double> b)
    {
        if (a.size() != b.size())
            throw validation_error("dominance_probability: vector lengths differ");
        if (a.empty())
            throw validation_error("dominance_probability: empty vectors");

        double sum_d = 0.0;
        double sum_d2 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            const double d = a[i] - b[i];
            sum_d += d;
            sum_d2 += d * d;
        }
        DominanceStats stats;
        stats.mu_s = 0.5 * sum_d;
        stats.sigma_s = std::sqrt(sum_d2 / 6.0 + sum_d * sum_d / 12.0);
        if (stats.sigma_s > 0.0)
            stats.p = normal_cdf(-stats.mu_s / stats.sigma_s);
        else
            stats.p = stats.mu_s == 0.0 ? 0.5 : (stats.mu_s < 0.0 ? 1.0 : 0.0);
        return stats;
    }

    ComponentAllocation standalone_allocation(const Portfolio &portfolio)
    {
        validate_portfolio(portfolio);
        const auto a = portfolio.rwa_vector();
        const auto b = portfolio.lbs_vector();
        double denom = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            denom += std::max(a[i], b[i]);
        if (denom <= 0.0)
            throw validation_error("standalone_allocation: all units have zero capital");
        const double total = std::max(portfolio.total_rwa(), portfolio.total_lbs());

        ComponentAllocation out;
        out.method = AllocationMethod::standalone;
        out.values.reserve(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            out.values.push_back(std::max(a[i], b[i]) * total / denom);
        out.stderrs.assign(a.size(), 0.0);
        return out;
    }

    ComponentAllocation euler_allocation(const Portfolio &portfolio)
    {
        validate_portfolio(portfolio);
        const auto a = portfolio.rwa_vector();
        const auto b = portfolio.lbs_vector();
        const double sum_a = portfolio.total_rwa();
        const double sum_b = portfolio.total_lbs();

        ComponentAllocation out;
        out.method = AllocationMethod::euler;
        out.values.reserve(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            if (sum_b > sum_a)
                out.values.push_back(b[i]);
            else if (sum_a > sum_b)
                out.values.push_back(a[i]);
            else
                out.values.push_back(0.5 * (a[i] + b[i])); // subgradient midpoint
        }
        out.stderrs.assign(a.size(), 0.0);
        return out;
    }

    LinearAllocationResult linear_max_allocation(std::span<const double> a,
                                                 std::span<const double> b)
    {
        DominanceStats stats = dominance_probability(a, b);
        double sum_a = 0.0, sum_b = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            sum_a += a[i];
            sum_b += b[i];
        }
        const double total = std::max(sum_a, sum_b);
        const double denom = sum_a - 2.0 * stats.p * stats.mu_s;
        if (std::abs(denom) < 1e-9 * std::max({std::abs(sum_a), std::abs(sum_b), 1.0}))
            throw numeric_error("linear_max_allocation: singular scale, "
                                "sum(a) - 2 p mu_s is numerically zero");
        const double beta = total / denom;

        LinearAllocationResult result;
        result.stats = stats;
        result.rates.beta = beta;
        result.rates.weights = {beta * (1.0 - stats.p), beta * stats.p};
        result.rates.labels = {"w_rwa", "w_lbs"};
        result.allocation.method = AllocationMethod::linear;
        result.allocation.values.reserve(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            result.allocation.values.push_back(beta *
                                               ((1.0 - stats.p) * a[i] + stats.p * b[i]));
        result.allocation.stderrs.assign(a.size(), 0.0);
        return result;
    }

    LinearAllocationResult linear_max_allocation(const Portfolio &portfolio)
    {
        validate_portfolio(portfolio);
        const auto a = portfolio.rwa_vector();
        const auto b = portfolio.lbs_vector();
        return linear_max_allocation(a, b);
    }

    LinearAllocationResult two_function_allocation(std::span<const double> alpha_f,
                                                   std::span<const double> alpha_g)
    {
        auto result = linear_max_allocation(alpha_f, alpha_g);
        result.rates.labels = {"w_f", "w_g"};
        return result;
    }

    // ------------------------------------------------------------------
    // hierarchy
    // ------------------------------------------------------------------

    namespace
    {
        struct JointTally
        {
            std::array<double, 6> counts{};

            void pair(int base, double u, double v, double weight)
            {
                if (u > v)
                    counts[static_cast<std::size_t>(base)] += weight;
                else if (v > u)
                    counts[static_cast<std::size_t>(base) + 1] += weight;
                else
                {
                    counts[static_cast<std::size_t>(base)] += 0.5 * weight;
                    counts[static_cast<std::size_t>(base) + 1] += 0.5 * weight;
                }
            }
        };

        constexpr std::int64_t kJointBlockSize = 8192;

        JointTally run_joint_block(const HierarchyComponents &c, std::uint64_t seed,
                                   std::int64_t block_index, std::int64_t block_samples)
        {
            const int n = c.size();
            SubstreamRng rng(seed, static_cast<std::uint64_t>(block_index));
            std::vector<int> perm(static_cast<std::size_t>(n));
            JointTally tally;
            for (std::int64_t t = 0; t < block_samples; ++t)
            {
                for (int i = 0; i < n; ++i)
                    perm[static_cast<std::size_t>(i)] = i;
                rng.shuffle(perm);
                const auto cut =
                    static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n) + 1));
                double ft = 0, gt = 0, fx = 0, gx = 0, fy = 0, gy = 0;
                for (int j = 0; j < cut; ++j)
                {
                    const auto i = static_cast<std::size_t>(perm[static_cast<std::size_t>(j)]);
                    ft += c.f_theta[i];
                    gt += c.g_theta[i];
                    fx += c.f_x[i];
                    gx += c.g_x[i];
                    fy += c.f_y[i];
                    gy += c.g_y[i];
                }
                const double theta_side = std::max(ft, gt);
                const double sub_side = std::max(fx, gx) + std::max(fy, gy);
                if (sub_side > theta_side)
                {
                    tally.pair(2, fx, gx, 1.0);
                    tally.pair(4, fy, gy, 1.0);
                }
                else
                {
                    // Regime ties go to the consolidated side, which keeps a
                    // degenerate hierarchy exactly in the theta regime.
                    tally.pair(0, ft, gt, 1.0);
                }
            }
            return tally;
        }
    } // namespace

    std::array<double, 6> hierarchy_joint_probabilities(
        const HierarchyComponents &components, std::int64_t samples, std::uint64_t seed)
    {
        validate_hierarchy_components(components);
        if (samples < 1)
            throw validation_error("hierarchy_joint_probabilities: samples must be >= 1");

        if (components.degenerate())
        {
            // Structural reduction: the subsidiary side is identically zero,
            // so the consolidated regime has probability one and the theta
            // pair collapses to the analytic single-max dominance split.
            DominanceStats stats =
                dominance_probability(components.f_theta, components.g_theta);
            // p(f<g) weighting of g mirrors p(a<b) weighting of b.
            return {1.0 - stats.p, stats.p, 0.0, 0.0, 0.0, 0.0};
        }

        const std::int64_t blocks = (samples + kJointBlockSize - 1) / kJointBlockSize;
        std::vector<JointTally> tallies(static_cast<std::size_t>(blocks));
        unsigned hw = std::thread::hardware_concurrency();
        std::int64_t workers = std::min<std::int64_t>(blocks, hw ? hw : 1);
        if (workers <= 1)
        {
            for (std::int64_t b = 0; b < blocks; ++b)
                tallies[static_cast<std::size_t>(b)] = run_joint_block(
                    components, seed, b, std::min(kJointBlockSize, samples - b * kJointBlockSize));
        }
        else
        {
            std::atomic<std::int64_t> next{0};
            std::vector<std::thread> pool;
            for (std::int64_t w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (;;)
                    {
                        const std::int64_t b = next.fetch_add(1);
                        if (b >= blocks)
                            return;
                        tallies[static_cast<std::size_t>(b)] = run_joint_block(
                            components, seed, b,
                            std::min(kJointBlockSize, samples - b * kJointBlockSize));
                    }
                });
            for (auto &t : pool)
                t.join();
        }

        std::array<double, 6> probabilities{};
        for (const auto &tally : tallies)
            for (std::size_t j = 0; j < 6; ++j)
                probabilities[j] += tally.counts[j];
        for (auto &p : probabilities)
            p /= static_cast<double>(samples);
        return probabilities;
    }

    HierarchyAllocationResult hierarchy_allocation(const HierarchyComponents &components,
                                                   std::int64_t samples, std::uint64_t seed)
    {
        const auto probabilities = hierarchy_joint_probabilities(components, samples, seed);
        const int n = components.size();

        std::vector<double> raw(static_cast<std::size_t>(n), 0.0);
        for (std::size_t i = 0; i < raw.size(); ++i)
            raw[i] = probabilities[0] * components.f_theta[i] +
                     probabilities[1] * components.g_theta[i] +
                     probabilities[2] * components.f_x[i] +
                     probabilities[3] * components.g_x[i] +
                     probabilities[4] * components.f_y[i] +
                     probabilities[5] * components.g_y[i];

        double raw_sum = 0.0;
        for (double v : raw)
            raw_sum += v;
        const double total = nested_max_cost(components)->total();
        if (std::abs(raw_sum) < 1e-9 * std::max(1.0, std::abs(total)))
            throw numeric_error("hierarchy_allocation: unscaled allocation sums to zero");
        const double beta = total / raw_sum;

        HierarchyAllocationResult result;
        result.probabilities = probabilities;
        result.rates.beta = beta;
        result.rates.labels = {"w_f_theta", "w_g_theta", "w_f_x", "w_g_x", "w_f_y", "w_g_y"};
        result.rates.weights.assign(6, 0.0);
        for (std::size_t j = 0; j < 6; ++j)
            result.rates.weights[j] = beta * probabilities[j];
        result.allocation.method = AllocationMethod::hierarchy_linear;
        result.allocation.values.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            result.allocation.values[i] = beta * raw[i];
        result.allocation.stderrs.assign(raw.size(), 0.0);
        result.allocation.samples = components.degenerate() ? 0 : samples;
        return result;
    }

    void write_allocation_report(std::ostream &out, const Portfolio &portfolio,
                                 const ComponentAllocation &allocation,
                                 const ExchangeRates *rates)
    {
        if (allocation.values.size() != static_cast<std::size_t>(portfolio.size()))
            throw validation_error("allocation report: allocation size mismatch");
        CsvWriter csv(out);
        std::vector<std::string> header = {"unit_id", "method", "rwa_capital",
                                           "lbs_capital", "allocation", "stderr"};
        if (rates)
        {
            header.push_back("beta");
            for (const auto &label : rates->labels)
                header.push_back(label);
        }
        csv.row(header);
        for (std::size_t i = 0; i < allocation.values.size(); ++i)
        {
            const auto &unit = portfolio.units[i];
            std::vector<std::string> row = {
                unit.id,
                method_name(allocation.method),
                format_csv_double(unit.rwa_capital),
                format_csv_double(unit.lbs_capital),
                format_csv_double(allocation.values[i]),
                format_csv_double(allocation.stderrs.empty() ? 0.0 : allocation.stderrs[i]),
            };
            if (rates)
            {
                row.push_back(format_csv_double(rates->beta));
                for (double w : rates->weights)
                    row.push_back(format_csv_double(w));
            }
            csv.row(row);
        }
    }

} // namespace capalloc
