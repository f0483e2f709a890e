#include "capalloc/shapley.hpp"

#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "capalloc/errors.hpp"
#include "capalloc/rng.hpp"

namespace capalloc
{

    double AllocationEstimate::sum() const
    {
        double s = 0.0;
        for (double v : values)
            s += v;
        return s;
    }

    double AllocationEstimate::aggregate_stderr() const
    {
        double s = 0.0;
        for (double e : stderrs)
            s += e * e;
        return std::sqrt(s);
    }

    IndicatorMoments indicator_moments(int n)
    {
        if (n < 2)
            throw validation_error("indicator_moments: pair moments need n >= 2");
        return IndicatorMoments{0.5, 1.0 / 3.0, 1.0 / 12.0, 1.0 / 3.0};
    }

    IndicatorMomentsEstimate indicator_moments_mc(int n, std::int64_t samples,
                                                  std::uint64_t seed)
    {
        if (n < 2)
            throw validation_error("indicator_moments_mc: pair moments need n >= 2");
        if (samples < 1)
            throw validation_error("indicator_moments_mc: samples must be >= 1");

        // Track the indicators of units 0 and 1 and their product.
        SubstreamRng rng(seed, 0);
        double s_x = 0, s_y = 0, s_xy = 0;
        double s_xx = 0, s_yy = 0, s_xyxy = 0;
        double s_x_xy = 0, s_y_xy = 0, s_x_y = 0;
        std::vector<int> perm(static_cast<std::size_t>(n));
        for (std::int64_t t = 0; t < samples; ++t)
        {
            for (int i = 0; i < n; ++i)
                perm[static_cast<std::size_t>(i)] = i;
            rng.shuffle(perm);
            auto cut = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n) + 1));
            double x = 0, y = 0;
            for (int j = 0; j < cut; ++j)
            {
                if (perm[static_cast<std::size_t>(j)] == 0)
                    x = 1;
                else if (perm[static_cast<std::size_t>(j)] == 1)
                    y = 1;
            }
            double xy = x * y;
            s_x += x;
            s_y += y;
            s_xy += xy;
            s_xx += x * x;
            s_yy += y * y;
            s_xyxy += xy * xy;
            s_x_xy += x * xy;
            s_y_xy += y * xy;
            s_x_y += x * y;
        }
        const double T = static_cast<double>(samples);
        const double mx = s_x / T, my = s_y / T, mxy = s_xy / T;
        const double var_x = (s_xx / T - mx * mx);
        const double var_y = (s_yy / T - my * my);
        const double var_xy = (s_xyxy / T - mxy * mxy);
        const double cov_x_xy = (s_x_xy / T - mx * mxy);
        const double cov_y_xy = (s_y_xy / T - my * mxy);
        const double cov_x_y = (s_x_y / T - mx * my);

        IndicatorMomentsEstimate out;
        out.samples = samples;
        out.value.mean = mx;
        out.value.pair_second_moment = mxy;
        out.value.pair_covariance = mxy - mx * my;
        // corr = cov / sqrt(var(1_i) var(1_j)) with var(1) = m(1-m)
        const double vx = mx * (1.0 - mx);
        const double vy = my * (1.0 - my);
        out.value.pair_correlation =
            (vx > 0 && vy > 0) ? out.value.pair_covariance / std::sqrt(vx * vy) : 0.0;

        out.stderr.mean = std::sqrt(var_x / T);
        out.stderr.pair_second_moment = std::sqrt(var_xy / T);
        // Delta method for cov = mxy - mx*my with gradient (-my, -mx, 1).
        const double g1 = -my, g2 = -mx;
        double var_cov = g1 * g1 * var_x + g2 * g2 * var_y + var_xy +
                         2.0 * (g1 * g2 * cov_x_y + g1 * cov_x_xy + g2 * cov_y_xy);
        out.stderr.pair_covariance = std::sqrt(std::max(0.0, var_cov) / T);
        // Correlation stderr: scale the covariance stderr by the (nearly
        // constant) 1/sqrt(vx*vy) factor; adequate for 3-sigma screens.
        out.stderr.pair_correlation =
            (vx > 0 && vy > 0) ? out.stderr.pair_covariance / std::sqrt(vx * vy) : 0.0;
        return out;
    }

    AllocationEstimate exact_shapley(const SetCost &cost, int cap)
    {
        const int n = cost.size();
        if (n < 1)
            throw validation_error("exact_shapley: empty unit set");
        if (n > cap)
            throw validation_error("exact_shapley: n = " + std::to_string(n) +
                                   " exceeds the enumeration cap " + std::to_string(cap) +
                                   "; use mc_shapley");

        const std::vector<double> costs = enumerate_subset_costs(cost);

        // weight[s] = s! (n-1-s)! / n!
        std::vector<double> weight(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s)
        {
            double w = 1.0 / n;
            for (int i = 1; i <= s; ++i)
                w *= static_cast<double>(i) / static_cast<double>(n - i);
            weight[static_cast<std::size_t>(s)] = w;
        }

        const std::size_t count = std::size_t{1} << n;
        std::vector<int> popcount(count, 0);
        for (std::size_t mask = 1; mask < count; ++mask)
            popcount[mask] = popcount[mask >> 1] + static_cast<int>(mask & 1u);

        AllocationEstimate out;
        out.values.assign(static_cast<std::size_t>(n), 0.0);
        out.stderrs.assign(static_cast<std::size_t>(n), 0.0);
        double factorial = 1.0;
        for (int i = 2; i <= n; ++i)
            factorial *= i;
        out.samples = static_cast<std::int64_t>(factorial);

        for (int k = 0; k < n; ++k)
        {
            const std::size_t bit = std::size_t{1} << k;
            double alpha = 0.0;
            for (std::size_t mask = 0; mask < count; ++mask)
            {
                if (mask & bit)
                    continue;
                alpha += weight[static_cast<std::size_t>(popcount[mask])] *
                         (costs[mask | bit] - costs[mask]);
            }
            out.values[static_cast<std::size_t>(k)] = alpha;
        }
        return out;
    }

    namespace
    {
        struct BlockPartial
        {
            std::vector<double> sum;
            std::vector<double> sum_sq;
        };

        constexpr std::int64_t kBlockSize = 8192;

        void run_block(const SetCost &cost, int n, std::uint64_t seed,
                       std::int64_t block_index, std::int64_t block_samples,
                       BlockPartial &partial)
        {
            SubstreamRng rng(seed, static_cast<std::uint64_t>(block_index));
            auto acc = cost.make_accumulator();
            std::vector<int> perm(static_cast<std::size_t>(n));
            partial.sum.assign(static_cast<std::size_t>(n), 0.0);
            partial.sum_sq.assign(static_cast<std::size_t>(n), 0.0);
            for (std::int64_t t = 0; t < block_samples; ++t)
            {
                for (int i = 0; i < n; ++i)
                    perm[static_cast<std::size_t>(i)] = i;
                rng.shuffle(perm);
                acc->reset();
                double prev = 0.0;
                for (int j = 0; j < n; ++j)
                {
                    const int unit = perm[static_cast<std::size_t>(j)];
                    acc->add(unit);
                    const double cur = acc->cost();
                    const double inc = cur - prev;
                    prev = cur;
                    partial.sum[static_cast<std::size_t>(unit)] += inc;
                    partial.sum_sq[static_cast<std::size_t>(unit)] += inc * inc;
                }
            }
        }
    } // namespace

    AllocationEstimate mc_shapley(const SetCost &cost, std::int64_t samples,
                                  std::uint64_t seed)
    {
        const int n = cost.size();
        if (n < 1)
            throw validation_error("mc_shapley: empty unit set");
        if (samples < 1)
            throw validation_error("mc_shapley: samples must be >= 1");

        const std::int64_t blocks = (samples + kBlockSize - 1) / kBlockSize;
        std::vector<BlockPartial> partials(static_cast<std::size_t>(blocks));

        unsigned hw = std::thread::hardware_concurrency();
        std::int64_t workers = std::min<std::int64_t>(blocks, hw ? hw : 1);
        if (workers <= 1)
        {
            for (std::int64_t b = 0; b < blocks; ++b)
            {
                const std::int64_t count =
                    std::min(kBlockSize, samples - b * kBlockSize);
                run_block(cost, n, seed, b, count, partials[static_cast<std::size_t>(b)]);
            }
        }
        else
        {
            std::atomic<std::int64_t> next{0};
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(workers));
            for (std::int64_t w = 0; w < workers; ++w)
            {
                pool.emplace_back([&] {
                    for (;;)
                    {
                        const std::int64_t b = next.fetch_add(1);
                        if (b >= blocks)
                            return;
                        const std::int64_t count =
                            std::min(kBlockSize, samples - b * kBlockSize);
                        run_block(cost, n, seed, b, count,
                                  partials[static_cast<std::size_t>(b)]);
                    }
                });
            }
            for (auto &t : pool)
                t.join();
        }

        // Merge in block order so the result is independent of scheduling.
        std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
        std::vector<double> sum_sq(static_cast<std::size_t>(n), 0.0);
        for (const auto &partial : partials)
            for (int k = 0; k < n; ++k)
            {
                sum[static_cast<std::size_t>(k)] += partial.sum[static_cast<std::size_t>(k)];
                sum_sq[static_cast<std::size_t>(k)] += partial.sum_sq[static_cast<std::size_t>(k)];
            }

        AllocationEstimate out;
        out.samples = samples;
        out.values.resize(static_cast<std::size_t>(n));
        out.stderrs.resize(static_cast<std::size_t>(n));
        const double T = static_cast<double>(samples);
        for (int k = 0; k < n; ++k)
        {
            const double mean = sum[static_cast<std::size_t>(k)] / T;
            out.values[static_cast<std::size_t>(k)] = mean;
            if (samples > 1)
            {
                double var = (sum_sq[static_cast<std::size_t>(k)] - T * mean * mean) / (T - 1.0);
                out.stderrs[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, var) / T);
            }
            else
            {
                out.stderrs[static_cast<std::size_t>(k)] = 0.0;
            }
        }
        return out;
    }

} // namespace capalloc
