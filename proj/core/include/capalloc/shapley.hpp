#pragma once

#include <cstdint>
#include <vector>

#include "capalloc/set_cost.hpp"

namespace capalloc
{

    /// Per-unit allocation with sampling metadata. For exact enumeration
    /// stderr is identically zero and samples is the permutation count the
    /// enumeration represents.
    struct AllocationEstimate
    {
        std::vector<double> values;
        std::vector<double> stderrs;
        std::int64_t samples = 0;

        double sum() const;
        double aggregate_stderr() const;
    };

    /// Closed-form moments of the ahead-of-k indicators under a uniform
    /// permutation with a uniform cut in {0..n}: E[1_i], E[1_i 1_j],
    /// cov(1_i,1_j), corr(1_i,1_j). Independent of n; n < 2 is rejected
    /// because the pair moments need two distinct units.
    struct IndicatorMoments
    {
        double mean;
        double pair_second_moment;
        double pair_covariance;
        double pair_correlation;
    };
    IndicatorMoments indicator_moments(int n);

    /// Sampled counterpart: draws (permutation, uniform cut) pairs and
    /// returns the empirical moments of the first two units' indicators
    /// together with delta-method standard errors.
    struct IndicatorMomentsEstimate
    {
        IndicatorMoments value;
        IndicatorMoments stderr;
        std::int64_t samples = 0;
    };
    IndicatorMomentsEstimate indicator_moments_mc(int n, std::int64_t samples,
                                                  std::uint64_t seed);

    /// Default cap for full enumeration; 10! permutations collapse to
    /// 2^10 cached subset costs, comfortably sub-second.
    inline constexpr int kExactShapleyCap = 10;

    /// Exact Shapley allocation by subset enumeration with factorial
    /// weights. Throws validation_error above the cap, pointing the caller
    /// at mc_shapley.
    AllocationEstimate exact_shapley(const SetCost &cost, int cap = kExactShapleyCap);

    /// Monte Carlo Shapley: each draw is one full permutation contributing
    /// all n incremental costs. Deterministic for a fixed seed regardless of
    /// worker count: samples are partitioned into fixed-size blocks, block b
    /// uses substream (seed, b), and block partials merge in block order.
    AllocationEstimate mc_shapley(const SetCost &cost, std::int64_t samples,
                                  std::uint64_t seed);

} // namespace capalloc
