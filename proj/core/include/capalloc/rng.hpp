#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace capalloc
{

    /// Deterministic, splittable random source.
    ///
    /// A substream is identified by (seed, stream). Each substream seeds an
    /// independent mt19937_64 through a splitmix64 mix of the pair, so
    /// parallel workers can be assigned substreams by index and the merged
    /// result does not depend on the number of workers. All derived draws
    /// (bounded integers, doubles, normals, shuffles) are implemented here
    /// rather than with std distributions so the stream is identical across
    /// standard libraries.
    class SubstreamRng
    {
    public:
        explicit SubstreamRng(std::uint64_t seed, std::uint64_t stream = 0);

        std::uint64_t next_u64();

        /// Uniform double in [0, 1) with 53 random bits.
        double next_double();

        /// Uniform integer in [0, bound), bound >= 1; unbiased via rejection.
        std::uint64_t next_below(std::uint64_t bound);

        /// Standard normal deviate (Box-Muller, pairs cached).
        double next_normal();

        /// Fisher-Yates shuffle.
        void shuffle(std::span<int> values);

        /// The identity permutation of size n, shuffled.
        std::vector<int> permutation(int n);

    private:
        std::mt19937_64 engine_;
        double cached_normal_ = 0.0;
        bool has_cached_normal_ = false;
    };

} // namespace capalloc
