#include "capalloc/rng.hpp"

#include <cmath>
#include <numbers>

namespace capalloc
{

    namespace
    {
        std::uint64_t splitmix64(std::uint64_t &state)
        {
            std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }
    } // namespace

    SubstreamRng::SubstreamRng(std::uint64_t seed, std::uint64_t stream)
    {
        std::uint64_t state = seed;
        std::uint64_t a = splitmix64(state);
        state ^= 0x6a09e667f3bcc909ULL + stream;
        std::uint64_t b = splitmix64(state);
        engine_.seed(a ^ (b + 0x9e3779b97f4a7c15ULL + (stream << 1)));
    }

    std::uint64_t SubstreamRng::next_u64()
    {
        return engine_();
    }

    double SubstreamRng::next_double()
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    std::uint64_t SubstreamRng::next_below(std::uint64_t bound)
    {
        // Rejection sampling on the top bits; bias-free for any bound.
        std::uint64_t mask = bound - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;)
        {
            std::uint64_t draw = next_u64() & mask;
            if (draw < bound)
                return draw;
        }
    }

    double SubstreamRng::next_normal()
    {
        if (has_cached_normal_)
        {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = next_double();
        while (u1 <= 0.0)
            u1 = next_double();
        double u2 = next_double();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        cached_normal_ = radius * std::sin(angle);
        has_cached_normal_ = true;
        return radius * std::cos(angle);
    }

    void SubstreamRng::shuffle(std::span<int> values)
    {
        for (std::size_t i = values.size(); i > 1; --i)
        {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    std::vector<int> SubstreamRng::permutation(int n)
    {
        std::vector<int> perm(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            perm[static_cast<std::size_t>(i)] = i;
        shuffle(perm);
        return perm;
    }

} // namespace capalloc
