#pragma once

#include <memory>
#include <span>
#include <vector>

namespace capalloc
{

    /// Incremental evaluator positioned at a subset of units. Starts at the
    /// empty set (cost 0); add() grows the subset one unit at a time. This
    /// is the workhorse for permutation walks, where the chain
    /// empty -> {u1} -> {u1,u2} -> ... needs one cost per step.
    class CostAccumulator
    {
    public:
        virtual ~CostAccumulator() = default;
        virtual void add(int unit) = 0;
        virtual double cost() const = 0;
        virtual void reset() = 0;
    };

    /// A deterministic cost over subsets of {0..n-1} with c(empty) = 0.
    /// Implementations must be reentrant: accumulators obtained from the
    /// same SetCost may be used concurrently.
    class SetCost
    {
    public:
        virtual ~SetCost() = default;
        virtual int size() const = 0;
        virtual std::unique_ptr<CostAccumulator> make_accumulator() const = 0;

        /// c(S) for an explicit member list (indices need not be sorted).
        double evaluate(std::span<const int> members) const;

        /// c(Omega).
        double total() const;
    };

    /// All 2^n subset costs, indexed by bitmask. Requires n <= 25.
    std::vector<double> enumerate_subset_costs(const SetCost &cost);

    /// max(f(S), g(S)) of two costs over the same unit universe.
    std::unique_ptr<SetCost> max_cost(std::shared_ptr<const SetCost> f,
                                      std::shared_ptr<const SetCost> g);

} // namespace capalloc
