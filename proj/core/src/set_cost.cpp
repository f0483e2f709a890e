#include "capalloc/set_cost.hpp"

#include "capalloc/errors.hpp"

namespace capalloc
{

    double SetCost::evaluate(std::span<const int> members) const
    {
        auto acc = make_accumulator();
        for (int unit : members)
            acc->add(unit);
        return acc->cost();
    }

    double SetCost::total() const
    {
        auto acc = make_accumulator();
        for (int unit = 0; unit < size(); ++unit)
            acc->add(unit);
        return acc->cost();
    }

    std::vector<double> enumerate_subset_costs(const SetCost &cost)
    {
        const int n = cost.size();
        if (n > 25)
            throw validation_error("subset enumeration limited to n <= 25");
        const std::size_t count = std::size_t{1} << n;
        std::vector<double> table(count, 0.0);
        auto acc = cost.make_accumulator();
        for (std::size_t mask = 1; mask < count; ++mask)
        {
            acc->reset();
            for (int i = 0; i < n; ++i)
                if (mask >> i & 1u)
                    acc->add(i);
            table[mask] = acc->cost();
        }
        return table;
    }

    namespace
    {
        class MaxOfTwoAccumulator final : public CostAccumulator
        {
        public:
            MaxOfTwoAccumulator(std::unique_ptr<CostAccumulator> f,
                                std::unique_ptr<CostAccumulator> g)
                : f_(std::move(f)), g_(std::move(g)) {}

            void add(int unit) override
            {
                f_->add(unit);
                g_->add(unit);
            }
            double cost() const override
            {
                double cf = f_->cost();
                double cg = g_->cost();
                return cf > cg ? cf : cg;
            }
            void reset() override
            {
                f_->reset();
                g_->reset();
            }

        private:
            std::unique_ptr<CostAccumulator> f_;
            std::unique_ptr<CostAccumulator> g_;
        };

        class MaxOfTwoCost final : public SetCost
        {
        public:
            MaxOfTwoCost(std::shared_ptr<const SetCost> f, std::shared_ptr<const SetCost> g)
                : f_(std::move(f)), g_(std::move(g))
            {
                if (f_->size() != g_->size())
                    throw validation_error("max_cost: operand unit counts differ");
            }

            int size() const override { return f_->size(); }
            std::unique_ptr<CostAccumulator> make_accumulator() const override
            {
                return std::make_unique<MaxOfTwoAccumulator>(f_->make_accumulator(),
                                                             g_->make_accumulator());
            }

        private:
            std::shared_ptr<const SetCost> f_;
            std::shared_ptr<const SetCost> g_;
        };
    } // namespace

    std::unique_ptr<SetCost> max_cost(std::shared_ptr<const SetCost> f,
                                      std::shared_ptr<const SetCost> g)
    {
        return std::make_unique<MaxOfTwoCost>(std::move(f), std::move(g));
    }

} // namespace capalloc
