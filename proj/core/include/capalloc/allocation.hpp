#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "capalloc/cost_functions.hpp"
#include "capalloc/portfolio.hpp"
#include "capalloc/shapley.hpp"

namespace capalloc
{

    /// Moment-matched statistics of the signed running-sum difference
    /// s = sum_i 1_i (a_i - b_i) over a random permutation prefix:
    ///   mu_s    = (1/2) sum(a_i - b_i)
    ///   sigma_s^2 = (1/6) sum(a_i-b_i)^2 + (1/12) (sum(a_i-b_i))^2
    ///   p       = Phi(-mu_s / sigma_s)   (dominance probability p(a<b))
    /// When sigma_s = 0, p falls to the step limit {0, 1/2, 1} by sign(mu_s).
    struct DominanceStats
    {
        double mu_s = 0.0;
        double sigma_s = 0.0;
        double p = 0.5;
    };
    DominanceStats dominance_probability(std::span<const double> a,
                                         std::span<const double> b);

    /// Additivity-corrected linear weights. For the single max the labeled
    /// weights are (beta*(1-p), beta*p); for hierarchies one weight per
    /// joint probability of Eq-style regime/dominance events.
    struct ExchangeRates
    {
        double beta = 1.0;
        std::vector<double> weights;
        std::vector<std::string> labels;
    };

    enum class AllocationMethod
    {
        standalone,
        euler,
        shapley_exact,
        shapley_mc,
        linear,
        hierarchy_linear,
    };
    std::string method_name(AllocationMethod method);

    struct ComponentAllocation
    {
        std::vector<double> values;
        std::vector<double> stderrs; // zero except for MC-backed methods
        AllocationMethod method = AllocationMethod::linear;
        std::int64_t samples = 0;

        double sum() const;
    };

    /// alpha_k = max(a_k, b_k) scaled so the total matches c(Omega).
    ComponentAllocation standalone_allocation(const Portfolio &portfolio);

    /// The binding side's components; the midpoint at an exact tie.
    ComponentAllocation euler_allocation(const Portfolio &portfolio);

    struct LinearAllocationResult
    {
        ComponentAllocation allocation;
        ExchangeRates rates;
        DominanceStats stats;
    };

    /// Linear approximation to the Shapley allocation of
    /// max(sum a, sum b): alpha_k = beta ((1-p) a_k + p b_k) with
    /// beta = max(sum a, sum b) / (sum a - 2 p mu_s). Component order is
    /// (a, b) = (RWA, LBS) to match the portfolio overload.
    LinearAllocationResult linear_max_allocation(std::span<const double> a,
                                                 std::span<const double> b);
    LinearAllocationResult linear_max_allocation(const Portfolio &portfolio);

    /// Two-function form: the linear approximation applied to a pair of
    /// efficient allocations (alpha_f, alpha_g) of arbitrary costs f and g.
    LinearAllocationResult two_function_allocation(std::span<const double> alpha_f,
                                                   std::span<const double> alpha_g);

    /// Joint regime/dominance probabilities of the nested two-subsidiary
    /// cost, estimated over (permutation, uniform cut) prefixes:
    ///   [0] p(theta > x+y, f_theta > g_theta)
    ///   [1] p(theta > x+y, f_theta < g_theta)
    ///   [2] p(theta < x+y, f_x > g_x)
    ///   [3] p(theta < x+y, f_x < g_x)
    ///   [4] p(theta < x+y, f_y > g_y)
    ///   [5] p(theta < x+y, f_y < g_y)
    /// Within-regime ties split 1/2 each; the consolidated side wins regime
    /// ties so a degenerate hierarchy (all subsidiary components zero)
    /// yields p(theta regime) = 1 exactly. For degenerate input the
    /// analytic dominance probability is returned directly, making the
    /// reduction to the single-max form exact.
    std::array<double, 6> hierarchy_joint_probabilities(
        const HierarchyComponents &components, std::int64_t samples, std::uint64_t seed);

    struct HierarchyAllocationResult
    {
        ComponentAllocation allocation;
        ExchangeRates rates;
        std::array<double, 6> probabilities{};
    };

    /// Eq-9-style hierarchy allocation: unscaled alpha_k is the joint
    /// probabilities applied to unit k's six components; beta rescales so
    /// the total equals the nested cost of Omega.
    HierarchyAllocationResult hierarchy_allocation(const HierarchyComponents &components,
                                                   std::int64_t samples, std::uint64_t seed);

    /// Allocation report: unit id, method, component inputs, allocation,
    /// stderr, beta and one column per exchange-rate label.
    void write_allocation_report(std::ostream &out, const Portfolio &portfolio,
                                 const ComponentAllocation &allocation,
                                 const ExchangeRates *rates);

} // namespace capalloc
