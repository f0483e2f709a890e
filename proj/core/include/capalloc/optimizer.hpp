#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "capalloc/portfolio.hpp"

namespace capalloc
{

    /// Covariance of daily changes of the allocated-capital component
    /// vector h, kept symmetric positive-definite.
    struct CovarianceModel
    {
        Eigen::MatrixXd matrix;
        std::string provenance; // "historical" or "synthetic"
    };

    /// Sample covariance of first differences of a time series (rows =
    /// days, columns = components), shrunk toward its own diagonal by s in
    /// [0,1] and ridge-regularized when not positive-definite.
    CovarianceModel estimate_covariance(const Eigen::MatrixXd &series, double shrinkage = 0.0);

    /// Block-diagonal synthetic model: one 2x2 block per unit with variance
    /// `scale` and off-diagonal rho*scale (RWA/LBS of the same unit).
    CovarianceModel synthetic_covariance(int n_units, double rho, double scale = 1.0);

    Eigen::MatrixXd load_series_csv(const std::filesystem::path &path);

    /// Component layout of the single-legal-entity capital problem:
    /// h = [rwa_1, lbs_1, rwa_2, lbs_2, ...] of length 2n.
    Eigen::VectorXd interleave_components(std::span<const double> rwa,
                                          std::span<const double> lbs);

    /// Exchange-rate map w(h) for the single-entity linear model: every RWA
    /// slot carries beta*(1-p), every LBS slot beta*p.
    Eigen::VectorXd exchange_rates_single_entity(const Eigen::VectorXd &h);

    enum class RateModel
    {
        single_entity,
    };

    /// Central finite-difference Jacobian J = dw/dh with
    /// step_i = max(1e-6 |h_i|, 1e-8).
    Eigen::MatrixXd exchange_rate_jacobian(const Eigen::VectorXd &h, RateModel model);
    Eigen::MatrixXd exchange_rate_jacobian(
        const Eigen::VectorXd &h,
        const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &rate_map);

    /// Closed-form Jacobian of the single-entity model (chain rule through
    /// mu_s, sigma_s, Phi and beta); must agree with finite differences.
    Eigen::MatrixXd exchange_rate_jacobian_analytic(const Eigen::VectorXd &h);

    struct OptimizationProblem
    {
        Eigen::VectorXd h; // current allocated components
        Eigen::VectorXd r; // RoC per component
        Eigen::VectorXd w; // exchange rates at h
        Eigen::MatrixXd jacobian; // J = dw/dh (zero for the crude solver)
        CovarianceModel covariance;
        double epsilon = 0.1;
        double revenue_target = 0.0; // z
        std::vector<int> zero_capital_units; // units whose RoC was zeroed
    };

    struct OptimizationSolution
    {
        Eigen::VectorXd delta;
        double lambda = 0.0;
        double kkt_stationarity = 0.0;
        double constraint_residual = 0.0;
        double capital_change = 0.0; // w . delta
        double mahalanobis = 0.0;    // sqrt(delta' V^-1 delta)
        std::string solver;
    };

    /// Analytic Lagrange solution
    ///   delta* = (J + eps V^-1)^-1 (lambda r - w - J h)
    /// with lambda fixed by r . delta = z.
    OptimizationSolution solve_local_optimum(const OptimizationProblem &problem);

    /// J = 0 limit: delta* = (1/eps) V (lambda r - w),
    /// lambda = (eps z + r'Vw) / (r'Vr).
    OptimizationSolution solve_crude(const Eigen::VectorXd &h, const Eigen::VectorXd &r,
                                     const CovarianceModel &covariance,
                                     const Eigen::VectorXd &w, double z, double epsilon);

    /// (stationarity norm, constraint residual) of a candidate solution:
    /// ||w + J(h+delta) + eps V^-1 delta - lambda r||_2 and |r.delta - z|.
    std::pair<double, double> kkt_residual(const OptimizationProblem &problem,
                                           const OptimizationSolution &solution);

    /// Assembles the single-entity capital problem from a portfolio: the
    /// RoC of both components of unit i is revenue_i / (rwa_i + lbs_i)
    /// (zeroed and flagged when the unit has no capital).
    OptimizationProblem make_capital_problem(const Portfolio &portfolio,
                                             CovarianceModel covariance, double epsilon,
                                             double z, bool with_jacobian);

    /// Per-unit change in total allocated capital when moving from h to
    /// h + delta, with exchange rates recomputed at the new position.
    std::vector<double> total_allocation_change(const Eigen::VectorXd &h,
                                                const Eigen::VectorXd &delta);

    void write_optimization_report(std::ostream &out, const Portfolio &portfolio,
                                   const OptimizationProblem &problem,
                                   const OptimizationSolution &solution);

} // namespace capalloc
