#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "sketchreg/design.hpp"

namespace sketchreg {

/// Per-direction bias multipliers of the projected-least-squares MSE bound,
///   w_i = ((1+1/d) a^2 + (1+2/d) a + 1/d) / ((d+2+1/d) a^2 + 2(1+1/d) a + 1/d)
/// with a = lambda_i / trace. Always in (0, 1], non-increasing in lambda_i
/// (shrinkage is stronger in high-variance directions) and O(1/d) as d grows.
struct ShrinkageFactors {
    Eigen::VectorXd w;
    int d = 0;
};

/// Monte Carlo estimates of the implicit diagonal terms eta_i, where
/// E[phi (phi' Sigma phi)^{-1} phi'] = diag(1/eta_1, ..., 1/eta_p) for
/// gaussian phi. ratio[i] = lambda_i / eta_i; the ratios sum to d exactly for
/// every draw, so trace_identity deviates from d only by round-off.
struct EtaEstimates {
    Eigen::VectorXd eta;
    Eigen::VectorXd stderr_eta;
    Eigen::VectorXd ratio;         // lambda_i / eta_i, in (0, 1]
    Eigen::VectorXd stderr_ratio;
    int d = 0;
    int num_samples = 0;
    double trace_identity = 0.0;   // sum of ratios; equals d up to round-off
    int resample_count = 0;        // singular draws that were redrawn
    bool resample_warning = false; // resample rate exceeded 1%

    Eigen::Index size() const { return eta.size(); }
};

/// tau = sum (lambda_i/eta_i)^2, inside [d^2/p, d] by construction.
struct TauEstimate {
    double tau = 0.0;
    double stderr_tau = 0.0;
    int d = 0;
    Eigen::Index p = 0;

    double lower_bound() const { return static_cast<double>(d) * d / static_cast<double>(p); }
    double upper_bound() const { return d; }
};

enum class MseKind { thm1_bound, thm2_bound, exact_thm3, ridge_exact, orthonormal_exact, thm4_bound };

std::string mse_kind_name(MseKind kind);

/// total = variance_term + sum(bias_per_direction); total_stderr > 0 only for
/// kinds that plug in Monte Carlo estimates.
struct MseReport {
    double variance_term = 0.0;
    Eigen::VectorXd bias_per_direction;
    double total = 0.0;
    double total_stderr = 0.0;
    MseKind kind = MseKind::thm1_bound;
};

/// One row per direction (i, lambda_i, beta_i, bias_i) plus a totals row.
void save_mse_report(const std::filesystem::path& path, const MseReport& report,
                     const Spectrum& spectrum, const Eigen::VectorXd& beta);

/// sigma^2 d + ||X beta||^2 / d + trace(X'X) ||beta||^2 / d, in diagonal form.
MseReport theorem1_bound(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                         const NoiseModel& noise, int d);

/// Evaluates both algebraic forms (lambda and alpha) and cross-checks them to
/// 1e-12; d may exceed p (the factors just keep shrinking).
ShrinkageFactors shrinkage_factors(const Spectrum& spectrum, int d);

/// The two forms individually, exposed for cross-checking.
Eigen::VectorXd shrinkage_factors_lambda_form(const Spectrum& spectrum, int d);
Eigen::VectorXd shrinkage_factors_alpha_form(const Spectrum& spectrum, int d);

/// sigma^2 d + sum beta_i^2 lambda_i w_i.
MseReport theorem2_bound(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                         const NoiseModel& noise, int d);

/// Exact ridge MSE:
/// sigma^2 sum (lambda_i/(lambda_i+l))^2 + sum beta_i^2 lambda_i (l/(l+lambda_i))^2.
MseReport ridge_mse(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                    const NoiseModel& noise, double lambda);

/// sigma^2 d + sum beta_i^2 lambda_i (1 - lambda_i/eta_i), with the eta
/// standard errors propagated into total_stderr (independence approximation).
MseReport exact_mse_from_eta(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                             const NoiseModel& noise, const EtaEstimates& eta);

/// Closed form for Sigma = C I: sigma^2 d + C sum beta_i^2 (1 - d/p).
MseReport orthonormal_mse(double c, const Eigen::VectorXd& beta, const NoiseModel& noise,
                          int d, Eigen::Index p);

/// Averaged-estimator bound: sigma^2 tau + sum beta_i^2 lambda_i w_i^2.
MseReport theorem4_bound(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                         const NoiseModel& noise, int d, const TauEstimate& tau);

/// Minimiser of E || X beta - X phi phi' v ||^2 over dense v:
/// v_i = beta_i lambda_i / ((1+1/d) lambda_i + trace/d).
Eigen::VectorXd optimal_dense_vector(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                                     double d);

/// Ridge penalty whose effective degrees of freedom sum(lambda_i/(lambda_i+l))
/// equal d; the natural penalty to compare against a d-dimensional projection.
/// d >= rank maps to l = 0. Bisection, 1e-12 relative.
double matched_ridge_lambda(const Spectrum& spectrum, int d);

}  // namespace sketchreg
