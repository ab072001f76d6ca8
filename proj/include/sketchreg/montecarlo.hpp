#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sketchreg/csv.hpp"
#include "sketchreg/design.hpp"
#include "sketchreg/projections.hpp"
#include "sketchreg/theory.hpp"

namespace sketchreg {

/// Knobs for the Monte Carlo harness. Replicates are seeded from
/// non-overlapping substreams of base_seed and reduced in fixed index order,
/// so results are bit-identical for any thread count.
struct McConfig {
    int num_projection_samples = 500;  // M: projection draws / averaged-estimator replicates
    int num_noise_reps = 500;          // R: shared noise draws
    std::uint64_t base_seed = 1;
    std::vector<int> d_grid;
    std::vector<int> k_grid;     // ACLSE K sweep; method's K when empty
    int num_eta_samples = 20000; // projection draws for eta estimation
};

struct MethodSpec {
    enum class Kind { ols, ridge, clse, aclse, rowols };
    Kind kind = Kind::clse;
    Family family = Family::gaussian;
    double density = 1.0 / 3.0;
    int num_projections = 1;  // K (aclse)
    double lambda = 0.0;      // ridge penalty
};

std::string method_name(MethodSpec::Kind kind);
MethodSpec::Kind method_from_name(const std::string& name);

/// A small result table: one row per grid point, named columns, provenance
/// pairs for the sidecar.
struct ExperimentResult {
    std::string figure_tag = "custom";
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    KvPairs provenance;

    /// CSV at `path`, key=value sidecar at `path`.meta (timestamps live only
    /// in the sidecar).
    void write(const std::filesystem::path& path) const;
};

/// Estimates eta_i from M gaussian projection draws: averages the diagonal of
/// phi (phi' Sigma phi)^{-1} phi' and inverts the average. Singular draws are
/// redrawn from the same substream (counted; > 1% flips resample_warning).
/// Requires d <= rank(Sigma).
EtaEstimates estimate_eta(const Spectrum& spectrum, int d, int num_samples, std::uint64_t seed);

TauEstimate estimate_tau(const EtaEstimates& eta);

/// Empirical MSE E ||X beta - X beta_hat||^2 over M projection draws crossed
/// with R shared noise draws. The design must already be in the diagonal-Gram
/// basis with non-increasing column variances. Per-d rows carry the matching
/// closed-form values: clse gets thm1/thm2/thm4 bounds and the eta plug-in
/// value, aclse gets thm2/thm4, ols/ridge get their exact risks.
ExperimentResult empirical_mse(const DesignMatrix& x, const Eigen::VectorXd& beta,
                               const NoiseModel& noise, const MethodSpec& method,
                               const McConfig& config);

/// Desk-scale reproductions:
///   fig1: exact bias factor 1 - lambda_i/eta_i vs. the bound w_i for the
///         first and last direction, Sigma = diag(1/i), p = 20.
///   fig2: single vs. K=100-averaged compressed least squares MSE with
///         Sigma = diag(1/i), beta = 1, noise sigma^2 in {0, 1/40, 1/20};
///         both series share projection and noise draws.
///   fig3: variance factor tau against its bounds [d^2/p, d] for identity,
///         diag(1/i) and spiked covariances.
ExperimentResult reproduce_figure(const std::string& tag, const McConfig& config);

}  // namespace sketchreg
