#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sketchreg/csv.hpp"
#include "sketchreg/design.hpp"
#include "sketchreg/projections.hpp"

namespace sketchreg {

struct FitResult {
    Eigen::VectorXd beta_original;                  // coefficients in the data's basis
    std::optional<Eigen::VectorXd> gamma_projected; // projected-space coefficients (CLSE)
    std::string method;
    int d = 0;                // projection dimension, 0 when no projection
    int num_projections = 1;  // K; 1 for a single projection
    std::vector<std::uint64_t> seeds;
    double training_mse = 0.0;
};

/// Writes one coefficient per row plus a key=value provenance sidecar at
/// <path>.meta; `extra` pairs are appended to the sidecar.
void save_fit(const std::filesystem::path& path, const FitResult& fit,
              const KvPairs& extra = {});

/// Ordinary least squares via the Gram eigendecomposition. Throws
/// SingularError on a rank-deficient Gram unless allow_pseudo_inverse, in
/// which case the minimum-norm solution is returned.
FitResult ols_fit(const DesignMatrix& x, const ResponseVector& y,
                  bool allow_pseudo_inverse = false);

/// beta = (X'X + lambda I)^{-1} X'Y.
FitResult ridge_fit(const DesignMatrix& x, const ResponseVector& y, double lambda);

/// Compressed least squares: gamma = argmin ||Y - X phi gamma||^2 in d
/// dimensions, mapped back as beta = phi gamma. Requires Rank(X) >= d. A
/// singular projected Gram falls back to the minimum-norm solution
/// (eigenvalues below 1e-10 of the largest are dropped). gamma_penalty > 0
/// adds an experimental ridge term on gamma; it has no bound support.
FitResult clse_fit(const DesignMatrix& x, const ResponseVector& y,
                   const ProjectionOperator& op, double gamma_penalty = 0.0);
FitResult clse_fit(const DesignMatrix& x, const ResponseVector& y, const ProjectionSpec& spec,
                   double gamma_penalty = 0.0);

/// Averaged compressed least squares: arithmetic mean of K independent CLSE
/// coefficient vectors. Sub-fit k uses substream_seed(spec.seed, k); the sum
/// runs in ascending k, so the result is bit-identical for any thread count.
FitResult aclse_fit(const DesignMatrix& x, const ResponseVector& y, const ProjectionSpec& spec,
                    int num_projections);

/// OLS on (psi X, psi Y); psi maps n rows to m. Needs m >= p unless
/// allow_pseudo_inverse.
FitResult row_compressed_ols(const DesignMatrix& x, const ResponseVector& y,
                             const ProjectionOperator& op, bool allow_pseudo_inverse = false);
FitResult row_compressed_ols(const DesignMatrix& x, const ResponseVector& y,
                             const ProjectionSpec& spec, bool allow_pseudo_inverse = false);

struct CvReport {
    std::vector<int> grid;
    Eigen::MatrixXd fold_errors;  // candidate x fold, mean squared held-out error
    int chosen_d = 0;             // minimiser of the mean fold error, ties to smaller d
    int one_se_d = 0;             // smallest d within one standard error of the winner
};

/// K-fold selection of the projection dimension. Folds are contiguous blocks
/// of a seeded shuffle; cell (fold f, candidate j) draws its projection from
/// substream_seed(spec.seed, 1 + f*|grid| + j), stream 0 shuffles.
CvReport select_dim_cv(const DesignMatrix& x, const ResponseVector& y,
                       const ProjectionSpec& spec_template, const std::vector<int>& grid,
                       int folds);

}  // namespace sketchreg
