#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>

namespace sketchreg {

using ResponseVector = Eigen::VectorXd;

/// n x p predictor matrix with centering metadata and, after pc_rotate, the
/// orthogonal change of basis that diagonalised the Gram matrix.
struct DesignMatrix {
    Eigen::MatrixXd values;
    Eigen::VectorXd column_means;  // means subtracted so far; zero if not centered
    std::optional<Eigen::MatrixXd> rotation;

    DesignMatrix() = default;
    explicit DesignMatrix(Eigen::MatrixXd m)
        : values(std::move(m)), column_means(Eigen::VectorXd::Zero(values.cols())) {}

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }
};

/// Eigenvalues of the Gram matrix X'X, non-increasing. Entries below
/// 1e-12 * lambda_1 are reported as exact zeros; rank() counts the rest.
struct Spectrum {
    Eigen::VectorXd eigenvalues;
    double trace_sigma = 0.0;
    Eigen::VectorXd alphas;  // per-direction proportion of total variance

    Eigen::Index size() const { return eigenvalues.size(); }
    Eigen::Index rank() const {
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
            if (eigenvalues[i] > 0.0) ++r;
        return r;
    }
};

struct NoiseModel {
    double sigma2 = 0.0;
};

/// Relative threshold below which Gram eigenvalues count as zero.
constexpr double kRankEpsilon = 1e-12;

/// Sorts descending, clamps sub-threshold values to zero, fills trace and
/// variance proportions. Throws InvalidParameter on an all-zero spectrum.
Spectrum make_spectrum(Eigen::VectorXd eigenvalues);

Eigen::Index rank_of(const DesignMatrix& x);

/// Reads a numeric CSV whose last column is the response.
std::pair<DesignMatrix, ResponseVector> load_csv(const std::filesystem::path& path,
                                                 bool has_header);

/// Mirrors load_csv's format with 17-significant-digit floats.
void save_csv(const std::filesystem::path& path, const DesignMatrix& x,
              const ResponseVector& y);

/// Subtracts column means, recording them in column_means.
DesignMatrix center(const DesignMatrix& x);

/// Rotates X to the basis in which X'X is diagonal (principal components),
/// eigenvalues non-increasing. Eigenvector signs are fixed so the
/// largest-magnitude entry of each is positive. Does not center; apply
/// center() first when the data calls for it.
std::pair<DesignMatrix, Spectrum> pc_rotate(const DesignMatrix& x);

struct SyntheticSpec {
    enum class Kind { identity, inverse_index, spiked };
    Kind kind = Kind::identity;
    int spike_dim = 0;        // spiked: number of unit-variance leading directions
    double spike_eps = 1e-6;  // spiked: variance of the remaining directions

    static SyntheticSpec identity() { return {Kind::identity, 0, 0.0}; }
    static SyntheticSpec inverse_index() { return {Kind::inverse_index, 0, 0.0}; }
    static SyntheticSpec spiked(int d, double eps) { return {Kind::spiked, d, eps}; }
};

/// Builds X = sqrt(Sigma) padded with zero rows (n >= p), so X'X equals the
/// requested diagonal exactly. `seed` is accepted for interface stability; the
/// construction is deterministic and does not consume it.
std::pair<DesignMatrix, Spectrum> synthetic_design(const SyntheticSpec& spec, Eigen::Index n,
                                                   Eigen::Index p, std::uint64_t seed = 0);

}  // namespace sketchreg
