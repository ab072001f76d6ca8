#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sketchreg/design.hpp"

namespace sketchreg {

enum class Family { gaussian, sign, sparse, srht };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

/// Everything needed to reproduce one projection operator. The operator maps
/// input_dim-vectors to output_dim-vectors; used as phi (p -> d, applied to
/// columns) or psi (n -> m, applied to rows). Normalisation is chosen so that
/// E ||op(x)||^2 = ||x||^2 for every family:
///   gaussian: i.i.d. N(0, 1/d) entries
///   sign:     +-1/sqrt(d) equiprobable
///   sparse:   nonzero with probability q, value +-1/sqrt(d*q)
///   srht:     (1/sqrt(d)) * S * H * D on the next power-of-two padding
struct ProjectionSpec {
    Family family = Family::gaussian;
    Eigen::Index input_dim = 0;
    Eigen::Index output_dim = 0;
    std::uint64_t seed = 0;
    double density = 1.0 / 3.0;  // sparse family only

    double scale() const;
    ProjectionSpec with_seed(std::uint64_t s) const {
        ProjectionSpec out = *this;
        out.seed = s;
        return out;
    }
};

/// key=value serialisation for provenance sidecars.
std::string to_kv_text(const ProjectionSpec& spec);
ProjectionSpec projection_spec_from_kv_text(const std::string& text);

struct ProjectionOperator {
    ProjectionSpec spec;

    // gaussian / sign / sparse: the explicit input_dim x output_dim matrix.
    std::optional<Eigen::MatrixXd> matrix;

    // srht: sign diagonal, selected rows of the padded Hadamard, padded size.
    std::vector<double> srht_signs;
    std::vector<Eigen::Index> srht_rows;
    Eigen::Index padded_dim = 0;

    Eigen::Index input_dim() const { return spec.input_dim; }
    Eigen::Index output_dim() const { return spec.output_dim; }

    /// v in R^input -> R^output (phi' v).
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    /// g in R^output -> R^input (phi g); maps projected coefficients back.
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& g) const;
    /// The explicit input_dim x output_dim matrix (reconstructed column by
    /// column for srht).
    Eigen::MatrixXd as_matrix() const;
};

/// Deterministic in spec (seed included). Throws InvalidParameter on bad dims
/// or density.
ProjectionOperator sample_projection(const ProjectionSpec& spec);

/// X (n x p) -> X phi (n x d). SRHT costs O(p log p) per row.
DesignMatrix apply_columns(const ProjectionOperator& op, const DesignMatrix& x);

/// (X, Y) -> (psi X, psi Y) with m rows.
std::pair<DesignMatrix, ResponseVector> apply_rows(const ProjectionOperator& op,
                                                   const DesignMatrix& x,
                                                   const ResponseVector& y);

/// Embeds an explicit matrix as an operator (tests, identity embeddings).
ProjectionOperator operator_from_matrix(Eigen::MatrixXd phi);
ProjectionOperator identity_operator(Eigen::Index dim);

/// In-place unnormalised Walsh-Hadamard butterfly; n a power of two. Applying
/// it twice multiplies by n.
void fwht_inplace(double* data, Eigen::Index n);

Eigen::Index next_pow2(Eigen::Index n);

}  // namespace sketchreg
