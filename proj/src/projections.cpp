#include "sketchreg/projections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sketchreg/csv.hpp"
#include "sketchreg/errors.hpp"
#include "sketchreg/rng.hpp"

namespace sketchreg {

std::string family_name(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::sign: return "sign";
        case Family::sparse: return "sparse";
        case Family::srht: return "srht";
    }
    return "unknown";
}

Family family_from_name(const std::string& name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "sign") return Family::sign;
    if (name == "sparse") return Family::sparse;
    if (name == "srht") return Family::srht;
    throw InvalidParameter("unknown projection family: " + name);
}

double ProjectionSpec::scale() const {
    const double d = static_cast<double>(output_dim);
    if (family == Family::sparse) return 1.0 / std::sqrt(d * density);
    return 1.0 / std::sqrt(d);
}

std::string to_kv_text(const ProjectionSpec& spec) {
    KvPairs kv{{"family", family_name(spec.family)},
               {"input_dim", std::to_string(spec.input_dim)},
               {"output_dim", std::to_string(spec.output_dim)},
               {"seed", std::to_string(spec.seed)}};
    if (spec.family == Family::sparse) kv.emplace_back("density", format_double(spec.density));
    return to_kv_text(kv);
}

ProjectionSpec projection_spec_from_kv_text(const std::string& text) {
    ProjectionSpec spec;
    for (const auto& [k, v] : parse_kv_text(text)) {
        if (k == "family") spec.family = family_from_name(v);
        else if (k == "input_dim") spec.input_dim = std::stoll(v);
        else if (k == "output_dim") spec.output_dim = std::stoll(v);
        else if (k == "seed") spec.seed = std::stoull(v);
        else if (k == "density") spec.density = std::stod(v);
    }
    return spec;
}

Eigen::Index next_pow2(Eigen::Index n) {
    Eigen::Index p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fwht_inplace(double* data, Eigen::Index n) {
    for (Eigen::Index h = 1; h < n; h <<= 1) {
        for (Eigen::Index i = 0; i < n; i += h << 1) {
            for (Eigen::Index j = i; j < i + h; ++j) {
                const double u = data[j];
                const double v = data[j + h];
                data[j] = u + v;
                data[j + h] = u - v;
            }
        }
    }
}

namespace {

void validate(const ProjectionSpec& spec) {
    if (spec.input_dim < 1) throw InvalidParameter("projection input_dim must be >= 1");
    if (spec.output_dim < 1) throw InvalidParameter("projection output_dim must be >= 1");
    if (spec.output_dim > spec.input_dim)
        throw InvalidParameter("projection output_dim exceeds input_dim");
    if (spec.family == Family::sparse && (spec.density <= 0.0 || spec.density > 1.0))
        throw InvalidParameter("sparse density must lie in (0, 1]");
}

// Entries are sampled in column-major order so the operator is a pure
// function of the spec.
Eigen::MatrixXd sample_dense(const ProjectionSpec& spec, Rng& rng) {
    Eigen::MatrixXd m(spec.input_dim, spec.output_dim);
    const double scale = spec.scale();
    switch (spec.family) {
        case Family::gaussian:
            for (Eigen::Index j = 0; j < spec.output_dim; ++j)
                for (Eigen::Index i = 0; i < spec.input_dim; ++i)
                    m(i, j) = rng.normal() * scale;
            break;
        case Family::sign:
            for (Eigen::Index j = 0; j < spec.output_dim; ++j)
                for (Eigen::Index i = 0; i < spec.input_dim; ++i)
                    m(i, j) = rng.pm1() * scale;
            break;
        case Family::sparse:
            for (Eigen::Index j = 0; j < spec.output_dim; ++j)
                for (Eigen::Index i = 0; i < spec.input_dim; ++i)
                    m(i, j) = rng.uniform01() < spec.density ? rng.pm1() * scale : 0.0;
            break;
        case Family::srht:
            break;
    }
    return m;
}

}  // namespace

ProjectionOperator sample_projection(const ProjectionSpec& spec) {
    validate(spec);
    ProjectionOperator op;
    op.spec = spec;
    Rng rng(spec.seed);

    if (spec.family != Family::srht) {
        op.matrix = sample_dense(spec, rng);
        return op;
    }

    op.padded_dim = next_pow2(spec.input_dim);

    // Row subsample first, sign diagonal second: the subsample depends only on
    // the padded size, so zero-padded inputs see the same selected rows.
    std::vector<Eigen::Index> all(static_cast<std::size_t>(op.padded_dim));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    for (Eigen::Index k = 0; k < spec.output_dim; ++k) {
        const auto j = k + static_cast<Eigen::Index>(
                               rng.uniform_below(static_cast<std::uint64_t>(op.padded_dim - k)));
        std::swap(all[static_cast<std::size_t>(k)], all[static_cast<std::size_t>(j)]);
    }
    op.srht_rows.assign(all.begin(), all.begin() + spec.output_dim);
    std::sort(op.srht_rows.begin(), op.srht_rows.end());

    op.srht_signs.resize(static_cast<std::size_t>(spec.input_dim));
    for (auto& s : op.srht_signs) s = rng.pm1();
    return op;
}

Eigen::VectorXd ProjectionOperator::apply(const Eigen::VectorXd& v) const {
    if (v.size() != input_dim()) throw DimError("projection apply: input length mismatch");
    if (matrix) return matrix->transpose() * v;

    Eigen::VectorXd buf = Eigen::VectorXd::Zero(padded_dim);
    for (Eigen::Index i = 0; i < input_dim(); ++i)
        buf[i] = v[i] * srht_signs[static_cast<std::size_t>(i)];
    fwht_inplace(buf.data(), padded_dim);

    const double scale = spec.scale();
    Eigen::VectorXd out(output_dim());
    for (Eigen::Index k = 0; k < output_dim(); ++k)
        out[k] = buf[srht_rows[static_cast<std::size_t>(k)]] * scale;
    return out;
}

Eigen::VectorXd ProjectionOperator::apply_transpose(const Eigen::VectorXd& g) const {
    if (g.size() != output_dim()) throw DimError("projection apply_transpose: length mismatch");
    if (matrix) return (*matrix) * g;

    // (S H D)' = D H S': scatter, transform (H symmetric), sign-flip.
    Eigen::VectorXd buf = Eigen::VectorXd::Zero(padded_dim);
    const double scale = spec.scale();
    for (Eigen::Index k = 0; k < output_dim(); ++k)
        buf[srht_rows[static_cast<std::size_t>(k)]] = g[k] * scale;
    fwht_inplace(buf.data(), padded_dim);

    Eigen::VectorXd out(input_dim());
    for (Eigen::Index i = 0; i < input_dim(); ++i)
        out[i] = buf[i] * srht_signs[static_cast<std::size_t>(i)];
    return out;
}

Eigen::MatrixXd ProjectionOperator::as_matrix() const {
    if (matrix) return *matrix;
    Eigen::MatrixXd phi(input_dim(), output_dim());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(output_dim());
    for (Eigen::Index k = 0; k < output_dim(); ++k) {
        e[k] = 1.0;
        phi.col(k) = apply_transpose(e);
        e[k] = 0.0;
    }
    return phi;
}

DesignMatrix apply_columns(const ProjectionOperator& op, const DesignMatrix& x) {
    if (op.input_dim() != x.p()) throw DimError("apply_columns: operator expects p = " +
                                                std::to_string(op.input_dim()));
    DesignMatrix out;
    if (op.matrix) {
        out.values = x.values * (*op.matrix);
    } else {
        out.values.resize(x.n(), op.output_dim());
        for (Eigen::Index i = 0; i < x.n(); ++i)
            out.values.row(i) = op.apply(x.values.row(i).transpose()).transpose();
    }
    out.column_means = Eigen::VectorXd::Zero(op.output_dim());
    return out;
}

std::pair<DesignMatrix, ResponseVector> apply_rows(const ProjectionOperator& op,
                                                   const DesignMatrix& x,
                                                   const ResponseVector& y) {
    if (op.input_dim() != x.n()) throw DimError("apply_rows: operator expects n = " +
                                                std::to_string(op.input_dim()));
    if (y.size() != x.n()) throw DimError("apply_rows: response length mismatch");

    DesignMatrix out;
    ResponseVector ys;
    if (op.matrix) {
        out.values = op.matrix->transpose() * x.values;
        ys = op.matrix->transpose() * y;
    } else {
        out.values.resize(op.output_dim(), x.p());
        for (Eigen::Index j = 0; j < x.p(); ++j) out.values.col(j) = op.apply(x.values.col(j));
        ys = op.apply(y);
    }
    out.column_means = Eigen::VectorXd::Zero(x.p());
    return {std::move(out), std::move(ys)};
}

ProjectionOperator operator_from_matrix(Eigen::MatrixXd phi) {
    if (phi.rows() < 1 || phi.cols() < 1) throw InvalidParameter("empty projection matrix");
    ProjectionOperator op;
    op.spec.family = Family::gaussian;
    op.spec.input_dim = phi.rows();
    op.spec.output_dim = phi.cols();
    op.matrix = std::move(phi);
    return op;
}

ProjectionOperator identity_operator(Eigen::Index dim) {
    return operator_from_matrix(Eigen::MatrixXd::Identity(dim, dim));
}

}  // namespace sketchreg
