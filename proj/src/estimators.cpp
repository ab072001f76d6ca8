#include "sketchreg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sketchreg/csv.hpp"
#include "sketchreg/errors.hpp"
#include "sketchreg/parallel.hpp"
#include "sketchreg/rng.hpp"

namespace sketchreg {

namespace {

double mean_squared_residual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& beta) {
    return (y - x * beta).squaredNorm() / static_cast<double>(y.size());
}

// Least squares through the Gram eigendecomposition. Directions with
// eigenvalue below rel_threshold * lambda_max count as null; kept directions
// give the (minimum-norm) solution. Returns the solution and the detected
// rank.
struct GramSolve {
    Eigen::VectorXd beta;
    Eigen::Index rank = 0;
    Eigen::Index dim = 0;
};

GramSolve gram_least_squares(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                             double rel_threshold, double diag_penalty = 0.0) {
    Eigen::MatrixXd gram = z.transpose() * z;
    if (diag_penalty > 0.0) gram.diagonal().array() += diag_penalty;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("Gram eigendecomposition failed");

    const Eigen::VectorXd b = z.transpose() * y;
    const double lead = es.eigenvalues()[gram.rows() - 1];
    const double threshold = lead > 0.0 ? rel_threshold * lead : 0.0;

    GramSolve out;
    out.dim = gram.rows();
    out.beta = Eigen::VectorXd::Zero(gram.rows());
    for (Eigen::Index k = 0; k < gram.rows(); ++k) {
        const double ev = es.eigenvalues()[k];
        if (ev <= 0.0 || ev < threshold) continue;
        const Eigen::VectorXd u = es.eigenvectors().col(k);
        out.beta += (u.dot(b) / ev) * u;
        ++out.rank;
    }
    return out;
}

void check_xy(const DesignMatrix& x, const ResponseVector& y) {
    if (x.n() < 1 || x.p() < 1) throw InvalidParameter("empty design matrix");
    if (y.size() != x.n()) throw DimError("response length does not match sample count");
    if (!x.values.allFinite() || !y.allFinite())
        throw InvalidParameter("non-finite entries in regression data");
}

}  // namespace

void save_fit(const std::filesystem::path& path, const FitResult& fit, const KvPairs& extra) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(fit.beta_original.size()));
    for (Eigen::Index i = 0; i < fit.beta_original.size(); ++i)
        rows.push_back({fit.beta_original[i]});
    write_csv(path, {}, rows);

    std::string seeds;
    for (std::size_t i = 0; i < fit.seeds.size(); ++i) {
        if (i) seeds += ' ';
        seeds += std::to_string(fit.seeds[i]);
    }
    KvPairs kv{{"method", fit.method},
               {"p", std::to_string(fit.beta_original.size())},
               {"d", std::to_string(fit.d)},
               {"K", std::to_string(fit.num_projections)},
               {"seeds", seeds},
               {"training_mse", format_double(fit.training_mse)}};
    kv.insert(kv.end(), extra.begin(), extra.end());
    write_kv_sidecar(path.string() + ".meta", kv);
}

FitResult ols_fit(const DesignMatrix& x, const ResponseVector& y, bool allow_pseudo_inverse) {
    check_xy(x, y);
    const GramSolve solve = gram_least_squares(x.values, y, kRankEpsilon);
    if (solve.rank < x.p() && !allow_pseudo_inverse)
        throw SingularError("Gram matrix is singular (rank " + std::to_string(solve.rank) +
                            " < p = " + std::to_string(x.p()) + ")");
    FitResult fit;
    fit.method = "ols";
    fit.beta_original = solve.beta;
    fit.training_mse = mean_squared_residual(x.values, y, fit.beta_original);
    return fit;
}

FitResult ridge_fit(const DesignMatrix& x, const ResponseVector& y, double lambda) {
    check_xy(x, y);
    if (lambda < 0.0) throw InvalidParameter("ridge penalty must be >= 0");
    if (lambda == 0.0) {
        FitResult fit = ols_fit(x, y, false);
        fit.method = "ridge";
        return fit;
    }
    Eigen::MatrixXd gram = x.values.transpose() * x.values;
    gram.diagonal().array() += lambda;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw NumericalError("ridge LDLT failed");

    FitResult fit;
    fit.method = "ridge";
    fit.beta_original = ldlt.solve(x.values.transpose() * y);
    fit.training_mse = mean_squared_residual(x.values, y, fit.beta_original);
    return fit;
}

FitResult clse_fit(const DesignMatrix& x, const ResponseVector& y, const ProjectionOperator& op,
                   double gamma_penalty) {
    check_xy(x, y);
    if (op.input_dim() != x.p()) throw DimError("clse_fit: operator input_dim != p");
    if (gamma_penalty < 0.0) throw InvalidParameter("gamma penalty must be >= 0");
    const Eigen::Index d = op.output_dim();
    if (rank_of(x) < d)
        throw RankError("clse_fit needs Rank(X) >= d = " + std::to_string(d));

    const DesignMatrix xphi = apply_columns(op, x);
    // Relative cut-off 1e-10 on the projected Gram's eigenvalues; below it the
    // minimum-norm solution is taken.
    const GramSolve solve = gram_least_squares(xphi.values, y, 1e-10, gamma_penalty);

    FitResult fit;
    fit.method = "clse";
    fit.d = static_cast<int>(d);
    fit.seeds = {op.spec.seed};
    fit.gamma_projected = solve.beta;
    fit.beta_original = op.apply_transpose(solve.beta);
    fit.training_mse = mean_squared_residual(x.values, y, fit.beta_original);
    return fit;
}

FitResult clse_fit(const DesignMatrix& x, const ResponseVector& y, const ProjectionSpec& spec,
                   double gamma_penalty) {
    return clse_fit(x, y, sample_projection(spec), gamma_penalty);
}

FitResult aclse_fit(const DesignMatrix& x, const ResponseVector& y, const ProjectionSpec& spec,
                    int num_projections) {
    check_xy(x, y);
    if (num_projections < 1) throw InvalidParameter("aclse_fit needs K >= 1");

    std::vector<FitResult> fits(static_cast<std::size_t>(num_projections));
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(num_projections));
    for (int k = 0; k < num_projections; ++k)
        seeds[static_cast<std::size_t>(k)] = substream_seed(spec.seed, static_cast<std::uint64_t>(k));

    parallel_for(static_cast<std::size_t>(num_projections), [&](std::size_t k) {
        fits[k] = clse_fit(x, y, spec.with_seed(seeds[k]), 0.0);
    });

    // Fixed ascending-stream summation keeps the result bit-identical across
    // thread counts.
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.p());
    for (const auto& f : fits) acc += f.beta_original;

    FitResult fit;
    fit.method = "aclse";
    fit.d = static_cast<int>(spec.output_dim);
    fit.num_projections = num_projections;
    fit.seeds = std::move(seeds);
    fit.beta_original = acc / static_cast<double>(num_projections);
    fit.training_mse = mean_squared_residual(x.values, y, fit.beta_original);
    return fit;
}

FitResult row_compressed_ols(const DesignMatrix& x, const ResponseVector& y,
                             const ProjectionOperator& op, bool allow_pseudo_inverse) {
    check_xy(x, y);
    if (op.input_dim() != x.n()) throw DimError("row_compressed_ols: operator input_dim != n");
    const Eigen::Index m = op.output_dim();
    if (m < x.p() && !allow_pseudo_inverse)
        throw RankError("row compression to m = " + std::to_string(m) +
                        " rows under-determines p = " + std::to_string(x.p()) + " coefficients");

    const auto [zx, zy] = apply_rows(op, x, y);
    const GramSolve solve = gram_least_squares(zx.values, zy, kRankEpsilon);
    if (solve.rank < x.p() && !allow_pseudo_inverse)
        throw SingularError("compressed Gram is singular");

    FitResult fit;
    fit.method = "rowols";
    fit.d = static_cast<int>(m);
    fit.seeds = {op.spec.seed};
    fit.beta_original = solve.beta;
    fit.training_mse = mean_squared_residual(x.values, y, fit.beta_original);
    return fit;
}

FitResult row_compressed_ols(const DesignMatrix& x, const ResponseVector& y,
                             const ProjectionSpec& spec, bool allow_pseudo_inverse) {
    return row_compressed_ols(x, y, sample_projection(spec), allow_pseudo_inverse);
}

CvReport select_dim_cv(const DesignMatrix& x, const ResponseVector& y,
                       const ProjectionSpec& spec_template, const std::vector<int>& grid,
                       int folds) {
    check_xy(x, y);
    if (grid.empty()) throw InvalidParameter("select_dim_cv: empty candidate grid");
    if (folds < 2) throw InvalidParameter("select_dim_cv needs folds >= 2");
    if (x.n() < folds) throw InvalidParameter("select_dim_cv: more folds than rows");

    const Eigen::Index n = x.n();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng shuffle_rng(substream_seed(spec_template.seed, 0));
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(
            shuffle_rng.uniform_below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }

    const std::size_t num_d = grid.size();
    Eigen::MatrixXd errors(static_cast<Eigen::Index>(num_d), folds);

    parallel_for(num_d * static_cast<std::size_t>(folds), [&](std::size_t cell) {
        const std::size_t j = cell % num_d;
        const int f = static_cast<int>(cell / num_d);

        const Eigen::Index lo = n * f / folds;
        const Eigen::Index hi = n * (f + 1) / folds;
        const Eigen::Index test_size = hi - lo;
        const Eigen::Index train_size = n - test_size;

        DesignMatrix train;
        train.values.resize(train_size, x.p());
        train.column_means = Eigen::VectorXd::Zero(x.p());
        Eigen::VectorXd train_y(train_size);
        Eigen::MatrixXd test_x(test_size, x.p());
        Eigen::VectorXd test_y(test_size);

        Eigen::Index ti = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index row = perm[static_cast<std::size_t>(i)];
            if (i >= lo && i < hi) {
                test_x.row(i - lo) = x.values.row(row);
                test_y[i - lo] = y[row];
            } else {
                train.values.row(ti) = x.values.row(row);
                train_y[ti] = y[row];
                ++ti;
            }
        }

        ProjectionSpec spec = spec_template;
        spec.input_dim = x.p();
        spec.output_dim = grid[j];
        spec.seed = substream_seed(spec_template.seed,
                                   1 + static_cast<std::uint64_t>(f) * num_d + j);
        const FitResult fit = clse_fit(train, train_y, spec, 0.0);
        errors(static_cast<Eigen::Index>(j), f) =
            (test_y - test_x * fit.beta_original).squaredNorm() /
            static_cast<double>(test_size);
    });

    CvReport report;
    report.grid = grid;
    report.fold_errors = errors;

    const Eigen::VectorXd means = errors.rowwise().mean();
    // Minimiser with ties toward the smaller candidate dimension.
    std::size_t best = 0;
    for (std::size_t j = 1; j < num_d; ++j) {
        const double mj = means[static_cast<Eigen::Index>(j)];
        const double mb = means[static_cast<Eigen::Index>(best)];
        if (mj < mb || (mj == mb && grid[j] < grid[best])) best = j;
    }
    report.chosen_d = grid[best];

    const Eigen::VectorXd dev =
        errors.row(static_cast<Eigen::Index>(best)).transpose().array() - means[static_cast<Eigen::Index>(best)];
    const double sd = std::sqrt(dev.squaredNorm() / static_cast<double>(folds - 1));
    const double cutoff = means[static_cast<Eigen::Index>(best)] + sd / std::sqrt(static_cast<double>(folds));

    int one_se = report.chosen_d;
    for (std::size_t j = 0; j < num_d; ++j)
        if (means[static_cast<Eigen::Index>(j)] <= cutoff && grid[j] < one_se) one_se = grid[j];
    report.one_se_d = one_se;
    return report;
}

}  // namespace sketchreg
