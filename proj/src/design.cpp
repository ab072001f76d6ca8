#include "sketchreg/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sketchreg/csv.hpp"
#include "sketchreg/errors.hpp"

namespace sketchreg {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw InvalidParameter(std::string(what) + " contains non-finite entries");
}

}  // namespace

Spectrum make_spectrum(Eigen::VectorXd eigenvalues) {
    if (eigenvalues.size() == 0) throw InvalidParameter("empty spectrum");
    require_finite(eigenvalues, "spectrum");
    std::sort(eigenvalues.data(), eigenvalues.data() + eigenvalues.size(),
              std::greater<double>());
    const double lead = eigenvalues[0];
    if (lead <= 0.0) throw InvalidParameter("spectrum has no positive eigenvalue");
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        if (eigenvalues[i] < kRankEpsilon * lead) eigenvalues[i] = 0.0;

    Spectrum s;
    s.eigenvalues = std::move(eigenvalues);
    s.trace_sigma = s.eigenvalues.sum();
    s.alphas = s.eigenvalues / s.trace_sigma;
    return s;
}

Eigen::Index rank_of(const DesignMatrix& x) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.values.transpose() * x.values,
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    const double lead = ev[ev.size() - 1];
    if (lead <= 0.0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] >= kRankEpsilon * lead) ++r;
    return r;
}

std::pair<DesignMatrix, ResponseVector> load_csv(const std::filesystem::path& path,
                                                 bool has_header) {
    const CsvTable table = read_numeric_csv(path, has_header);
    const std::size_t cols = table.num_cols();
    if (cols < 2)
        throw ParseError("need at least 2 columns (predictors + response)",
                         has_header ? 2 : 1, cols);

    const Eigen::Index n = static_cast<Eigen::Index>(table.num_rows());
    const Eigen::Index p = static_cast<Eigen::Index>(cols - 1);
    Eigen::MatrixXd values(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) values(i, j) = table.rows[i][j];
        y[i] = table.rows[i][cols - 1];
    }
    return {DesignMatrix(std::move(values)), std::move(y)};
}

void save_csv(const std::filesystem::path& path, const DesignMatrix& x,
              const ResponseVector& y) {
    if (y.size() != x.n()) throw DimError("response length does not match sample count");
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(x.n()));
    for (Eigen::Index i = 0; i < x.n(); ++i) {
        auto& row = rows[static_cast<std::size_t>(i)];
        row.reserve(static_cast<std::size_t>(x.p()) + 1);
        for (Eigen::Index j = 0; j < x.p(); ++j) row.push_back(x.values(i, j));
        row.push_back(y[i]);
    }
    write_csv(path, {}, rows);
}

DesignMatrix center(const DesignMatrix& x) {
    require_finite(x.values, "design matrix");
    DesignMatrix out = x;
    const Eigen::VectorXd means = x.values.colwise().mean();
    out.values.rowwise() -= means.transpose();
    out.column_means = x.column_means + means;
    return out;
}

std::pair<DesignMatrix, Spectrum> pc_rotate(const DesignMatrix& x) {
    require_finite(x.values, "design matrix");
    const Eigen::Index p = x.p();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.values.transpose() * x.values);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

    // Reorder ascending -> non-increasing and fix each eigenvector's sign so
    // its largest-magnitude entry is positive.
    Eigen::MatrixXd v(p, p);
    Eigen::VectorXd lambda(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Eigen::Index src = p - 1 - k;
        Eigen::VectorXd col = es.eigenvectors().col(src);
        Eigen::Index imax = 0;
        col.cwiseAbs().maxCoeff(&imax);
        if (col[imax] < 0.0) col = -col;
        v.col(k) = col;
        lambda[k] = es.eigenvalues()[src];
    }

    DesignMatrix rotated;
    rotated.values = x.values * v;
    rotated.column_means = v.transpose() * x.column_means;
    rotated.rotation = v;
    return {std::move(rotated), make_spectrum(std::move(lambda))};
}

std::pair<DesignMatrix, Spectrum> synthetic_design(const SyntheticSpec& spec, Eigen::Index n,
                                                   Eigen::Index p, std::uint64_t /*seed*/) {
    if (n < 1 || p < 1) throw InvalidParameter("synthetic design needs n >= 1, p >= 1");
    if (n < p) throw InvalidParameter("exact spectrum construction needs n >= p");

    Eigen::VectorXd diag(p);
    switch (spec.kind) {
        case SyntheticSpec::Kind::identity:
            diag.setOnes();
            break;
        case SyntheticSpec::Kind::inverse_index:
            for (Eigen::Index i = 0; i < p; ++i) diag[i] = 1.0 / static_cast<double>(i + 1);
            break;
        case SyntheticSpec::Kind::spiked:
            if (spec.spike_eps <= 0.0) throw InvalidParameter("spiked: eps must be > 0");
            if (spec.spike_dim < 1 || spec.spike_dim > p)
                throw InvalidParameter("spiked: spike dimension out of range");
            for (Eigen::Index i = 0; i < p; ++i)
                diag[i] = i < spec.spike_dim ? 1.0 : spec.spike_eps;
            break;
    }

    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, p);
    for (Eigen::Index i = 0; i < p; ++i) values(i, i) = std::sqrt(diag[i]);

    DesignMatrix x(std::move(values));
    x.rotation = Eigen::MatrixXd::Identity(p, p);

    Spectrum s;
    s.eigenvalues = diag;
    s.trace_sigma = diag.sum();
    s.alphas = diag / s.trace_sigma;
    return {std::move(x), std::move(s)};
}

}  // namespace sketchreg
