#include "sketchreg/theory.hpp"

#include <cmath>
#include <vector>

#include "sketchreg/accumulate.hpp"
#include "sketchreg/csv.hpp"
#include "sketchreg/errors.hpp"

namespace sketchreg {

namespace {

void check_beta(const Spectrum& spectrum, const Eigen::VectorXd& beta) {
    if (beta.size() != spectrum.size())
        throw DimError("beta length does not match spectrum size");
    if (!beta.allFinite()) throw InvalidParameter("beta contains non-finite entries");
}

void check_noise(const NoiseModel& noise) {
    if (!(noise.sigma2 >= 0.0) || !std::isfinite(noise.sigma2))
        throw InvalidParameter("noise variance must be finite and >= 0");
}

void check_d_in_p(int d, Eigen::Index p) {
    if (d < 1 || d > p) throw InvalidParameter("projection dimension must satisfy 1 <= d <= p");
}

MseReport assemble(MseKind kind, double variance_term, Eigen::VectorXd bias) {
    MseReport report;
    report.kind = kind;
    report.variance_term = variance_term;
    report.bias_per_direction = std::move(bias);
    CompensatedSum total;
    total.add(variance_term);
    for (Eigen::Index i = 0; i < report.bias_per_direction.size(); ++i)
        total.add(report.bias_per_direction[i]);
    report.total = total.value();
    return report;
}

}  // namespace

std::string mse_kind_name(MseKind kind) {
    switch (kind) {
        case MseKind::thm1_bound: return "thm1_bound";
        case MseKind::thm2_bound: return "thm2_bound";
        case MseKind::exact_thm3: return "exact_thm3";
        case MseKind::ridge_exact: return "ridge_exact";
        case MseKind::orthonormal_exact: return "orthonormal_exact";
        case MseKind::thm4_bound: return "thm4_bound";
    }
    return "unknown";
}

void save_mse_report(const std::filesystem::path& path, const MseReport& report,
                     const Spectrum& spectrum, const Eigen::VectorXd& beta) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < report.bias_per_direction.size(); ++i)
        rows.push_back({static_cast<double>(i + 1), spectrum.eigenvalues[i], beta[i],
                        report.bias_per_direction[i]});
    // Totals row: direction index 0 marks it; columns carry the variance term,
    // summed bias and grand total.
    rows.push_back({0.0, report.variance_term,
                    report.total - report.variance_term, report.total});
    write_csv(path, {"i", "lambda_i", "beta_i", "bias_i"}, rows);
}

MseReport theorem1_bound(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                         const NoiseModel& noise, int d) {
    check_beta(spectrum, beta);
    check_noise(noise);
    check_d_in_p(d, spectrum.size());

    const double dd = d;
    const double s = spectrum.trace_sigma;
    Eigen::VectorXd bias(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        const double b2 = beta[i] * beta[i];
        bias[i] = b2 * spectrum.eigenvalues[i] / dd + s * b2 / dd;
    }
    return assemble(MseKind::thm1_bound, noise.sigma2 * dd, std::move(bias));
}

Eigen::VectorXd shrinkage_factors_lambda_form(const Spectrum& spectrum, int d) {
    if (d < 1) throw InvalidParameter("shrinkage factors need d >= 1");
    const double dd = d;
    const double s = spectrum.trace_sigma;
    Eigen::VectorXd w(spectrum.size());
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
        const double l = spectrum.eigenvalues[i];
        const double num = (1.0 + 1.0 / dd) * l * l + (1.0 + 2.0 / dd) * l * s + s * s / dd;
        const double den = (dd + 2.0 + 1.0 / dd) * l * l + 2.0 * (1.0 + 1.0 / dd) * l * s + s * s / dd;
        w[i] = num / den;
    }
    return w;
}

Eigen::VectorXd shrinkage_factors_alpha_form(const Spectrum& spectrum, int d) {
    if (d < 1) throw InvalidParameter("shrinkage factors need d >= 1");
    const double dd = d;
    Eigen::VectorXd w(spectrum.size());
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
        const double a = spectrum.alphas[i];
        const double num = (1.0 + 1.0 / dd) * a * a + (1.0 + 2.0 / dd) * a + 1.0 / dd;
        const double den = (dd + 2.0 + 1.0 / dd) * a * a + 2.0 * (1.0 + 1.0 / dd) * a + 1.0 / dd;
        w[i] = num / den;
    }
    return w;
}

ShrinkageFactors shrinkage_factors(const Spectrum& spectrum, int d) {
    const Eigen::VectorXd wa = shrinkage_factors_alpha_form(spectrum, d);
    const Eigen::VectorXd wl = shrinkage_factors_lambda_form(spectrum, d);
    if (((wa - wl).cwiseAbs().maxCoeff()) > 1e-12)
        throw NumericalError("shrinkage factor forms disagree beyond 1e-12");
    return {wa, d};
}

MseReport theorem2_bound(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                         const NoiseModel& noise, int d) {
    check_beta(spectrum, beta);
    check_noise(noise);
    check_d_in_p(d, spectrum.size());

    const ShrinkageFactors w = shrinkage_factors(spectrum, d);
    Eigen::VectorXd bias(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i)
        bias[i] = beta[i] * beta[i] * spectrum.eigenvalues[i] * w.w[i];
    return assemble(MseKind::thm2_bound, noise.sigma2 * d, std::move(bias));
}

MseReport ridge_mse(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                    const NoiseModel& noise, double lambda) {
    check_beta(spectrum, beta);
    check_noise(noise);
    if (lambda < 0.0) throw InvalidParameter("ridge penalty must be >= 0");

    CompensatedSum variance;
    Eigen::VectorXd bias(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        const double l = spectrum.eigenvalues[i];
        const double denom = l + lambda;
        const double smooth = denom > 0.0 ? l / denom : 0.0;
        const double shrink = denom > 0.0 ? lambda / denom : 0.0;
        variance.add(noise.sigma2 * smooth * smooth);
        bias[i] = beta[i] * beta[i] * l * shrink * shrink;
    }
    return assemble(MseKind::ridge_exact, variance.value(), std::move(bias));
}

MseReport exact_mse_from_eta(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                             const NoiseModel& noise, const EtaEstimates& eta) {
    check_beta(spectrum, beta);
    check_noise(noise);
    if (eta.size() != spectrum.size()) throw DimError("eta estimates do not match spectrum");

    Eigen::VectorXd bias(beta.size());
    CompensatedSum var_prop;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        const double b2l = beta[i] * beta[i] * spectrum.eigenvalues[i];
        bias[i] = b2l * (1.0 - eta.ratio[i]);
        const double se = b2l * eta.stderr_ratio[i];
        var_prop.add(se * se);
    }
    MseReport report = assemble(MseKind::exact_thm3, noise.sigma2 * eta.d, std::move(bias));
    report.total_stderr = std::sqrt(var_prop.value());
    return report;
}

MseReport orthonormal_mse(double c, const Eigen::VectorXd& beta, const NoiseModel& noise,
                          int d, Eigen::Index p) {
    check_noise(noise);
    if (c < 0.0) throw InvalidParameter("orthonormal scale must be >= 0");
    if (beta.size() != p) throw DimError("beta length does not match p");
    check_d_in_p(d, p);

    const double factor = 1.0 - static_cast<double>(d) / static_cast<double>(p);
    Eigen::VectorXd bias(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) bias[i] = c * beta[i] * beta[i] * factor;
    return assemble(MseKind::orthonormal_exact, noise.sigma2 * d, std::move(bias));
}

MseReport theorem4_bound(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                         const NoiseModel& noise, int d, const TauEstimate& tau) {
    check_beta(spectrum, beta);
    check_noise(noise);
    check_d_in_p(d, spectrum.size());
    const double slack = 3.0 * tau.stderr_tau;
    if (tau.tau < tau.lower_bound() - slack || tau.tau > tau.upper_bound() + slack)
        throw InvalidParameter("tau estimate outside its [d^2/p, d] bounds");

    const ShrinkageFactors w = shrinkage_factors(spectrum, d);
    Eigen::VectorXd bias(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i)
        bias[i] = beta[i] * beta[i] * spectrum.eigenvalues[i] * w.w[i] * w.w[i];
    MseReport report = assemble(MseKind::thm4_bound, noise.sigma2 * tau.tau, std::move(bias));
    report.total_stderr = noise.sigma2 * tau.stderr_tau;
    return report;
}

Eigen::VectorXd optimal_dense_vector(const Spectrum& spectrum, const Eigen::VectorXd& beta,
                                     double d) {
    check_beta(spectrum, beta);
    if (d < 1.0) throw InvalidParameter("optimal dense vector needs d >= 1");
    const double s = spectrum.trace_sigma;
    Eigen::VectorXd v(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        const double l = spectrum.eigenvalues[i];
        v[i] = beta[i] * l / ((1.0 + 1.0 / d) * l + s / d);
    }
    return v;
}

double matched_ridge_lambda(const Spectrum& spectrum, int d) {
    if (d < 1) throw InvalidParameter("matched ridge lambda needs d >= 1");
    if (d >= spectrum.rank()) return 0.0;

    const auto dof = [&](double lambda) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
            const double l = spectrum.eigenvalues[i];
            if (l > 0.0) sum += l / (l + lambda);
        }
        return sum;
    };

    double lo = 0.0;
    double hi = spectrum.eigenvalues[0];
    while (dof(hi) > d) hi *= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (dof(mid) > d)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace sketchreg
