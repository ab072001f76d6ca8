// Command-line front end: fitting, bound evaluation, Monte Carlo simulation
// and figure reproduction, all seeded and reproducible. Exit codes: 0 ok,
// 1 runtime error, 2 usage error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "sketchreg/csv.hpp"
#include "sketchreg/design.hpp"
#include "sketchreg/errors.hpp"
#include "sketchreg/estimators.hpp"
#include "sketchreg/montecarlo.hpp"
#include "sketchreg/parallel.hpp"
#include "sketchreg/projections.hpp"
#include "sketchreg/rng.hpp"
#include "sketchreg/theory.hpp"

namespace {

using namespace sketchreg;

/// Inclusive integer grids: "4", "1..15", "2,5,9" or any comma mix.
std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> grid;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string token = text.substr(pos, comma - pos);
        pos = comma + 1;
        if (token.empty()) throw InvalidParameter("empty grid token in '" + text + "'");
        const std::size_t dots = token.find("..");
        if (dots == std::string::npos) {
            grid.push_back(std::stoi(token));
        } else {
            const int lo = std::stoi(token.substr(0, dots));
            const int hi = std::stoi(token.substr(dots + 2));
            if (hi < lo) throw InvalidParameter("descending range '" + token + "'");
            for (int v = lo; v <= hi; ++v) grid.push_back(v);
        }
        if (comma == text.size()) break;
    }
    if (grid.empty()) throw InvalidParameter("empty grid '" + text + "'");
    return grid;
}

Eigen::VectorXd read_column_file(const std::filesystem::path& path) {
    const CsvTable table = read_numeric_csv(path, false);
    if (table.num_cols() != 1)
        throw InvalidParameter(path.string() + ": expected a single numeric column");
    Eigen::VectorXd v(static_cast<Eigen::Index>(table.num_rows()));
    for (std::size_t i = 0; i < table.num_rows(); ++i) v[static_cast<Eigen::Index>(i)] = table.rows[i][0];
    return v;
}

Spectrum read_spectrum_file(const std::filesystem::path& path) {
    const Eigen::VectorXd ev = read_column_file(path);
    for (Eigen::Index i = 0; i + 1 < ev.size(); ++i)
        if (ev[i + 1] > ev[i])
            throw InvalidParameter(path.string() + ": eigenvalues must be non-increasing");
    return make_spectrum(ev);
}

struct CommonArgs {
    std::uint64_t seed = 0;
    int threads = 0;
};

std::uint64_t env_default_seed() {
    if (const char* env = std::getenv("SKETCHREG_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            std::cerr << "warning: ignoring unparseable SKETCHREG_SEED='" << env << "'\n";
        }
    }
    return 0;
}

void echo(const std::string& command, const KvPairs& kv) {
    std::cerr << "sketchreg " << command << ":";
    for (const auto& [k, v] : kv) std::cerr << ' ' << k << '=' << v;
    std::cerr << '\n';
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string method = "ols";
    std::string input;
    std::string output;
    bool has_header = false;
    bool center = false;
    bool allow_pinv = false;
    int d = 0;
    int m = 0;
    int k = 100;
    double lambda = 0.0;
    double gamma_penalty = 0.0;
    std::string family = "gaussian";
    double density = 1.0 / 3.0;
};

int run_fit(const FitArgs& args, const CommonArgs& common) {
    auto [x, y] = load_csv(args.input, args.has_header);
    if (args.center) x = center(x);

    const MethodSpec::Kind kind = method_from_name(args.method);
    const Family family = family_from_name(args.family);

    FitResult fit;
    switch (kind) {
        case MethodSpec::Kind::ols:
            fit = ols_fit(x, y, args.allow_pinv);
            break;
        case MethodSpec::Kind::ridge:
            fit = ridge_fit(x, y, args.lambda);
            break;
        case MethodSpec::Kind::clse: {
            if (args.d < 1) throw InvalidParameter("clse needs --d >= 1");
            ProjectionSpec spec{family, x.p(), args.d, common.seed, args.density};
            fit = clse_fit(x, y, spec, args.gamma_penalty);
            break;
        }
        case MethodSpec::Kind::aclse: {
            if (args.d < 1) throw InvalidParameter("aclse needs --d >= 1");
            ProjectionSpec spec{family, x.p(), args.d, common.seed, args.density};
            fit = aclse_fit(x, y, spec, args.k);
            break;
        }
        case MethodSpec::Kind::rowols: {
            if (args.m < 1) throw InvalidParameter("rowols needs --m >= 1");
            ProjectionSpec spec{family, x.n(), args.m, common.seed, args.density};
            fit = row_compressed_ols(x, y, spec, args.allow_pinv);
            break;
        }
    }

    KvPairs extra{{"input", args.input},
                  {"input_hash", hash_file(args.input)},
                  {"family", args.family},
                  {"lambda", format_double(args.lambda)},
                  {"gamma_penalty", format_double(args.gamma_penalty)},
                  {"centered", args.center ? "1" : "0"},
                  {"base_seed", std::to_string(common.seed)}};
    save_fit(args.output, fit, extra);

    echo("fit", {{"method", args.method},
                 {"seed", std::to_string(common.seed)},
                 {"n", std::to_string(x.n())},
                 {"p", std::to_string(x.p())},
                 {"training_mse", format_double(fit.training_mse)},
                 {"output", args.output}});
    return 0;
}

// ---------------------------------------------------------------- bounds

struct BoundsArgs {
    std::string spectrum_file;
    std::string beta_file;
    std::string output;
    std::string d_range = "1..15";
    double sigma2 = 0.0;
    int eta_samples = 20000;
};

int run_bounds(const BoundsArgs& args, const CommonArgs& common) {
    const Spectrum spectrum = read_spectrum_file(args.spectrum_file);
    const Eigen::VectorXd beta = read_column_file(args.beta_file);
    const NoiseModel noise{args.sigma2};
    const std::vector<int> grid = parse_grid(args.d_range);

    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const int d = grid[j];
        const EtaEstimates eta =
            estimate_eta(spectrum, d, args.eta_samples,
                         substream_seed(common.seed, (static_cast<std::uint64_t>(j) + 1) << 32));
        const TauEstimate tau = estimate_tau(eta);
        const double ridge_matched =
            ridge_mse(spectrum, beta, noise, matched_ridge_lambda(spectrum, d)).total;
        rows.push_back({static_cast<double>(d),
                        theorem1_bound(spectrum, beta, noise, d).total,
                        theorem2_bound(spectrum, beta, noise, d).total,
                        theorem4_bound(spectrum, beta, noise, d, tau).total, ridge_matched});
    }
    write_csv(args.output, {"d", "thm1", "thm2", "thm4", "ridge_at_matched_lambda"}, rows);
    write_kv_sidecar(std::string(args.output) + ".meta",
                     {{"spectrum", args.spectrum_file},
                      {"spectrum_hash", hash_file(args.spectrum_file)},
                      {"beta", args.beta_file},
                      {"beta_hash", hash_file(args.beta_file)},
                      {"sigma2", format_double(args.sigma2)},
                      {"eta_samples", std::to_string(args.eta_samples)},
                      {"seed", std::to_string(common.seed)},
                      {"d", args.d_range}});

    echo("bounds", {{"seed", std::to_string(common.seed)},
                    {"p", std::to_string(spectrum.size())},
                    {"d", args.d_range},
                    {"output", args.output}});
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string fixture = "inverse_index";
    std::string input;
    bool has_header = false;
    bool no_center = false;
    int n = 40;
    int p = 20;
    int spike_d = 5;
    double spike_eps = 1e-6;
    std::string beta_file;
    std::string method = "clse";
    std::string family = "gaussian";
    double density = 1.0 / 3.0;
    std::string d_range = "1..15";
    int k = 100;
    double lambda = 0.0;
    double sigma2 = 0.0;
    int m_samples = 500;
    int r_samples = 500;
    int eta_samples = 20000;
    std::string output;
};

int run_simulate(const SimulateArgs& args, const CommonArgs& common) {
    DesignMatrix x;
    std::string fixture_desc;
    if (!args.input.empty()) {
        auto [loaded, y] = load_csv(args.input, args.has_header);
        (void)y;  // the response column is ignored; simulate generates its own model
        DesignMatrix prepared = args.no_center ? loaded : center(loaded);
        auto [rotated, spectrum] = pc_rotate(prepared);
        x = std::move(rotated);
        fixture_desc = "file:" + args.input;
    } else {
        SyntheticSpec spec;
        if (args.fixture == "identity") spec = SyntheticSpec::identity();
        else if (args.fixture == "inverse_index") spec = SyntheticSpec::inverse_index();
        else if (args.fixture == "spiked") spec = SyntheticSpec::spiked(args.spike_d, args.spike_eps);
        else throw InvalidParameter("unknown fixture: " + args.fixture);
        x = synthetic_design(spec, args.n, args.p).first;
        fixture_desc = args.fixture;
    }

    Eigen::VectorXd beta;
    if (args.beta_file.empty())
        beta = Eigen::VectorXd::Ones(x.p());
    else
        beta = read_column_file(args.beta_file);

    MethodSpec method;
    method.kind = method_from_name(args.method);
    method.family = family_from_name(args.family);
    method.density = args.density;
    method.num_projections = args.k;
    method.lambda = args.lambda;

    McConfig config;
    config.num_projection_samples = args.m_samples;
    config.num_noise_reps = args.r_samples;
    config.num_eta_samples = args.eta_samples;
    config.base_seed = common.seed;
    config.d_grid = parse_grid(args.d_range);

    const bool nongaussian_bounds =
        method.family != Family::gaussian &&
        (method.kind == MethodSpec::Kind::clse || method.kind == MethodSpec::Kind::aclse);
    if (nongaussian_bounds)
        std::cerr << "note: bound columns assume the gaussian family; they are reported "
                     "unchanged for family="
                  << args.family << "\n";

    ExperimentResult result = empirical_mse(x, beta, NoiseModel{args.sigma2}, method, config);
    result.provenance.emplace_back("fixture", fixture_desc);
    if (!args.input.empty()) {
        result.provenance.emplace_back("input_hash", hash_file(args.input));
        result.provenance.emplace_back("centered", args.no_center ? "0" : "1");
    }
    if (nongaussian_bounds)
        result.provenance.emplace_back("bounds_family_caveat",
                                       "bound columns assume the gaussian family");
    result.write(args.output);

    echo("simulate", {{"method", args.method},
                      {"fixture", fixture_desc},
                      {"seed", std::to_string(common.seed)},
                      {"sigma2", format_double(args.sigma2)},
                      {"M", std::to_string(args.m_samples)},
                      {"R", std::to_string(args.r_samples)},
                      {"d", args.d_range},
                      {"output", args.output}});
    return 0;
}

// ---------------------------------------------------------------- reproduce

struct ReproduceArgs {
    std::string figure;
    std::string output;
    std::string d_range = "1..15";
    int m_samples = 100;
    int r_samples = 500;
    int eta_samples = 20000;
    int k = 100;
};

int run_reproduce(const ReproduceArgs& args, const CommonArgs& common) {
    McConfig config;
    config.num_projection_samples = args.m_samples;
    config.num_noise_reps = args.r_samples;
    config.num_eta_samples = args.eta_samples;
    config.base_seed = common.seed;
    config.d_grid = parse_grid(args.d_range);
    config.k_grid = {args.k};

    ExperimentResult result = reproduce_figure(args.figure, config);
    result.write(args.output);

    echo("reproduce", {{"figure", args.figure},
                       {"seed", std::to_string(common.seed)},
                       {"d", args.d_range},
                       {"output", args.output}});
    return 0;
}

// ---------------------------------------------------------------- project

struct ProjectArgs {
    std::string input;
    std::string output;
    bool has_header = false;
    std::string role = "columns";
    std::string family = "gaussian";
    double density = 1.0 / 3.0;
    int d = 0;
};

int run_project(const ProjectArgs& args, const CommonArgs& common) {
    const auto [x, y] = load_csv(args.input, args.has_header);
    if (args.d < 1) throw InvalidParameter("project needs --d >= 1");

    ProjectionSpec spec;
    spec.family = family_from_name(args.family);
    spec.density = args.density;
    spec.output_dim = args.d;
    spec.seed = common.seed;

    if (args.role == "columns") {
        spec.input_dim = x.p();
        const ProjectionOperator op = sample_projection(spec);
        save_csv(args.output, apply_columns(op, x), y);
    } else if (args.role == "rows") {
        spec.input_dim = x.n();
        const ProjectionOperator op = sample_projection(spec);
        const auto [zx, zy] = apply_rows(op, x, y);
        save_csv(args.output, zx, zy);
    } else {
        throw InvalidParameter("--role must be columns or rows");
    }

    KvPairs kv = parse_kv_text(to_kv_text(spec));
    kv.emplace_back("role", args.role);
    kv.emplace_back("input", args.input);
    kv.emplace_back("input_hash", hash_file(args.input));
    write_kv_sidecar(std::string(args.output) + ".meta", kv);

    echo("project", {{"role", args.role},
                     {"family", args.family},
                     {"d", std::to_string(args.d)},
                     {"seed", std::to_string(common.seed)},
                     {"output", args.output}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sketchreg: compressed least squares via random projections"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags override it");

    CommonArgs common;
    common.seed = env_default_seed();
    app.add_option("--seed", common.seed,
                   "base RNG seed (unsigned 64-bit); env SKETCHREG_SEED is the fallback")
        ->capture_default_str();
    app.add_option("--threads", common.threads,
                   "worker thread cap, count (0 = all cores); results do not depend on it")
        ->capture_default_str();

    FitArgs fit;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a regression estimator on a CSV file");
    fit_cmd->add_option("--method", fit.method, "ols | ridge | clse | aclse | rowols")
        ->capture_default_str();
    fit_cmd->add_option("--input", fit.input, "input CSV path (response in last column)")
        ->required();
    fit_cmd->add_option("--output", fit.output, "output coefficient CSV path")->required();
    fit_cmd->add_flag("--has-header", fit.has_header, "skip one header row in the input");
    fit_cmd->add_flag("--center", fit.center, "subtract column means before fitting");
    fit_cmd->add_flag("--allow-pinv", fit.allow_pinv,
                      "minimum-norm solution instead of failing on singular systems");
    fit_cmd->add_option("--d", fit.d, "projection dimension d, columns (clse/aclse)");
    fit_cmd->add_option("--m", fit.m, "compressed sample count m, rows (rowols)");
    fit_cmd->add_option("--K", fit.k, "number of averaged projections, count (aclse)")
        ->capture_default_str();
    fit_cmd->add_option("--lambda", fit.lambda, "ridge penalty, >= 0")->capture_default_str();
    fit_cmd->add_option("--gamma-penalty", fit.gamma_penalty,
                        "experimental ridge penalty on projected coefficients (no bound support)")
        ->capture_default_str();
    fit_cmd->add_option("--family", fit.family, "gaussian | sign | sparse | srht")
        ->capture_default_str();
    fit_cmd->add_option("--density", fit.density, "sparse family density q in (0,1]")
        ->capture_default_str();

    BoundsArgs bounds;
    CLI::App* bounds_cmd =
        app.add_subcommand("bounds", "evaluate MSE bounds over a projection-dimension grid");
    bounds_cmd->add_option("--spectrum", bounds.spectrum_file,
                           "CSV with one eigenvalue per row, non-increasing")
        ->required();
    bounds_cmd->add_option("--beta", bounds.beta_file, "CSV with one coefficient per row")
        ->required();
    bounds_cmd->add_option("--sigma2", bounds.sigma2, "noise variance, >= 0")
        ->capture_default_str();
    bounds_cmd->add_option("--d", bounds.d_range, "dimension grid, e.g. 4 or 1..15 or 2,4,8")
        ->capture_default_str();
    bounds_cmd->add_option("--eta-samples", bounds.eta_samples,
                           "Monte Carlo draws for eta, count")
        ->capture_default_str();
    bounds_cmd->add_option("--output", bounds.output, "output CSV path")->required();

    SimulateArgs sim;
    CLI::App* sim_cmd =
        app.add_subcommand("simulate", "empirical MSE of an estimator under a known model");
    sim_cmd->add_option("--fixture", sim.fixture, "identity | inverse_index | spiked")
        ->capture_default_str();
    sim_cmd->add_option("--input", sim.input,
                        "fit on this CSV's predictors instead of a synthetic fixture "
                        "(centered + rotated to the diagonal-Gram basis unless --no-center)");
    sim_cmd->add_flag("--has-header", sim.has_header, "skip one header row in the input");
    sim_cmd->add_flag("--no-center", sim.no_center, "do not center file input before rotating");
    sim_cmd->add_option("--n", sim.n, "fixture rows, count")->capture_default_str();
    sim_cmd->add_option("--p", sim.p, "fixture columns, count")->capture_default_str();
    sim_cmd->add_option("--spike-d", sim.spike_d, "spiked fixture: leading directions, count")
        ->capture_default_str();
    sim_cmd->add_option("--spike-eps", sim.spike_eps, "spiked fixture: tail variance, > 0")
        ->capture_default_str();
    sim_cmd->add_option("--beta-file", sim.beta_file,
                        "true coefficients, one per row (default: all ones)");
    sim_cmd->add_option("--method", sim.method, "ols | ridge | clse | aclse | rowols")
        ->capture_default_str();
    sim_cmd->add_option("--family", sim.family, "gaussian | sign | sparse | srht")
        ->capture_default_str();
    sim_cmd->add_option("--density", sim.density, "sparse family density q in (0,1]")
        ->capture_default_str();
    sim_cmd->add_option("--d", sim.d_range, "dimension grid (m grid for rowols), e.g. 1..15")
        ->capture_default_str();
    sim_cmd->add_option("--K", sim.k, "averaged projections, count (aclse)")->capture_default_str();
    sim_cmd->add_option("--lambda", sim.lambda, "ridge penalty, >= 0")->capture_default_str();
    sim_cmd->add_option("--sigma2", sim.sigma2, "noise variance, >= 0")->capture_default_str();
    sim_cmd->add_option("--M", sim.m_samples, "projection replicates, count >= 100")
        ->capture_default_str();
    sim_cmd->add_option("--R", sim.r_samples, "noise replicates, count >= 100")
        ->capture_default_str();
    sim_cmd->add_option("--eta-samples", sim.eta_samples, "Monte Carlo draws for eta, count")
        ->capture_default_str();
    sim_cmd->add_option("--output", sim.output, "output CSV path")->required();

    ReproduceArgs rep;
    CLI::App* rep_cmd = app.add_subcommand("reproduce", "desk-scale figure reproductions");
    rep_cmd->add_option("--figure", rep.figure, "fig1 | fig2 | fig3")->required();
    rep_cmd->add_option("--output", rep.output, "output CSV path")->required();
    rep_cmd->add_option("--d", rep.d_range, "dimension grid, e.g. 1..15")->capture_default_str();
    rep_cmd->add_option("--M", rep.m_samples, "projection replicates, count >= 100 (fig2)")
        ->capture_default_str();
    rep_cmd->add_option("--R", rep.r_samples, "noise replicates, count >= 100 (fig2)")
        ->capture_default_str();
    rep_cmd->add_option("--eta-samples", rep.eta_samples, "Monte Carlo draws for eta, count")
        ->capture_default_str();
    rep_cmd->add_option("--K", rep.k, "averaged projections, count (fig2)")->capture_default_str();

    ProjectArgs proj;
    CLI::App* proj_cmd = app.add_subcommand("project", "apply a random projection to a CSV file");
    proj_cmd->add_option("--input", proj.input, "input CSV path (response in last column)")
        ->required();
    proj_cmd->add_option("--output", proj.output, "projected CSV path")->required();
    proj_cmd->add_flag("--has-header", proj.has_header, "skip one header row in the input");
    proj_cmd->add_option("--role", proj.role, "columns (p -> d) or rows (n -> m)")
        ->capture_default_str();
    proj_cmd->add_option("--family", proj.family, "gaussian | sign | sparse | srht")
        ->capture_default_str();
    proj_cmd->add_option("--density", proj.density, "sparse family density q in (0,1]")
        ->capture_default_str();
    proj_cmd->add_option("--d", proj.d, "output dimension, count")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    sketchreg::set_max_threads(common.threads);

    try {
        if (app.got_subcommand(fit_cmd)) return run_fit(fit, common);
        if (app.got_subcommand(bounds_cmd)) return run_bounds(bounds, common);
        if (app.got_subcommand(sim_cmd)) return run_simulate(sim, common);
        if (app.got_subcommand(rep_cmd)) return run_reproduce(rep, common);
        if (app.got_subcommand(proj_cmd)) return run_project(proj, common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "error: no command dispatched\n";
    return 2;
}
