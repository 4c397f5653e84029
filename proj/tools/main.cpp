// Command-line front end: fit models from CSV, run simulation benchmarks,
// expose the epigraph projections, generate synthetic data, thin grids.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "proxtrend/fit.hpp"

using json = nlohmann::json;
using namespace proxtrend;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string error_name(const Error& e) {
    if (dynamic_cast<const InvalidGrid*>(&e)) return "InvalidGrid";
    if (dynamic_cast<const OrderTooHigh*>(&e)) return "OrderTooHigh";
    if (dynamic_cast<const DimMismatch*>(&e)) return "DimMismatch";
    if (dynamic_cast<const SingularMatrix*>(&e)) return "SingularMatrix";
    if (dynamic_cast<const InvalidLambda*>(&e)) return "InvalidLambda";
    if (dynamic_cast<const BracketError*>(&e)) return "BracketError";
    if (dynamic_cast<const ConvergenceError*>(&e)) return "ConvergenceError";
    if (dynamic_cast<const NonFiniteDensity*>(&e)) return "NonFiniteDensity";
    if (dynamic_cast<const SamplingFailed*>(&e)) return "SamplingFailed";
    if (dynamic_cast<const InsufficientChains*>(&e)) return "InsufficientChains";
    if (dynamic_cast<const EmptyData*>(&e)) return "EmptyData";
    if (dynamic_cast<const UnknownTrend*>(&e)) return "UnknownTrend";
    if (dynamic_cast<const EmptyChains*>(&e)) return "EmptyChains";
    if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const InvalidConfig*>(&e)) return "InvalidConfig";
    return "Error";
}

ShapeSpec parse_shape(const std::string& name) {
    ShapeSpec s;
    if (name.empty() || name == "none") return s;
    std::string rest = name;
    const auto take = [&](const std::string& prefix) {
        if (rest.rfind(prefix, 0) == 0) {
            rest = rest.substr(prefix.size());
            if (!rest.empty() && rest[0] == '-') rest = rest.substr(1);
            return true;
        }
        return false;
    };
    if (take("inc")) s.monotone = Monotone::increasing;
    else if (take("dec")) s.monotone = Monotone::decreasing;
    if (take("convex")) s.curvature = Curvature::convex;
    else if (take("concave")) s.curvature = Curvature::concave;
    if (!rest.empty()) throw InvalidConfig("unknown shape restriction: " + name);
    return s;
}

std::string shape_name(const ShapeSpec& s) {
    std::string out;
    if (s.monotone == Monotone::increasing) out = "inc";
    if (s.monotone == Monotone::decreasing) out = "dec";
    if (s.curvature != Curvature::none) {
        if (!out.empty()) out += "-";
        out += s.curvature == Curvature::convex ? "convex" : "concave";
    }
    return out.empty() ? "none" : out;
}

struct FitFlags {
    std::string input;
    std::string out_dir = ".";
    int order = 1;
    std::string model = "pbtf";
    std::string shape = "none";
    double lambda = 0.0;
    double s = 0.01, r = 0.01;
    double s2 = 0.0;
    double mu = 3.0;
    int chains = 4, draws = 3000, warmup = 1000;
    double target_accept = 0.8;
    int max_depth = 10;
    std::uint64_t seed = 0;
    int thin_bins = 0;
    bool save_draws = false;
};

void add_model_flags(CLI::App* cmd, FitFlags& f) {
    cmd->add_option("--order", f.order, "trend order k (1 or 2)")->check(CLI::Range(1, 2));
    cmd->add_option("--model", f.model, "pbtf or pbsrtf")
        ->check(CLI::IsMember({"pbtf", "pbsrtf"}));
    cmd->add_option("--shape", f.shape,
                    "shape restriction (inc, dec, convex, concave, inc-convex, ...)");
    cmd->add_option("--lambda", f.lambda, "envelope parameter (default: data-driven)");
    cmd->add_option("--s", f.s, "inverse-Gamma shape for sigma^2");
    cmd->add_option("--r", f.r, "inverse-Gamma rate for sigma^2");
    cmd->add_option("--s2", f.s2, "beta-prime second shape (default sqrt(n))");
    cmd->add_option("--mu", f.mu, "Gamma rate on alpha (pbsrtf)");
    cmd->add_option("--chains", f.chains, "number of chains");
    cmd->add_option("--draws", f.draws, "post-warmup draws per chain");
    cmd->add_option("--warmup", f.warmup, "warmup iterations per chain");
    cmd->add_option("--target-accept", f.target_accept, "dual-averaging target");
    cmd->add_option("--max-depth", f.max_depth, "maximum trajectory tree depth");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--thin", f.thin_bins, "thin the grid into this many bins before fitting");
}

FitConfig to_config(const FitFlags& f) {
    FitConfig cfg;
    cfg.model.k = f.order;
    cfg.model.model = f.model == "pbsrtf" ? Model::PBSRTF : Model::PBTF;
    cfg.model.shape = parse_shape(f.shape);
    cfg.model.lambda = f.lambda;
    cfg.model.s = f.s;
    cfg.model.r = f.r;
    cfg.model.s2 = f.s2;
    cfg.model.mu = f.mu;
    cfg.sampler.n_chains = f.chains;
    cfg.sampler.n_draws = f.draws;
    cfg.sampler.n_warmup = f.warmup;
    cfg.sampler.target_accept = f.target_accept;
    cfg.sampler.max_tree_depth = f.max_depth;
    cfg.sampler.seed = f.seed;
    cfg.sampler.init_jitter = 0.01;
    if (f.thin_bins > 0) cfg.thin_bins = f.thin_bins;
    return cfg;
}

json manifest_json(const std::string& subcommand, const FitFlags& f, const FitResult& fit) {
    json m;
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["input"] = f.input;
    m["config"] = {{"order", f.order},
                   {"model", f.model},
                   {"shape", f.shape},
                   {"lambda", f.lambda},
                   {"s", f.s},
                   {"r", f.r},
                   {"s2", f.s2},
                   {"mu", f.mu},
                   {"chains", f.chains},
                   {"draws", f.draws},
                   {"warmup", f.warmup},
                   {"target_accept", f.target_accept},
                   {"max_tree_depth", f.max_depth},
                   {"seed", f.seed},
                   {"thin", f.thin_bins},
                   {"save_draws", f.save_draws}};
    json resolved;
    resolved["lambda"] = fit.resolved.lambda;
    if (fit.resolved.model == Model::PBTF) {
        resolved["s2"] = fit.resolved.s2;
        resolved["reparam"] = fit.resolved.reparam == ReparamScheme::T1 ? "T1" : "T2";
    } else {
        resolved["mu"] = fit.resolved.mu;
        resolved["shape"] = shape_name(fit.resolved.shape);
    }
    resolved["s"] = fit.resolved.s;
    resolved["r"] = fit.resolved.r;
    resolved["n_fitted"] = fit.fitted_data.n();
    resolved["warmup_schedule"] = "75 step-size-only / doubling metric windows from 25 / 50 final";
    resolved["init_jitter"] = 0.01;
    if (!fit.rescale.identity()) {
        resolved["rescale"] = {{"x_off", fit.rescale.x_off},
                               {"x_scale", fit.rescale.x_scale},
                               {"y_off", fit.rescale.y_off},
                               {"y_scale", fit.rescale.y_scale}};
    }
    m["resolved"] = resolved;
    return m;
}

void write_summary_csv(const std::string& path, const std::vector<double>& grid,
                       const FitSummary& s) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw ParseError("cannot open " + path + " for writing");
    std::fprintf(fp, "x,median,q025,q975\n");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g\n", grid[i], s.median[i], s.q025[i], s.q975[i]);
    }
    std::fclose(fp);
}

void write_draws_bin(const std::string& path, const std::vector<ChainResult>& chains) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw ParseError("cannot open " + path + " for writing");
    const char magic[8] = {'P', 'X', 'T', 'D', 'R', 'A', 'W', 'S'};
    std::fwrite(magic, 1, 8, fp);
    std::uint64_t total = 0;
    for (const auto& c : chains) total += static_cast<std::uint64_t>(c.draws.rows());
    const std::uint64_t dim = chains.empty() ? 0 : static_cast<std::uint64_t>(chains[0].draws.cols());
    std::fwrite(&total, 8, 1, fp);
    std::fwrite(&dim, 8, 1, fp);
    for (const auto& c : chains) {
        for (Eigen::Index i = 0; i < c.draws.rows(); ++i) {
            for (Eigen::Index j = 0; j < c.draws.cols(); ++j) {
                const double v = c.draws(i, j);
                std::fwrite(&v, 8, 1, fp);
            }
        }
    }
    std::fclose(fp);
}

json diagnostics_json(const FitResult& fit) {
    json d;
    d["tcpu_seconds"] = fit.tcpu_seconds;
    d["divergences"] = fit.diag.total_divergences;
    d["accept_mean"] = fit.diag.accept_mean;
    d["lambda"] = fit.resolved.lambda;
    if (fit.resolved.model == Model::PBTF) {
        d["s2"] = fit.resolved.s2;
    } else {
        d["mu"] = fit.resolved.mu;
    }
    if (fit.diag.rhat.size() > 0) {
        d["rhat"] = std::vector<double>(fit.diag.rhat.data(),
                                        fit.diag.rhat.data() + fit.diag.rhat.size());
        d["ess"] = std::vector<double>(fit.diag.ess.data(),
                                       fit.diag.ess.data() + fit.diag.ess.size());
        d["rhat_flagged"] = fit.diag.flagged;
    }
    d["sigma2"] = {{"median", fit.summary.sigma2_summary[0]},
                   {"q025", fit.summary.sigma2_summary[1]},
                   {"q975", fit.summary.sigma2_summary[2]}};
    d["alpha_sampling_units"] = {{"median", fit.summary.alpha_summary[0]},
                                 {"q025", fit.summary.alpha_summary[1]},
                                 {"q975", fit.summary.alpha_summary[2]}};
    return d;
}

int cmd_fit(const FitFlags& f) {
    const TrendData data = load_csv_file(f.input);
    const FitConfig cfg = to_config(f);
    const FitResult fit = fit_model(data, cfg);

    std::filesystem::create_directories(f.out_dir);
    write_summary_csv(f.out_dir + "/summary.csv", fit.fitted_data.grid, fit.summary);
    if (fit.thinning) {
        const FitSummary original =
            interpolate_summary(fit.summary, fit.fitted_data.grid, data.grid);
        write_summary_csv(f.out_dir + "/summary_original_grid.csv", data.grid, original);
    }
    std::ofstream(f.out_dir + "/diagnostics.json") << diagnostics_json(fit).dump(2) << "\n";
    std::ofstream(f.out_dir + "/manifest.json") << manifest_json("fit", f, fit).dump(2) << "\n";
    if (f.save_draws) write_draws_bin(f.out_dir + "/draws.bin", fit.chains);

    std::cout << "fitted n=" << fit.fitted_data.n() << " tcpu=" << fit.tcpu_seconds
              << "s divergences=" << fit.diag.total_divergences << "\n";
    return 0;
}

struct BenchFlags : FitFlags {
    std::string trend = "piecewise_linear";
    double sigma = 3.0;
    int n = 100;
    int replicates = 10;
};

int cmd_bench(const BenchFlags& f) {
    const TrendKind kind = trend_from_name(f.trend);
    const Vector grid = default_grid(kind, f.n);
    const Vector truth = generate_trend(kind, grid);

    std::filesystem::create_directories(f.out_dir);
    std::ofstream rows(f.out_dir + "/bench.csv");
    rows << "replicate,seed,mad,cp,mciw,tcpu\n";

    double mad_sum = 0, mad_sq = 0, cp_sum = 0, mciw_sum = 0, tcpu_sum = 0;
    FitResult last_fit;
    for (int rep = 1; rep <= f.replicates; ++rep) {
        const std::uint64_t seed = f.seed + static_cast<std::uint64_t>(rep);
        const TrendData data = simulate(grid, truth, f.sigma, seed);
        FitConfig cfg = to_config(f);
        cfg.sampler.seed = seed;
        FitResult fit = fit_model(data, cfg);
        const Metrics m = evaluate(fit.summary, truth);
        rows << rep << ',' << seed << ',' << m.mad << ',' << m.cp << ',' << m.mciw << ','
             << fit.tcpu_seconds << "\n";
        rows.flush();
        mad_sum += m.mad;
        mad_sq += m.mad * m.mad;
        cp_sum += m.cp;
        mciw_sum += m.mciw;
        tcpu_sum += fit.tcpu_seconds;
        std::cerr << "replicate " << rep << "/" << f.replicates << ": mad=" << m.mad
                  << " cp=" << m.cp << " mciw=" << m.mciw << "\n";
        last_fit = std::move(fit);
    }
    const double R = f.replicates;
    const double mad_mean = mad_sum / R;
    const double mad_sd = R > 1 ? std::sqrt((mad_sq - R * mad_mean * mad_mean) / (R - 1)) : 0.0;
    json summary = {{"trend", f.trend},     {"k", f.order},
                    {"sigma", f.sigma},     {"replicates", f.replicates},
                    {"mad_mean", mad_mean}, {"mad_sd", mad_sd},
                    {"mciw_mean", mciw_sum / R}, {"cp_mean", cp_sum / R},
                    {"tcpu_mean", tcpu_sum / R}};
    std::ofstream(f.out_dir + "/bench_summary.json") << summary.dump(2) << "\n";
    std::ofstream(f.out_dir + "/manifest.json")
        << manifest_json("bench", f, last_fit).dump(2) << "\n";

    std::printf("%s k=%d sigma=%.2f  MAD %.2f (%.2f)  MCIW %.1f  CP %.2f  TCPU %.0fs\n",
                f.trend.c_str(), f.order, f.sigma, mad_mean, mad_sd, mciw_sum / R, cp_sum / R,
                tcpu_sum / R);
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
    std::ifstream in(config_path);
    if (!in) throw ParseError("cannot open " + config_path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw ParseError(std::string("simulate config: ") + e.what());
    }
    const TrendKind kind = trend_from_name(cfg.at("trend").get<std::string>());
    const double sigma = cfg.at("sigma").get<double>();
    const int n = cfg.at("n").get<int>();
    const std::string grid_kind = cfg.value("grid", "unit");
    const std::uint64_t seed = cfg.value("seed", 0ULL);
    Vector grid;
    if (grid_kind == "unit") {
        grid = default_grid(kind, n);
    } else if (grid_kind == "uniform_random") {
        grid = uniform_random_grid(kind, n, seed ^ 0x5eedULL);
    } else {
        throw InvalidConfig("grid must be \"unit\" or \"uniform_random\"");
    }
    const TrendData data = simulate(grid, generate_trend(kind, grid), sigma, seed);
    save_csv_file(out_path, data);
    std::cout << "wrote " << data.m << " observations to " << out_path << "\n";
    return 0;
}

int cmd_project(const std::string& input_path, const std::string& out_path) {
    json req;
    try {
        if (input_path == "-") {
            std::cin >> req;
        } else {
            std::ifstream in(input_path);
            if (!in) throw ParseError("cannot open " + input_path);
            in >> req;
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("project input: ") + e.what());
    }
    const std::string kind = req.at("kind").get<std::string>();
    const std::vector<double> theta_v = req.at("theta").get<std::vector<double>>();
    const double alpha = req.at("alpha").get<double>();
    const Vector theta = Eigen::Map<const Vector>(theta_v.data(),
                                                  static_cast<Eigen::Index>(theta_v.size()));

    Projection p;
    if (kind == "L1") {
        p = project_epi_l1(theta, alpha);
    } else if (kind == "TV1D") {
        const int ns = static_cast<int>(theta.size());
        Matrix pseudo(std::max(ns - 1, 0), ns);
        if (ns >= 2) {
            Vector col = Vector::Zero(ns - 1);
            for (int j = 0; j < ns; ++j) {
                col.setZero();
                if (j < ns - 1) col[j] = -1.0;
                if (j > 0) col[j - 1] = 1.0;
                pseudo.col(j) = solve_diff_gram(col);
            }
        }
        p = project_epi_tv(theta, alpha, pseudo);
    } else if (kind == "ShapeRestricted") {
        const std::vector<double> grid = req.at("grid").get<std::vector<double>>();
        const int order = req.value("order", 2);
        ShapeSpec shape;
        if (req.contains("shape")) {
            if (req["shape"].is_string()) {
                shape = parse_shape(req["shape"].get<std::string>());
            } else {
                const std::string mono = req["shape"].value("monotone", "none");
                const std::string curv = req["shape"].value("curvature", "none");
                if (mono == "increasing") shape.monotone = Monotone::increasing;
                else if (mono == "decreasing") shape.monotone = Monotone::decreasing;
                else if (mono != "none") throw InvalidConfig("unknown monotone: " + mono);
                if (curv == "convex") shape.curvature = Curvature::convex;
                else if (curv == "concave") shape.curvature = Curvature::concave;
                else if (curv != "none") throw InvalidConfig("unknown curvature: " + curv);
            }
        }
        DiffOperator diff(grid, order);
        p = project_shape_restricted(theta, alpha, diff, shape);
    } else {
        throw InvalidConfig("kind must be L1, TV1D or ShapeRestricted");
    }

    json out;
    out["point"] = std::vector<double>(p.point.data(), p.point.data() + p.point.size());
    out["alpha"] = p.alpha;
    out["distance_sq"] = p.distance_sq;
    out["iterations"] = p.iterations;
    if (out_path.empty() || out_path == "-") {
        std::cout << out.dump(2) << "\n";
    } else {
        std::ofstream(out_path) << out.dump(2) << "\n";
    }
    return 0;
}

int cmd_thin(const std::string& input, int bins, const std::string& out_path) {
    const TrendData data = load_csv_file(input);
    const ThinningResult t = thin(data, bins);
    save_csv_file(out_path, t.data);
    std::cout << "thinned " << data.n() << " locations into " << t.data.n()
              << " (interval width " << t.interval_width << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian l1 trend filtering via proximal MCMC"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    FitFlags fit_flags;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model to a two-column x,y CSV");
    fit_cmd->add_option("input", fit_flags.input, "input CSV")->required();
    fit_cmd->add_option("--out", fit_flags.out_dir, "output directory");
    fit_cmd->add_flag("--save-draws", fit_flags.save_draws, "write draws.bin");
    add_model_flags(fit_cmd, fit_flags);

    BenchFlags bench_flags;
    auto* bench_cmd = app.add_subcommand("bench", "replicate simulation benchmark");
    bench_cmd->add_option("--trend", bench_flags.trend, "trend name")->required();
    bench_cmd->add_option("--sigma", bench_flags.sigma, "noise level");
    bench_cmd->add_option("--n", bench_flags.n, "grid length");
    bench_cmd->add_option("--replicates", bench_flags.replicates, "number of replicates");
    bench_cmd->add_option("--out", bench_flags.out_dir, "output directory");
    add_model_flags(bench_cmd, bench_flags);

    std::string sim_config, sim_out = "data.csv";
    auto* sim_cmd = app.add_subcommand("simulate", "generate noisy trend data");
    sim_cmd->add_option("--config", sim_config, "JSON {trend, sigma, n, grid, seed}")->required();
    sim_cmd->add_option("--out", sim_out, "output CSV");

    std::string proj_in, proj_out;
    auto* proj_cmd = app.add_subcommand("project", "epigraph / shape projections");
    proj_cmd->add_option("--input", proj_in, "JSON request (- for stdin)")->required();
    proj_cmd->add_option("--out", proj_out, "output JSON (default stdout)");

    std::string thin_in, thin_out = "thinned.csv";
    int thin_bins = 100;
    auto* thin_cmd = app.add_subcommand("thin", "merge grid locations into bins");
    thin_cmd->add_option("--input", thin_in, "input CSV")->required();
    thin_cmd->add_option("--bins", thin_bins, "bin count");
    thin_cmd->add_option("--out", thin_out, "output CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit_cmd) return cmd_fit(fit_flags);
        if (*bench_cmd) return cmd_bench(bench_flags);
        if (*sim_cmd) return cmd_simulate(sim_config, sim_out);
        if (*proj_cmd) return cmd_project(proj_in, proj_out);
        if (*thin_cmd) return cmd_thin(thin_in, thin_bins, thin_out);
    } catch (const Error& e) {
        json err = {{"error", error_name(e)}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json err = {{"error", "Error"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
