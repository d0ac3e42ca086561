// Command line front end: run analyses, list the built-in limit states,
// print exploration tables, and re-estimate from saved designs.
//
// Exit codes: 0 success, 2 configuration error, 3 evaluator error.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rarering/rarering.hpp"

namespace {

using namespace rarering;

std::string default_out_dir() {
    const char* env = std::getenv("RARERING_OUT");
    return env ? env : "";
}

std::string run_dir_name(const RunConfig& cfg) {
    std::string base = cfg.external_command.empty() ? cfg.benchmark : "external";
    return base + "-seed" + std::to_string(cfg.seed);
}

void print_run_line(const AnalysisResult& res) {
    std::string name = res.config.external_command.empty() ? res.config.benchmark
                                                           : "external";
    double total = res.rare_total();
    double cov = std::numeric_limits<double>::infinity();
    double best_p = -1.0;
    for (const auto& rec : res.final_estimates)
        if (rec.p_hat > best_p) { best_p = rec.p_hat; cov = rec.cov; }
    std::printf("%-14s seed=%-4llu n_sim=%-4zu stop=%-8s p_hat=%-14s cov=%s",
                name.c_str(), static_cast<unsigned long long>(res.config.seed),
                res.ed.size(), res.termination.c_str(),
                detail::format_double(total).c_str(),
                detail::format_double(cov).c_str());
    if (std::isfinite(res.reference_p_f) && res.reference_p_f > 0.0)
        std::printf(" ratio=%s", detail::format_double(total / res.reference_p_f).c_str());
    std::printf("\n");
    for (const auto& w : res.warnings)
        std::printf("  warning: %s\n", w.c_str());
}

int cmd_run(RunConfig cfg, int repeat, const std::string& out_dir,
            const std::string& format, bool force) {
    std::vector<AnalysisResult> results;
    for (int k = 0; k < repeat; ++k) {
        RunConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(k);
        AnalysisResult res = run_analysis(c);
        print_run_line(res);
        if (!out_dir.empty()) {
            std::string dir = out_dir + "/" + run_dir_name(c);
            emit_run(res, dir, format, force);
            std::printf("  artifacts: %s\n", dir.c_str());
        }
        results.push_back(std::move(res));
    }
    if (repeat > 1) std::printf("\n%s", summarize(results).c_str());
    return 0;
}

int cmd_list() {
    std::printf("%-14s %5s %14s  %s\n", "name", "dim", "p_f", "notes");
    for (const auto& b : benchmark_registry()) {
        std::string dim = b.fixed_dim ? std::to_string(b.fixed_dim) : "any";
        double pf = b.reference.p_f_for(b.fixed_dim ? b.fixed_dim : 2);
        std::printf("%-14s %5s %14s  %s\n", b.name.c_str(), dim.c_str(),
                    detail::format_double(pf).c_str(), b.reference.notes.c_str());
    }
    return 0;
}

int cmd_plan(int dim, int levels) {
    ExplorationPlan plan = build_plan(SpaceDim{dim}, levels, 1);
    std::printf("exploration plan, dim=%d\n", dim);
    std::printf("%5s %10s %8s %10s\n", "level", "p_out", "count", "radius");
    for (const auto& layer : plan.layers)
        std::printf("%5d %10.0e %8zu %10.2f\n", layer.level, layer.prob_outside,
                    layer.points.size(), layer.radius);
    return 0;
}

int cmd_estimate_only(const std::string& ed_path, long n_is, std::uint64_t seed,
                      int dots_per_seed, double fraction) {
    ExperimentalDesign ed = ed_path.size() > 5 && ed_path.substr(ed_path.size() - 5) == ".json"
                                ? ed_from_json(nlohmann::json::parse(read_text_file(ed_path)))
                                : read_ed_csv(ed_path);
    if (ed.indices_not_code(label_safe).empty()) {
        std::fprintf(stderr, "design %s has no rare points; nothing to estimate\n",
                     ed_path.c_str());
        return 2;
    }
    RngStream root(seed);
    RngStream screen_rng = root.child(0x73637265);
    RngStream node_rng = root.child(0x6e6f6465);
    SpaceDim dim(ed.dim());
    ScreeningResult screening = screen(screen_rng, ed, dots_per_seed);
    AnnulusBuildInfo annulus = build_annulus(screening, std::nullopt, dim, fraction);
    std::vector<int> interest;
    for (int c : ed.present_codes())
        if (c != label_safe) interest.push_back(c);
    GlobalEstimate est = global_is_estimate(node_rng, ed, annulus.annulus, n_is, interest);
    std::printf("design: %zu points, dim %d; ring [%s, %s]\n", ed.size(), dim.n_var,
                detail::format_double(annulus.annulus.inner_radius).c_str(),
                detail::format_double(annulus.annulus.outer_radius).c_str());
    std::printf("%6s %14s %12s %8s\n", "label", "p_hat", "cov", "hits");
    for (const auto& rec : est.records) {
        if (rec.label_code == label_safe) continue;
        std::printf("%6d %14s %12s %8ld\n", rec.label_code,
                    detail::format_double(rec.p_hat).c_str(),
                    detail::format_double(rec.cov).c_str(), rec.n_hits);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive rare-event probability estimation"};
    app.require_subcommand(1);

    RunConfig cfg;
    int repeat = 1;
    std::string out_dir = default_out_dir();
    std::string format = "csv";
    bool force = false;

    auto* run = app.add_subcommand("run", "run one analysis (or several seeds)");
    run->add_option("--benchmark", cfg.benchmark, "built-in limit state name");
    run->add_option("--command", cfg.external_command,
                    "external evaluator command (line protocol on stdin/stdout)");
    run->add_option("--dim", cfg.dim, "input dimension");
    run->add_option("--budget", cfg.budget, "maximum function evaluations");
    run->add_option("--seed", cfg.seed, "random seed");
    run->add_option("--n-is", cfg.n_is, "estimation nodes during the run");
    run->add_option("--n-is-final", cfg.n_is_final, "estimation nodes at the end");
    run->add_option("--estimate-every", cfg.estimate_every, "estimation cadence in steps");
    run->add_option("--stop-psi-ratio", cfg.stop_psi_ratio,
                    "stop when psi < ratio * current estimate");
    run->add_flag("--binary-only", cfg.binary_only, "discard raw outputs, keep labels");
    run->add_option("--dots-per-seed", cfg.dots_per_seed, "cloud size per rare point");
    run->add_option("--k-sensitivity", cfg.k_sensitivity, "safe neighbors per direction");
    run->add_option("--max-level", cfg.max_level, "deepest exploration level");
    run->add_option("--fraction", cfg.fraction, "outer-radius truncation fraction");
    run->add_option("--oversample", cfg.oversample, "direction pool oversampling factor");
    run->add_option("--repeat", repeat, "run this many consecutive seeds")
        ->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "artifact directory (default: $RARERING_OUT)");
    run->add_option("--format", format, "design snapshot format")
        ->check(CLI::IsMember({"csv", "json"}));
    run->add_flag("--force", force, "overwrite existing artifacts");

    auto* list = app.add_subcommand("list-benchmarks", "list built-in limit states");

    int plan_dim = 2, plan_levels = 15;
    auto* plan = app.add_subcommand("plan", "print the exploration table");
    plan->add_option("--dim", plan_dim, "input dimension")->check(CLI::PositiveNumber);
    plan->add_option("--levels", plan_levels, "number of levels")->check(CLI::PositiveNumber);

    std::string ed_path;
    long eo_n_is = 100000;
    std::uint64_t eo_seed = 1;
    int eo_dots = 1000;
    double eo_fraction = 1e-4;
    auto* est = app.add_subcommand("estimate-only", "re-estimate from a saved design");
    est->add_option("--ed", ed_path, "design file (.csv or .json)")->required();
    est->add_option("--n-is", eo_n_is, "estimation nodes");
    est->add_option("--seed", eo_seed, "random seed");
    est->add_option("--dots-per-seed", eo_dots, "screening cloud size per rare point");
    est->add_option("--fraction", eo_fraction, "outer-radius truncation fraction");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return cmd_run(cfg, repeat, out_dir, format, force);
        if (*list) return cmd_list();
        if (*plan) return cmd_plan(plan_dim, plan_levels);
        if (*est) return cmd_estimate_only(ed_path, eo_n_is, eo_seed, eo_dots, eo_fraction);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
