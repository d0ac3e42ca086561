#pragma once

// Sequential analysis loop: select the best candidate, evaluate the
// performance function there, refresh the estimates, and stop on budget
// or once the probability bite of the next candidate becomes negligible
// next to the current estimate.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rarering/benchmarks.hpp"
#include "rarering/candidate_engine.hpp"
#include "rarering/classifier.hpp"
#include "rarering/estimator.hpp"
#include "rarering/exploration_plan.hpp"
#include "rarering/gaussian_geometry.hpp"
#include "rarering/rng.hpp"
#include "rarering/sensitivity.hpp"

namespace rarering {

struct RunConfig {
    std::string benchmark = "wavy_circle";
    std::string external_command;        // nonempty: evaluate through a subprocess
    int dim = 2;
    long budget = 200;
    std::uint64_t seed = 1;
    long n_is = 10000;                   // in-loop estimation nodes
    long n_is_final = 100000;            // final estimation nodes
    int estimate_every = 5;              // cadence after the first rare point
    double stop_psi_ratio = 0.01;
    bool binary_only = false;            // strip raw values before the driver sees them
    int dots_per_seed = 1000;
    int k_sensitivity = 5;
    int max_level = 15;
    double fraction = 1e-4;              // truncation rule for the outer radius
    double oversample = 7.0;
};

inline void validate(const RunConfig& cfg) {
    if (cfg.benchmark.empty() && cfg.external_command.empty())
        throw std::invalid_argument("config: need a benchmark name or an external command");
    if (cfg.dim < 1) throw std::invalid_argument("config: need dim >= 1");
    if (cfg.budget < 1) throw std::invalid_argument("config: need budget >= 1");
    if (cfg.n_is < 1 || cfg.n_is_final < 1)
        throw std::invalid_argument("config: need n_is >= 1");
    if (cfg.estimate_every < 1) throw std::invalid_argument("config: need estimate_every >= 1");
    if (!(cfg.stop_psi_ratio > 0.0)) throw std::invalid_argument("config: need stop_psi_ratio > 0");
    if (cfg.dots_per_seed < 1) throw std::invalid_argument("config: need dots_per_seed >= 1");
    if (cfg.k_sensitivity < 1) throw std::invalid_argument("config: need k_sensitivity >= 1");
    if (cfg.max_level < 1) throw std::invalid_argument("config: need max_level >= 1");
    if (!(cfg.fraction > 0.0) || !(cfg.fraction < 1.0))
        throw std::invalid_argument("config: need fraction in (0,1)");
    if (!(cfg.oversample >= 1.0)) throw std::invalid_argument("config: need oversample >= 1");
}

// Anything that can be asked for the outcome at a point. Implementations
// must map every internal failure to the no-result label instead of
// throwing; only unrecoverable setup errors may throw.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvalOutcome evaluate(std::span<const double> x) = 0;
    virtual std::vector<std::string> label_names() const {
        return {"safe", "failure", "no_result"};
    }
    virtual std::string describe() const = 0;
};

class BenchmarkEvaluator : public Evaluator {
public:
    BenchmarkEvaluator(Benchmark bench, bool strip_raw)
        : bench_(std::move(bench)), strip_raw_(strip_raw) {}

    EvalOutcome evaluate(std::span<const double> x) override {
        EvalOutcome o = bench_.evaluate(x);
        if (strip_raw_) o.raw = std::numeric_limits<double>::quiet_NaN();
        return o;
    }

    std::string describe() const override { return "benchmark:" + bench_.name; }
    const Benchmark& benchmark() const { return bench_; }

private:
    Benchmark bench_;
    bool strip_raw_;
};

// Line protocol child process: one whitespace-separated coordinate line in,
// one label token per line out. Unknown tokens become new event codes in
// order of first appearance. A dead or silent child yields no-result labels
// from then on; only failure to spawn at all throws.
class ExternalEvaluator : public Evaluator {
public:
    explicit ExternalEvaluator(std::string command) : command_(std::move(command)) {
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
            throw std::runtime_error("external evaluator: pipe failed");
        pid_ = ::fork();
        if (pid_ < 0) throw std::runtime_error("external evaluator: fork failed");
        if (pid_ == 0) {
            ::dup2(to_child[0], 0);
            ::dup2(from_child[1], 1);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_ = ::fdopen(to_child[1], "w");
        out_ = ::fdopen(from_child[0], "r");
        if (!in_ || !out_) throw std::runtime_error("external evaluator: fdopen failed");
    }

    ExternalEvaluator(const ExternalEvaluator&) = delete;
    ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

    ~ExternalEvaluator() override {
        if (in_) ::fclose(in_);
        if (out_) ::fclose(out_);
        if (pid_ > 0) {
            int status = 0;
            ::waitpid(pid_, &status, 0);
        }
    }

    EvalOutcome evaluate(std::span<const double> x) override {
        if (dead_) return {std::numeric_limits<double>::quiet_NaN(), label_no_result};
        char num[40];
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::snprintf(num, sizeof num, "%.17g", x[i]);
            if (i > 0) std::fputc(' ', in_);
            std::fputs(num, in_);
        }
        std::fputc('\n', in_);
        if (std::fflush(in_) != 0) return mark_dead("write to child failed");
        char line[4096];
        if (!std::fgets(line, sizeof line, out_)) return mark_dead("child closed its output");
        std::string token;
        for (const char* p = line; *p; ++p) {
            if (*p == ' ' || *p == '\t' || *p == '\n' || *p == '\r') {
                if (!token.empty()) break;
                continue;
            }
            token += *p;
        }
        if (token.empty()) return mark_dead("child produced an empty line");
        return {std::numeric_limits<double>::quiet_NaN(), code_for(token)};
    }

    std::vector<std::string> label_names() const override { return names_; }
    std::string describe() const override { return "external:" + command_; }
    bool dead() const { return dead_; }
    const std::string& fault() const { return fault_; }

private:
    EvalOutcome mark_dead(const char* why) {
        dead_ = true;
        fault_ = why;
        return {std::numeric_limits<double>::quiet_NaN(), label_no_result};
    }

    int code_for(const std::string& token) {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == token) return static_cast<int>(i);
        names_.push_back(token);
        return static_cast<int>(names_.size()) - 1;
    }

    std::string command_;
    pid_t pid_ = -1;
    std::FILE* in_ = nullptr;
    std::FILE* out_ = nullptr;
    bool dead_ = false;
    std::string fault_;
    std::vector<std::string> names_{"safe", "failure", "no_result"};
};

inline std::shared_ptr<Evaluator> make_evaluator(const RunConfig& cfg) {
    if (!cfg.external_command.empty())
        return std::make_shared<ExternalEvaluator>(cfg.external_command);
    const Benchmark& bench = find_benchmark(cfg.benchmark);
    if (!bench.accepts_dim(cfg.dim))
        throw std::invalid_argument("config: benchmark " + bench.name + " requires dim "
                                    + std::to_string(bench.fixed_dim));
    return std::make_shared<BenchmarkEvaluator>(bench, cfg.binary_only);
}

struct StepTrace {
    long n_sim = 0;               // design size after this step
    double psi = 0.0;             // score of the selected candidate
    CandidateOrigin origin = CandidateOrigin::exploration;
    int level = -1;               // exploration layer, if applicable
    int code = label_safe;        // observed label
    std::size_t pool_size = 0;
    std::size_t pool_exploitation = 0;
    std::vector<double> point;
};

struct AnalysisResult {
    RunConfig config;
    int dim = 0;
    ExperimentalDesign ed{1};
    ConvergenceHistory history;
    std::vector<StepTrace> steps;
    std::vector<EstimateRecord> final_estimates;      // global ring, non-safe labels
    std::vector<EstimateRecord> localized_estimates;  // per non-safe label
    std::map<int, SensitivityResult> sensitivities;   // keyed by label code
    std::vector<std::string> label_names;
    AnnulusSpec final_annulus;
    std::string termination;                          // "budget" or "psi_stop"
    std::vector<std::string> warnings;
    double reference_p_f = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> reference_s_squared;

    double rare_total() const {
        double s = 0.0;
        for (const auto& r : final_estimates) s += r.p_hat;
        return s;
    }

    const EstimateRecord* final_for(int code) const {
        for (const auto& r : final_estimates)
            if (r.label_code == code) return &r;
        return nullptr;
    }
};

namespace detail {

inline constexpr std::uint64_t stream_dots = 0x646f7473;    // per-step clouds
inline constexpr std::uint64_t stream_screen = 0x73637265;  // screening clouds
inline constexpr std::uint64_t stream_nodes = 0x6e6f6465;   // estimation nodes

// Duplicating a design point would add no information and break the
// surrogate's strict-distance assumptions, so such candidates never win.
inline constexpr double min_candidate_dist = 1e-12;

}  // namespace detail

class AnalysisRun {
public:
    AnalysisRun(RunConfig cfg, std::shared_ptr<Evaluator> evaluator)
        : cfg_(checked(std::move(cfg))),
          evaluator_(std::move(evaluator)),
          dim_(cfg_.dim),
          root_(cfg_.seed),
          plan_(build_plan(dim_, cfg_.max_level, cfg_.seed, cfg_.oversample)),
          ed_(dim_.n_var) {
        exploit_cfg_.dots_per_seed = cfg_.dots_per_seed;
        sens_cfg_.k_neighbors = cfg_.k_sensitivity;
        evaluate_at_origin();
    }

    explicit AnalysisRun(const RunConfig& cfg) : AnalysisRun(cfg, make_evaluator(cfg)) {}

    const RunConfig& config() const { return cfg_; }
    const ExperimentalDesign& ed() const { return ed_; }
    const ExplorationPlan& plan() const { return plan_; }
    const ConvergenceHistory& history() const { return history_; }
    const std::vector<StepTrace>& steps() const { return steps_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    bool finished() const { return !termination_.empty(); }
    const std::string& termination() const { return termination_; }
    double rare_total_estimate() const { return last_rare_total_; }

    // One selection + evaluation. Returns false once the run has stopped.
    bool step() {
        if (finished()) return false;
        if (static_cast<long>(ed_.size()) >= cfg_.budget) {
            termination_ = "budget";
            return false;
        }

        std::size_t best = 0;
        CandidatePool pool(dim_.n_var);
        if (!select_candidate(pool, best)) {
            termination_ = "budget";  // nothing left to evaluate anywhere
            warnings_.push_back("candidate supply exhausted before budget");
            return false;
        }

        StepTrace trace;
        trace.psi = pool.psi[best];
        trace.origin = pool.origin[best];
        trace.level = pool.level[best];
        trace.pool_size = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i)
            trace.pool_exploitation += pool.origin[i] == CandidateOrigin::exploitation;
        std::span<const double> x = pool.coords.row(best);
        trace.point.assign(x.begin(), x.end());

        EvalOutcome outcome = evaluator_->evaluate(x);
        std::optional<double> raw;
        if (std::isfinite(outcome.raw)) raw = outcome.raw;
        ed_.add_point(x, outcome.code, raw);
        if (pool.origin[best] == CandidateOrigin::exploration)
            plan_.consume(pool.level[best], static_cast<std::size_t>(pool.point_index[best]));

        trace.code = outcome.code;
        trace.n_sim = static_cast<long>(ed_.size());
        steps_.push_back(std::move(trace));

        bool new_rare = outcome.code != label_safe;
        any_rare_ = any_rare_ || new_rare;
        ++steps_since_estimate_;
        if (any_rare_ && (new_rare || steps_since_estimate_ >= cfg_.estimate_every))
            refresh_estimate(cfg_.n_is);

        double psi = steps_.back().psi;
        if (have_estimate_ && any_rare_ && last_rare_total_ > 0.0
            && psi < cfg_.stop_psi_ratio * last_rare_total_) {
            termination_ = "psi_stop";
            return false;
        }
        if (static_cast<long>(ed_.size()) >= cfg_.budget) {
            termination_ = "budget";
            return false;
        }
        return true;
    }

    AnalysisResult finish() {
        if (termination_.empty()) termination_ = "budget";
        AnalysisResult res;
        res.config = cfg_;
        res.dim = dim_.n_var;
        res.label_names = evaluator_->label_names();
        res.warnings = warnings_;

        if (any_rare_) {
            refresh_estimate(cfg_.n_is_final);
            res.final_estimates = rare_records_;
            res.localized_estimates = localized_records_;
            res.sensitivities = sensitivities_;
            res.final_annulus = last_annulus_;
        } else {
            EstimateRecord empty;
            empty.label_code = label_failure;
            empty.p_hat = 0.0;
            empty.variance = 0.0;
            empty.cov = std::numeric_limits<double>::infinity();
            empty.n_is = 0;
            res.final_estimates.push_back(empty);
        }
        res.ed = ed_;
        res.history = history_;
        res.steps = steps_;
        res.termination = termination_;
        attach_reference(res);
        return res;
    }

private:
    static RunConfig checked(RunConfig cfg) {
        validate(cfg);
        return cfg;
    }

    void evaluate_at_origin() {
        std::vector<double> origin(static_cast<std::size_t>(dim_.n_var), 0.0);
        EvalOutcome outcome = evaluator_->evaluate(origin);
        std::optional<double> raw;
        if (std::isfinite(outcome.raw)) raw = outcome.raw;
        ed_.add_point(origin, outcome.code, raw);
        any_rare_ = outcome.code != label_safe;
        if (static_cast<long>(ed_.size()) >= cfg_.budget) termination_ = "budget";
    }

    // Fills `pool` and picks the best candidate that would not duplicate a
    // design point. Enriches the plan when the pool runs dry.
    bool select_candidate(CandidatePool& pool, std::size_t& best) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            RngStream dots = root_.child(detail::stream_dots, static_cast<std::uint64_t>(steps_.size()));
            pool = assemble_pool(plan_, ed_, dots, exploit_cfg_);
            score_psi(ed_, pool);
            bool found = false;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (pool.nearest_dist[i] < detail::min_candidate_dist) continue;
                if (!found) { best = i; found = true; continue; }
                if (pool.psi[i] > pool.psi[best]) { best = i; continue; }
                if (pool.psi[i] == pool.psi[best]
                    && pool.origin[i] == CandidateOrigin::exploitation
                    && pool.origin[best] == CandidateOrigin::exploration)
                    best = i;
            }
            if (found) return true;
            int deepest = 0;
            for (const auto& l : plan_.layers) deepest = std::max(deepest, l.level);
            if (deepest >= 400) return false;
            enrich_plan(plan_, 1);
            warnings_.push_back("candidate pool exhausted; exploration deepened to level "
                                + std::to_string(deepest + 1));
        }
        return false;
    }

    void refresh_estimate(long n_is) {
        RngStream screen_rng = root_.child(detail::stream_screen,
                                           static_cast<std::uint64_t>(estimate_events_));
        RngStream node_rng = root_.child(detail::stream_nodes,
                                         static_cast<std::uint64_t>(estimate_events_));
        ++estimate_events_;
        steps_since_estimate_ = 0;

        ScreeningResult screening = screen(screen_rng, ed_, cfg_.dots_per_seed);
        std::optional<double> prev;
        if (have_estimate_ && last_rare_total_ > 0.0) prev = last_rare_total_;
        AnnulusBuildInfo annulus = build_annulus(screening, prev, dim_, cfg_.fraction);
        if (annulus.widened)
            warnings_.push_back("estimation annulus widened at n_sim="
                                + std::to_string(ed_.size()));

        std::vector<int> interest;
        for (int c : ed_.present_codes())
            if (c != label_safe) interest.push_back(c);
        GlobalEstimate global = global_is_estimate(node_rng, ed_, annulus.annulus,
                                                   n_is, interest);

        rare_records_.clear();
        double total = 0.0;
        for (const auto& rec : global.records) {
            if (rec.label_code == label_safe) continue;
            rare_records_.push_back(rec);
            total += rec.p_hat;
        }
        last_rare_total_ = total;
        last_annulus_ = annulus.annulus;
        have_estimate_ = true;

        localized_records_.clear();
        for (int c : interest)
            localized_records_.push_back(localized_is_estimate(screening, c, dim_));

        refresh_sensitivities(global);

        long n_sim = static_cast<long>(ed_.size());
        long n_rare = static_cast<long>(ed_.size() - ed_.count_of(label_safe));
        double psi = steps_.empty() ? 0.0 : steps_.back().psi;
        if (history_.rows.empty() || history_.rows.back().n_sim != n_sim)
            record_history(history_, n_sim, psi, rare_records_, n_rare);
    }

    void refresh_sensitivities(const GlobalEstimate& global) {
        sensitivities_.clear();
        std::size_t n = global.nodes.size();
        std::vector<char> safe_mask(n, 0);
        std::size_t n_safe = 0;
        for (std::size_t i = 0; i < n; ++i) {
            safe_mask[i] = global.node_codes[i] == label_safe;
            n_safe += safe_mask[i] != 0;
        }
        if (n_safe == 0) return;  // nothing to orient against
        std::vector<char> rare_mask(n, 0);
        for (const auto& rec : rare_records_) {
            for (std::size_t i = 0; i < n; ++i)
                rare_mask[i] = global.node_codes[i] == rec.label_code;
            sensitivities_[rec.label_code] =
                sensitivity_indices(global.nodes, rare_mask, safe_mask, sens_cfg_);
        }
    }

    void attach_reference(AnalysisResult& res) const {
        if (cfg_.external_command.empty() && !cfg_.benchmark.empty()) {
            const Benchmark& bench = find_benchmark(cfg_.benchmark);
            res.reference_p_f = bench.reference.p_f_for(dim_.n_var);
            res.reference_s_squared = bench.reference.s_squared;
        }
    }

    RunConfig cfg_;
    std::shared_ptr<Evaluator> evaluator_;
    SpaceDim dim_;
    RngStream root_;
    ExplorationPlan plan_;
    ExperimentalDesign ed_;
    ExploitationConfig exploit_cfg_;
    SensitivityConfig sens_cfg_;

    ConvergenceHistory history_;
    std::vector<StepTrace> steps_;
    std::vector<std::string> warnings_;
    std::vector<EstimateRecord> rare_records_;
    std::vector<EstimateRecord> localized_records_;
    std::map<int, SensitivityResult> sensitivities_;
    AnnulusSpec last_annulus_;
    std::string termination_;
    bool any_rare_ = false;
    bool have_estimate_ = false;
    double last_rare_total_ = 0.0;
    int steps_since_estimate_ = 0;
    long estimate_events_ = 0;
};

inline AnalysisResult run_analysis(const RunConfig& cfg) {
    AnalysisRun run(cfg);
    while (run.step()) {}
    return run.finish();
}

}  // namespace rarering
