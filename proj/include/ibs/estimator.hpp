#pragma once

// Monte-Carlo estimation of P_B(t), the resistance function
// G(B) = 2^s * t * 3/xi_bar, attack success probability 1-(1-p)^r, required
// output counts, and average-case runtime extrapolation for oracle backdoors.
//
// Determinism contract: xi for a given alpha is a pure function of
// (formula, B, budget, solver_seed) — the per-subproblem solver seed is
// derived from (gamma, beta), never from the sample index — so a sampled
// xi_bar estimates exactly the exhaustive-alpha value, and outcomes do not
// depend on evaluation order or worker count.

#include <cmath>

#include "ibs/sat.hpp"

#include "json.hpp"

namespace ibs {

/// A point chi in E^n designating B as a subset of the formula's inputs X.
struct Backdoor {
    BitVec chi;

    size_t size() const { return chi.popcount(); }

    /// Formula variables of B, in X order.
    std::vector<int> vars(const VarRoles& roles) const {
        if (chi.size() != roles.inputs.size())
            throw CnfError("Backdoor: chi length != |X|");
        std::vector<int> out;
        for (size_t i = 0; i < chi.size(); ++i)
            if (chi.get(i)) out.push_back(roles.inputs[i]);
        return out;
    }

    /// beta(alpha): projection of alpha onto B.
    BitVec project(const BitVec& alpha) const {
        if (alpha.size() != chi.size()) throw CnfError("Backdoor: alpha length != |X|");
        BitVec beta(size());
        size_t k = 0;
        for (size_t i = 0; i < chi.size(); ++i)
            if (chi.get(i)) beta.set(k++, alpha.get(i));
        return beta;
    }
};

struct SampleOutcome {
    BitVec alpha;
    bool solved_within_budget = false;  // xi
    Verdict verdict = Verdict::BUDGET_EXCEEDED;
    SolveCost cost;
};

struct ResistanceEstimate {
    BitVec chi;
    size_t s = 0;
    SolveBudget budget;
    uint64_t sample_size = 0;
    uint64_t successes = 0;
    double xi_bar = 0.0;
    double g_value = std::numeric_limits<double>::quiet_NaN();  // +inf sentinel allowed
    double std_error = 0.0;
    uint64_t sample_seed = 0;
    uint64_t solver_seed = 0;
    double wall_seconds = 0.0;
};

struct EstimatorOptions {
    SolveBudget budget = SolveBudget::conflicts(1000);
    uint64_t sample_size = 1000;   // N; search default per protocol
    uint64_t sample_seed = 0;
    uint64_t solver_seed = 1;
    double p_min = 0.05;           // reliability floor; below it G = +inf
    int workers = 1;
};

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Sample j of an i.i.d. uniform stream over {0,1}^n; depends only on
/// (n, seed, j), so samples may be evaluated in any order.
inline BitVec sample_input(size_t n, uint64_t seed, uint64_t j) {
    Rng rng(mix64(seed, j));
    return BitVec::random(n, rng);
}

inline std::vector<BitVec> sample_inputs(size_t n, uint64_t count, uint64_t seed) {
    if (count < 1) throw CnfError("sample_inputs: N must be >= 1");
    std::vector<BitVec> out;
    out.reserve(count);
    for (uint64_t j = 0; j < count; ++j) out.push_back(sample_input(n, seed, j));
    return out;
}

// ---------------------------------------------------------------------------
// Per-sample evaluation
// ---------------------------------------------------------------------------

/// Seed for the solver run on subproblem C_f[gamma/Y, beta/B]: a function of
/// the subproblem only. Shared by the estimator and the attack executor.
inline uint64_t subproblem_solver_seed(uint64_t base, const BitVec& gamma, const BitVec& beta) {
    return mix64(base, mix64(gamma.hash(), beta.hash()));
}

/// Forward evaluation gamma = f(alpha) through the CNF: unit propagation from
/// X = alpha must fix all output variables (holds for arc-consistent gate
/// encodings). Throws if roles are missing or propagation leaves Y open.
inline BitVec forward_outputs(const CnfFormula& formula, const BitVec& alpha) {
    const auto& roles = formula.roles();
    if (roles.inputs.empty() || roles.outputs.empty())
        throw CnfError("forward_outputs: formula lacks input/output roles");
    UnitPropagator up(formula);
    if (!up.propagate(Assignment::over(roles.inputs, alpha)))
        throw CnfError("forward_outputs: conflict while evaluating f(alpha)");
    return up.project(roles.outputs);
}

/// One Monte-Carlo observation: gamma = f(alpha), beta = alpha|B, then solve
/// C_f[gamma/Y, beta/B] under the budget. xi = 1 iff SAT within budget; any
/// returned model is re-verified to project onto a true preimage.
inline SampleOutcome evaluate_sample(const CnfFormula& formula, const Backdoor& backdoor,
                                     const BitVec& alpha, const SolveBudget& budget,
                                     uint64_t solver_seed = 1) {
    const auto& roles = formula.roles();
    BitVec gamma = forward_outputs(formula, alpha);
    BitVec beta = backdoor.project(alpha);
    Assignment assumptions = Assignment::over(roles.outputs, gamma)
                                 .merged(Assignment::over(backdoor.vars(roles), beta));
    SolveResult r = solve(formula, assumptions, budget,
                          subproblem_solver_seed(solver_seed, gamma, beta));
    SampleOutcome out;
    out.alpha = alpha;
    out.verdict = r.verdict;
    out.cost = r.cost;
    out.solved_within_budget = r.verdict == Verdict::SAT;
    if (r.model) {
        BitVec alpha_prime(roles.inputs.size());
        for (size_t i = 0; i < roles.inputs.size(); ++i)
            alpha_prime.set(i, r.model->get(size_t(roles.inputs[i] - 1)));
        if (forward_outputs(formula, alpha_prime) != gamma)
            throw CnfError("internal: model does not project to a preimage of gamma");
    }
    return out;
}

// ---------------------------------------------------------------------------
// xi_bar and the resistance function
// ---------------------------------------------------------------------------

/// Sample mean xi_bar over N observations (Monte-Carlo estimate of P_B(t)).
/// Reproducible per (sample_seed, solver_seed) under any worker count.
inline ResistanceEstimate estimate_p(const CnfFormula& formula, const Backdoor& backdoor,
                                     const EstimatorOptions& opt) {
    if (opt.sample_size < 1) throw CnfError("estimate_p: N must be >= 1");
    opt.budget.validate();
    auto t0 = std::chrono::steady_clock::now();
    size_t n = formula.roles().inputs.size();
    std::vector<uint8_t> xi(opt.sample_size, 0);
    parallel_for(opt.sample_size, opt.workers, [&](size_t j) {
        BitVec alpha = sample_input(n, opt.sample_seed, j);
        xi[j] = evaluate_sample(formula, backdoor, alpha, opt.budget, opt.solver_seed)
                    .solved_within_budget
                    ? 1
                    : 0;
    });
    ResistanceEstimate est;
    est.chi = backdoor.chi;
    est.s = backdoor.size();
    est.budget = opt.budget;
    est.sample_size = opt.sample_size;
    est.sample_seed = opt.sample_seed;
    est.solver_seed = opt.solver_seed;
    for (size_t j = 0; j < xi.size(); ++j) est.successes += xi[j];
    est.xi_bar = double(est.successes) / double(opt.sample_size);
    est.std_error = std::sqrt(est.xi_bar * (1.0 - est.xi_bar) / double(opt.sample_size));
    est.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return est;
}

/// G(B) = 2^s * t * 3/xi_bar in budget units; +inf when xi_bar = 0 or below
/// the reliability floor p_min.
inline double resistance_value(size_t s, double t, double xi_bar, double p_min = 0.0) {
    if (xi_bar <= 0.0 || xi_bar < p_min) return std::numeric_limits<double>::infinity();
    return std::pow(2.0, double(s)) * t * 3.0 / xi_bar;
}

inline ResistanceEstimate resistance(const CnfFormula& formula, const Backdoor& backdoor,
                                     const EstimatorOptions& opt) {
    ResistanceEstimate est = estimate_p(formula, backdoor, opt);
    est.g_value = resistance_value(est.s, opt.budget.limit, est.xi_bar, opt.p_min);
    return est;
}

/// Exhaustive-alpha value of P_B(t) (all 2^n inputs). Guarded to n <= 20.
inline double exhaustive_p(const CnfFormula& formula, const Backdoor& backdoor,
                           const SolveBudget& budget, uint64_t solver_seed = 1,
                           int workers = 1) {
    size_t n = formula.roles().inputs.size();
    if (n > 20) throw CnfError("exhaustive_p: too many inputs");
    uint64_t total = 1ULL << n;
    std::vector<uint8_t> xi(total, 0);
    parallel_for(total, workers, [&](size_t a) {
        BitVec alpha = BitVec::from_u64(n, a);
        xi[a] = evaluate_sample(formula, backdoor, alpha, budget, solver_seed)
                    .solved_within_budget
                    ? 1
                    : 0;
    });
    uint64_t succ = 0;
    for (uint8_t b : xi) succ += b;
    return double(succ) / double(total);
}

// ---------------------------------------------------------------------------
// Attack size arithmetic (Eq. 3 and the 3/P rule)
// ---------------------------------------------------------------------------

/// P_r* = 1 - (1 - p)^r: success probability of the iterated attack.
inline double success_probability(double p, uint64_t r) {
    if (!(p >= 0.0 && p <= 1.0)) throw CnfError("success_probability: p outside [0,1]");
    if (r < 1) throw CnfError("success_probability: r must be >= 1");
    return 1.0 - std::pow(1.0 - p, double(r));
}

struct RequiredOutputs {
    uint64_t exact = 0;         // smallest r with 1-(1-p)^r >= target
    uint64_t paper_approx = 0;  // ceil(3/p), the 95%-target rule of thumb
};

inline RequiredOutputs required_outputs(double p, double target) {
    if (!(p > 0.0 && p <= 1.0))
        throw CnfError("required_outputs: need p in (0,1]");
    if (!(target > 0.0 && target < 1.0))
        throw CnfError("required_outputs: need target in (0,1)");
    RequiredOutputs r;
    r.paper_approx = uint64_t(std::ceil(3.0 / p));
    if (p == 1.0) {
        r.exact = 1;
        return r;
    }
    double est = std::log1p(-target) / std::log1p(-p);
    uint64_t k = est < 1.0 ? 1 : uint64_t(std::ceil(est));
    while (k > 1 && success_probability(p, k - 1) >= target) --k;
    while (success_probability(p, k) < target) ++k;
    r.exact = k;
    return r;
}

// ---------------------------------------------------------------------------
// NOBS runtime extrapolation
// ---------------------------------------------------------------------------

struct NobsEstimate {
    size_t backdoor_size = 0;
    uint64_t sample_size = 0;
    double mean_conflicts = 0.0;
    double mean_wall_seconds = 0.0;
    double total_conflicts_est = 0.0;     // mean * 2^|B|
    double total_wall_seconds_est = 0.0;  // mean * 2^|B|
    double stderr_conflicts_total = 0.0;
    double stderr_wall_total = 0.0;
};

/// Average solving cost over sampled beta in {0,1}^|B| extrapolated to all
/// 2^|B| subproblems. B may be any subset of the formula's variables.
inline NobsEstimate estimate_nobs_runtime(const CnfFormula& formula,
                                          const std::vector<int>& b_vars, uint64_t sample_size,
                                          uint64_t seed, SolveBudget budget = SolveBudget::unlimited(),
                                          uint64_t solver_seed = 1, int workers = 1) {
    if (sample_size < 1) throw CnfError("estimate_nobs_runtime: N must be >= 1");
    for (int v : b_vars)
        if (v < 1 || v > formula.num_vars())
            throw CnfError("estimate_nobs_runtime: variable out of range");
    size_t s = b_vars.size();
    std::vector<double> conf(sample_size), wall(sample_size);
    parallel_for(sample_size, workers, [&](size_t j) {
        Rng rng(mix64(seed, j));
        BitVec beta = BitVec::random(s, rng);
        Assignment a = Assignment::over(b_vars, beta);
        SolveResult r = solve(formula, a, budget,
                              mix64(solver_seed, beta.hash()));
        conf[j] = double(r.cost.conflicts);
        wall[j] = r.cost.wall_seconds;
    });
    auto mean_of = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        return m / double(v.size());
    };
    auto sd_of = [](const std::vector<double>& v, double m) {
        if (v.size() < 2) return 0.0;
        double acc = 0;
        for (double x : v) acc += (x - m) * (x - m);
        return std::sqrt(acc / double(v.size() - 1));
    };
    NobsEstimate est;
    est.backdoor_size = s;
    est.sample_size = sample_size;
    est.mean_conflicts = mean_of(conf);
    est.mean_wall_seconds = mean_of(wall);
    double scale = std::pow(2.0, double(s));
    est.total_conflicts_est = est.mean_conflicts * scale;
    est.total_wall_seconds_est = est.mean_wall_seconds * scale;
    est.stderr_conflicts_total =
        scale * sd_of(conf, est.mean_conflicts) / std::sqrt(double(sample_size));
    est.stderr_wall_total =
        scale * sd_of(wall, est.mean_wall_seconds) / std::sqrt(double(sample_size));
    return est;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json estimate_to_json(const ResistanceEstimate& e) {
    nlohmann::json j;
    j["chi"] = e.chi.to_hex();
    j["n"] = e.chi.size();
    j["s"] = e.s;
    j["N"] = e.sample_size;
    j["successes"] = e.successes;
    j["seed"] = e.sample_seed;
    j["solver_seed"] = e.solver_seed;
    j["budget_mode"] = e.budget.mode == SolveBudget::Mode::CONFLICTS ? "conflicts" : "seconds";
    j["budget_limit"] = e.budget.limit;
    j["xi_bar"] = e.xi_bar;
    if (std::isinf(e.g_value)) j["g_value"] = "inf";
    else j["g_value"] = e.g_value;
    j["stderr"] = e.std_error;
    j["wall_s"] = e.wall_seconds;
    return j;
}

inline ResistanceEstimate estimate_from_json(const nlohmann::json& j) {
    ResistanceEstimate e;
    size_t n = j.at("n").get<size_t>();
    e.chi = BitVec::from_hex(n, j.at("chi").get<std::string>());
    e.s = j.at("s").get<size_t>();
    e.sample_size = j.at("N").get<uint64_t>();
    e.successes = j.value("successes", uint64_t(0));
    e.sample_seed = j.at("seed").get<uint64_t>();
    e.solver_seed = j.value("solver_seed", uint64_t(1));
    e.budget.mode = j.at("budget_mode").get<std::string>() == "conflicts"
                        ? SolveBudget::Mode::CONFLICTS
                        : SolveBudget::Mode::WALL_SECONDS;
    e.budget.limit = j.at("budget_limit").get<double>();
    e.xi_bar = j.at("xi_bar").get<double>();
    const auto& g = j.at("g_value");
    e.g_value = g.is_string() ? std::numeric_limits<double>::infinity() : g.get<double>();
    e.std_error = j.at("stderr").get<double>();
    e.wall_seconds = j.value("wall_s", 0.0);
    return e;
}

}  // namespace ibs
