#pragma once

// Elementary and iterated guess-and-determine attacks driven by an inverse
// backdoor set. Recovered keys are always re-verified through the circuit
// evaluator; solver output alone is never trusted.

#include "ibs/circuit.hpp"
#include "ibs/estimator.hpp"

namespace ibs {

class AttackError : public std::runtime_error {
  public:
    explicit AttackError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AttackInstance {
    BitVec gamma;
    std::optional<BitVec> hidden_alpha;  // evaluation mode only
};

/// r uniform hidden keys with their outputs; deterministic per seed.
inline std::vector<AttackInstance> generate_instances(const Circuit& circuit, uint64_t r,
                                                      uint64_t seed) {
    if (r < 1) throw AttackError("generate_instances: r must be >= 1");
    std::vector<AttackInstance> out;
    out.reserve(r);
    for (uint64_t j = 0; j < r; ++j) {
        AttackInstance inst;
        inst.hidden_alpha = sample_input(circuit.num_inputs(), seed, j);
        inst.gamma = circuit.evaluate(*inst.hidden_alpha);
        out.push_back(std::move(inst));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Guess enumeration order: a seeded pseudorandom permutation of [0, 2^s)
// (unbalanced Feistel, O(1) memory), so huge guess spaces need no stored
// shuffle and any prefix is reproducible.
// ---------------------------------------------------------------------------

inline uint64_t permute_guess_index(uint64_t i, size_t s, uint64_t seed) {
    if (s == 0) return 0;
    if (s == 1) return i ^ (mix64(seed, 0x9e1ULL) & 1);
    size_t wa = s / 2, wb = s - wa;
    uint64_t a = i & ((1ULL << wa) - 1);
    uint64_t b = i >> wa;
    for (uint64_t round = 0; round < 6; ++round) {
        a ^= mix64(seed, (round << 56) | b) & ((1ULL << wa) - 1);
        std::swap(a, b);
        std::swap(wa, wb);
    }
    return a | (b << wa);
}

// ---------------------------------------------------------------------------
// Attacks
// ---------------------------------------------------------------------------

struct AttackOptions {
    SolveBudget budget = SolveBudget::conflicts(1000);  // per-guess limit t
    uint64_t guess_order_seed = 0;
    uint64_t solver_seed = 1;
    uint64_t guess_cap = 1ULL << 24;
    int workers = 1;
};

struct GuessResult {
    bool solved = false;
    std::optional<BitVec> alpha;
    SolveCost cost;
};

/// Solves C_f[gamma/Y, beta/B] under the per-guess budget; on SAT extracts the
/// X-projection of the model and verifies f(alpha) = gamma via the circuit.
/// Uses the same per-subproblem solver seed as the estimator, so the outcome
/// on the correct guess beta(alpha) reproduces the estimator's xi exactly.
inline GuessResult try_guess(const CnfFormula& formula, const Circuit& circuit,
                             const Backdoor& backdoor, const BitVec& gamma,
                             const BitVec& beta, const SolveBudget& budget,
                             uint64_t solver_seed) {
    const auto& roles = formula.roles();
    Assignment assumptions = Assignment::over(roles.outputs, gamma)
                                 .merged(Assignment::over(backdoor.vars(roles), beta));
    SolveResult r = solve(formula, assumptions, budget,
                          subproblem_solver_seed(solver_seed, gamma, beta));
    GuessResult g;
    g.cost = r.cost;
    if (r.verdict != Verdict::SAT) return g;
    BitVec alpha(roles.inputs.size());
    for (size_t i = 0; i < roles.inputs.size(); ++i)
        alpha.set(i, r.model->get(size_t(roles.inputs[i] - 1)));
    if (circuit.evaluate(alpha) != gamma)
        throw AttackError("internal: solver model fails circuit verification");
    g.solved = true;
    g.alpha = alpha;
    return g;
}

struct ElementaryResult {
    bool found = false;
    BitVec alpha;                 // valid when found
    uint64_t guesses_tried = 0;   // seeded-order prefix length
    uint64_t winning_guess_index = 0;
    SolveCost totals;             // summed over the seeded-order prefix
};

/// Def.-4 attack: iterate beta over {0,1}^s in seeded pseudorandom order,
/// interrupting each solve at the per-guess budget. Guesses may run in
/// parallel; the reported winner and cost totals always follow the seeded
/// order, so results are independent of the worker count.
inline ElementaryResult elementary_attack(const CnfFormula& formula, const Circuit& circuit,
                                          const Backdoor& backdoor, const BitVec& gamma,
                                          const AttackOptions& opt) {
    size_t s = backdoor.size();
    if (s >= 63 || (1ULL << s) > opt.guess_cap)
        throw AttackError("elementary_attack: 2^" + std::to_string(s) +
                          " guesses exceed the guess cap");
    uint64_t total = 1ULL << s;
    ElementaryResult res;
    uint64_t chunk = std::max<uint64_t>(uint64_t(std::max(1, opt.workers)) * 8, 32);
    std::vector<GuessResult> results;
    for (uint64_t base = 0; base < total && !res.found; base += chunk) {
        uint64_t count = std::min(chunk, total - base);
        results.assign(size_t(count), {});
        parallel_for(size_t(count), opt.workers, [&](size_t k) {
            uint64_t beta_bits = permute_guess_index(base + k, s, opt.guess_order_seed);
            BitVec beta = BitVec::from_u64(s, beta_bits);
            results[k] = try_guess(formula, circuit, backdoor, gamma, beta, opt.budget,
                                   opt.solver_seed);
        });
        for (uint64_t k = 0; k < count; ++k) {
            const GuessResult& g = results[size_t(k)];
            res.totals.conflicts += g.cost.conflicts;
            res.totals.decisions += g.cost.decisions;
            res.totals.propagations += g.cost.propagations;
            res.totals.wall_seconds += g.cost.wall_seconds;
            ++res.guesses_tried;
            if (g.solved) {
                res.found = true;
                res.alpha = *g.alpha;
                res.winning_guess_index = base + k;
                break;
            }
        }
    }
    return res;
}

struct InstanceReport {
    bool solved = false;
    std::optional<BitVec> recovered_alpha;
    bool verified = false;
    uint64_t guesses_tried = 0;
    uint64_t winning_guess_index = 0;
    SolveCost totals;
};

struct AttackReport {
    BitVec chi;
    uint64_t r = 0;
    double p_hat = 0.0;               // estimate used for planning (may be 0 if unknown)
    double predicted_success = 0.0;   // 1 - (1 - p_hat)^r
    bool success = false;
    std::vector<InstanceReport> instances;
    uint64_t total_guesses = 0;
    SolveCost totals;
};

/// Def.-5 attack: elementary attacks on gamma^1..gamma^r until one succeeds.
inline AttackReport iterated_attack(const CnfFormula& formula, const Circuit& circuit,
                                    const Backdoor& backdoor,
                                    const std::vector<AttackInstance>& instances,
                                    const AttackOptions& opt, double p_hat = 0.0) {
    if (instances.empty()) throw AttackError("iterated_attack: need r >= 1 instances");
    AttackReport report;
    report.chi = backdoor.chi;
    report.r = instances.size();
    report.p_hat = p_hat;
    report.predicted_success =
        p_hat > 0.0 ? success_probability(p_hat, instances.size()) : 0.0;
    for (const auto& inst : instances) {
        ElementaryResult er = elementary_attack(formula, circuit, backdoor, inst.gamma, opt);
        InstanceReport ir;
        ir.solved = er.found;
        ir.guesses_tried = er.guesses_tried;
        ir.winning_guess_index = er.winning_guess_index;
        ir.totals = er.totals;
        if (er.found) {
            ir.recovered_alpha = er.alpha;
            ir.verified = circuit.evaluate(er.alpha) == inst.gamma;
            if (!ir.verified) throw AttackError("internal: unverified key escaped elementary attack");
        }
        report.total_guesses += er.guesses_tried;
        report.totals.conflicts += er.totals.conflicts;
        report.totals.decisions += er.totals.decisions;
        report.totals.propagations += er.totals.propagations;
        report.totals.wall_seconds += er.totals.wall_seconds;
        report.instances.push_back(std::move(ir));
        if (er.found) {
            report.success = true;
            break;
        }
    }
    return report;
}

inline nlohmann::json attack_report_to_json(const AttackReport& r) {
    nlohmann::json j;
    j["chi"] = r.chi.to_hex();
    j["n"] = r.chi.size();
    j["s"] = r.chi.popcount();
    j["r"] = r.r;
    j["p_hat"] = r.p_hat;
    j["predicted_success"] = r.predicted_success;
    j["success"] = r.success;
    j["observed_success_rate"] = r.success ? 1.0 : 0.0;
    j["total_guesses"] = r.total_guesses;
    j["total_conflicts"] = r.totals.conflicts;
    j["total_wall_s"] = r.totals.wall_seconds;
    j["instances"] = nlohmann::json::array();
    for (const auto& ir : r.instances) {
        nlohmann::json ij;
        ij["solved"] = ir.solved;
        if (ir.recovered_alpha) {
            ij["recovered_alpha"] = ir.recovered_alpha->to_hex();
            ij["verified"] = ir.verified;
        }
        ij["guesses_tried"] = ir.guesses_tried;
        ij["winning_guess_index"] = ir.winning_guess_index;
        ij["conflicts"] = ir.totals.conflicts;
        ij["wall_s"] = ir.totals.wall_seconds;
        j["instances"].push_back(std::move(ij));
    }
    return j;
}

}  // namespace ibs
