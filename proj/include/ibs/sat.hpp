#pragma once

// Budgeted SAT oracle: counting-based unit propagation, a CDCL solver with
// assumptions and conflict/wall-clock budgets, a brute-force model enumerator,
// and SUPBS verification.
//
// The solver is deliberately self-contained and deterministic: with a
// CONFLICTS budget, results depend only on (formula, assumptions, budget,
// seed, config) — no clocks, no pointer values, no global state.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "ibs/cnf.hpp"
#include "ibs/common.hpp"

namespace ibs {

// ---------------------------------------------------------------------------
// Budgets and results
// ---------------------------------------------------------------------------

struct SolveBudget {
    enum class Mode { CONFLICTS, WALL_SECONDS };
    Mode mode = Mode::CONFLICTS;
    double limit = 1e9;  // conflict count or seconds; must be > 0

    static SolveBudget conflicts(double n) { return {Mode::CONFLICTS, n}; }
    static SolveBudget wall_seconds(double s) { return {Mode::WALL_SECONDS, s}; }
    static SolveBudget unlimited() { return {Mode::CONFLICTS, 1e18}; }

    void validate() const {
        if (!(limit > 0)) throw CnfError("SolveBudget: limit must be positive");
    }
};

enum class Verdict { SAT, UNSAT, BUDGET_EXCEEDED };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::SAT: return "SAT";
        case Verdict::UNSAT: return "UNSAT";
        case Verdict::BUDGET_EXCEEDED: return "BUDGET_EXCEEDED";
    }
    return "?";
}

struct SolveCost {
    uint64_t conflicts = 0;
    uint64_t decisions = 0;
    uint64_t propagations = 0;
    uint64_t restarts = 0;
    double wall_seconds = 0.0;
};

struct SolveResult {
    Verdict verdict = Verdict::BUDGET_EXCEEDED;
    std::optional<BitVec> model;  // complete assignment, bit v-1 = value of var v
    SolveCost cost;
};

/// True iff `model` (bit v-1 = var v) satisfies every clause.
inline bool check_model(const CnfFormula& f, const BitVec& model) {
    if (int(model.size()) != f.num_vars()) return false;
    if (f.is_unsat_marker()) return false;
    for (const auto& cl : f.clauses()) {
        bool sat = false;
        for (Lit l : cl) {
            bool v = model.get(size_t(std::abs(l) - 1));
            if ((l > 0) == v) { sat = true; break; }
        }
        if (!sat) return false;
    }
    return true;
}

inline std::vector<Lit> assignment_to_lits(const Assignment& a) {
    std::vector<Lit> lits;
    lits.reserve(a.size());
    for (const auto& [v, b] : a.entries()) lits.push_back(b ? v : -v);
    return lits;
}

// ---------------------------------------------------------------------------
// Unit propagation (counting scheme with occurrence lists)
// ---------------------------------------------------------------------------

/// Reusable propagator over one immutable formula. Not thread-safe; create
/// one instance per thread.
class UnitPropagator {
  public:
    explicit UnitPropagator(const CnfFormula& f) : f_(f) {
        int nv = f.num_vars();
        occ_pos_.resize(size_t(nv) + 1);
        occ_neg_.resize(size_t(nv) + 1);
        const auto& cls = f.clauses();
        for (size_t ci = 0; ci < cls.size(); ++ci)
            for (Lit l : cls[ci])
                (l > 0 ? occ_pos_ : occ_neg_)[size_t(std::abs(l))].push_back(int(ci));
        values_.assign(size_t(nv) + 1, -1);
        unassigned_.assign(cls.size(), 0);
        satisfied_.assign(cls.size(), 0);
    }

    /// Runs unit propagation from the given assumption literals.
    /// Returns false on conflict. Values are valid until the next call.
    bool propagate(const std::vector<Lit>& assumptions) {
        reset();
        const auto& cls = f_.clauses();
        if (f_.is_unsat_marker()) return false;
        std::vector<Lit> queue;
        for (size_t ci = 0; ci < cls.size(); ++ci)
            if (cls[ci].size() == 1) queue.push_back(cls[ci][0]);
        queue.insert(queue.end(), assumptions.begin(), assumptions.end());
        size_t head = 0;
        while (head < queue.size()) {
            Lit l = queue[head++];
            int v = std::abs(l);
            int8_t want = l > 0 ? 1 : 0;
            if (values_[size_t(v)] != -1) {
                if (values_[size_t(v)] != want) return false;
                continue;
            }
            values_[size_t(v)] = want;
            ++num_assigned_;
            for (int ci : (l > 0 ? occ_pos_ : occ_neg_)[size_t(v)]) satisfied_[size_t(ci)] = 1;
            for (int ci : (l > 0 ? occ_neg_ : occ_pos_)[size_t(v)]) {
                if (satisfied_[size_t(ci)]) continue;
                if (--unassigned_[size_t(ci)] == 0) return false;
                if (unassigned_[size_t(ci)] == 1) {
                    for (Lit cl : cls[size_t(ci)]) {
                        if (values_[size_t(std::abs(cl))] == -1) {
                            queue.push_back(cl);
                            break;
                        }
                    }
                }
            }
        }
        return true;
    }

    bool propagate(const Assignment& assumptions) {
        return propagate(assignment_to_lits(assumptions));
    }

    /// -1 unassigned, else 0/1. Valid after propagate().
    int8_t value(int var) const { return values_[size_t(var)]; }
    bool all_assigned() const { return num_assigned_ == f_.num_vars(); }

    Assignment closure() const {
        Assignment a;
        for (int v = 1; v <= f_.num_vars(); ++v)
            if (values_[size_t(v)] != -1) a.set(v, values_[size_t(v)] == 1);
        return a;
    }

    /// Projects the closure onto `vars`; every var must be assigned.
    BitVec project(const std::vector<int>& vars) const {
        BitVec out(vars.size());
        for (size_t i = 0; i < vars.size(); ++i) {
            int8_t v = values_[size_t(vars[i])];
            if (v == -1) throw CnfError("UnitPropagator::project: unassigned variable");
            out.set(i, v == 1);
        }
        return out;
    }

  private:
    void reset() {
        std::fill(values_.begin(), values_.end(), int8_t(-1));
        std::fill(satisfied_.begin(), satisfied_.end(), uint8_t(0));
        const auto& cls = f_.clauses();
        for (size_t ci = 0; ci < cls.size(); ++ci)
            unassigned_[ci] = int(cls[ci].size());
        num_assigned_ = 0;
    }

    const CnfFormula& f_;
    std::vector<std::vector<int>> occ_pos_, occ_neg_;
    std::vector<int8_t> values_;
    std::vector<int> unassigned_;
    std::vector<uint8_t> satisfied_;
    int num_assigned_ = 0;
};

struct UnitPropResult {
    bool conflict = false;
    Assignment closure;   // empty when conflict
    bool all_assigned = false;
};

/// Closure of unit propagation over formula /\ assumptions, or CONFLICT.
/// Deterministic given clause order.
inline UnitPropResult unit_propagate(const CnfFormula& formula, const Assignment& assumptions) {
    UnitPropagator up(formula);
    UnitPropResult r;
    if (!up.propagate(assumptions)) {
        r.conflict = true;
        return r;
    }
    r.closure = up.closure();
    r.all_assigned = up.all_assigned();
    return r;
}

// ---------------------------------------------------------------------------
// Brute-force enumeration (test oracle)
// ---------------------------------------------------------------------------

inline constexpr int kEnumerateMaxVars = 24;

namespace detail {

struct ClauseMasks {
    std::vector<uint32_t> pos, neg;
};

inline ClauseMasks clause_masks(const CnfFormula& f) {
    ClauseMasks m;
    m.pos.reserve(f.clauses().size());
    m.neg.reserve(f.clauses().size());
    for (const auto& cl : f.clauses()) {
        uint32_t p = 0, n = 0;
        for (Lit l : cl) {
            uint32_t bit = 1u << (std::abs(l) - 1);
            if (l > 0) p |= bit; else n |= bit;
        }
        m.pos.push_back(p);
        m.neg.push_back(n);
    }
    return m;
}

inline bool masks_satisfied(const ClauseMasks& m, uint32_t a) {
    for (size_t i = 0; i < m.pos.size(); ++i)
        if (!((a & m.pos[i]) || (~a & m.neg[i]))) return false;
    return true;
}

}  // namespace detail

/// All satisfying complete assignments, by exhaustive enumeration.
/// Guarded to num_vars <= 24.
inline std::vector<BitVec> enumerate_models(const CnfFormula& f) {
    if (f.num_vars() > kEnumerateMaxVars)
        throw CnfError("enumerate_models: formula too large (num_vars > 24)");
    if (f.is_unsat_marker()) return {};
    auto masks = detail::clause_masks(f);
    std::vector<BitVec> models;
    uint64_t total = 1ULL << f.num_vars();
    for (uint64_t a = 0; a < total; ++a)
        if (detail::masks_satisfied(masks, uint32_t(a)))
            models.push_back(BitVec::from_u64(size_t(f.num_vars()), a));
    return models;
}

/// Early-exit satisfiability by enumeration (same guard).
inline bool brute_force_satisfiable(const CnfFormula& f) {
    if (f.num_vars() > kEnumerateMaxVars)
        throw CnfError("brute_force_satisfiable: formula too large");
    if (f.is_unsat_marker()) return false;
    auto masks = detail::clause_masks(f);
    uint64_t total = 1ULL << f.num_vars();
    for (uint64_t a = 0; a < total; ++a)
        if (detail::masks_satisfied(masks, uint32_t(a))) return true;
    return false;
}

// ---------------------------------------------------------------------------
// CDCL solver
// ---------------------------------------------------------------------------

struct SolverConfig {
    uint64_t seed = 1;
    double var_decay = 0.95;
    double clause_decay = 0.999;
    int luby_base = 64;           // restart interval unit, in conflicts
    bool phase_saving = true;
    int first_reduce = 2000;      // learnt clauses before first DB reduction
    int reduce_increment = 1000;
};

class Solver {
  public:
    explicit Solver(const CnfFormula& formula, SolverConfig config = {})
        : f_(formula), cfg_(config) {
        nv_ = f_.num_vars();
        assigns_.assign(size_t(nv_) + 1, -1);
        level_.assign(size_t(nv_) + 1, 0);
        reason_.assign(size_t(nv_) + 1, -1);
        activity_.assign(size_t(nv_) + 1, 0.0);
        polarity_.assign(size_t(nv_) + 1, 0);
        tie_key_.assign(size_t(nv_) + 1, 0);
        seen_.assign(size_t(nv_) + 1, 0);
        heap_pos_.assign(size_t(nv_) + 1, -1);
        watches_.assign(2 * (size_t(nv_) + 1), {});
        for (int v = 1; v <= nv_; ++v) {
            tie_key_[size_t(v)] = mix64(cfg_.seed, uint64_t(v));
            polarity_[size_t(v)] = uint8_t(mix64(cfg_.seed ^ 0x5eedULL, uint64_t(v)) & 1);
        }
        ok_ = !f_.is_unsat_marker();
        if (ok_) {
            for (const auto& cl : f_.clauses())
                if (!attach_original(cl)) { ok_ = false; break; }
        }
        for (int v = nv_; v >= 1; --v) heap_insert(v);
    }

    /// Decides formula /\ assumptions within the budget. Models are verified
    /// against the original clauses before being returned.
    SolveResult solve(const std::vector<Lit>& assumptions, SolveBudget budget) {
        budget.validate();
        auto t0 = std::chrono::steady_clock::now();
        SolveResult res;
        auto finish = [&](Verdict v) {
            res.verdict = v;
            res.cost.conflicts = conflicts_;
            res.cost.decisions = decisions_;
            res.cost.propagations = propagations_;
            res.cost.restarts = restarts_;
            res.cost.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return res;
        };
        conflicts_ = decisions_ = propagations_ = restarts_ = 0;
        if (!ok_) return finish(Verdict::UNSAT);
        cancel_until(0);
        if (propagate() != -1) { ok_ = false; return finish(Verdict::UNSAT); }

        uint64_t conflict_budget = budget.mode == SolveBudget::Mode::CONFLICTS
                                       ? uint64_t(std::min(budget.limit, 1e18))
                                       : std::numeric_limits<uint64_t>::max();
        int restart_idx = 0;
        uint64_t restart_limit = uint64_t(luby(restart_idx)) * uint64_t(cfg_.luby_base);
        uint64_t conflicts_at_restart = 0;

        for (;;) {
            if (budget.mode == SolveBudget::Mode::WALL_SECONDS) {
                double el = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0).count();
                if (el > budget.limit) { cancel_until(0); return finish(Verdict::BUDGET_EXCEEDED); }
            }
            int confl = propagate();
            if (confl != -1) {
                ++conflicts_;
                if (decision_level() == 0) { ok_ = false; return finish(Verdict::UNSAT); }
                std::vector<Lit> learnt;
                int bt_level, lbd;
                analyze(confl, learnt, bt_level, lbd);
                cancel_until(bt_level);
                record_learnt(std::move(learnt), lbd);
                decay_activities();
                if (conflicts_ >= conflict_budget) {
                    cancel_until(0);
                    return finish(Verdict::BUDGET_EXCEEDED);
                }
                if (conflicts_ - conflicts_at_restart >= restart_limit) {
                    ++restarts_;
                    ++restart_idx;
                    restart_limit = uint64_t(luby(restart_idx)) * uint64_t(cfg_.luby_base);
                    conflicts_at_restart = conflicts_;
                    cancel_until(0);
                }
                if (num_learnts_ > cfg_.first_reduce + cfg_.reduce_increment * int(reduces_))
                    reduce_db();
            } else {
                // assumptions act as forced first decisions
                bool assumption_pending = false;
                while (decision_level() < int(assumptions.size())) {
                    Lit p = assumptions[size_t(decision_level())];
                    int8_t v = lit_value(p);
                    if (v == 1) {
                        new_decision_level();  // already satisfied; empty level
                    } else if (v == 0) {
                        cancel_until(0);
                        return finish(Verdict::UNSAT);  // conflicts with assumptions
                    } else {
                        ++decisions_;
                        new_decision_level();
                        enqueue(p, -1);
                        assumption_pending = true;
                        break;
                    }
                }
                if (assumption_pending) continue;
                Lit next = pick_branch_lit();
                if (next == 0) {
                    // all variables assigned: model found
                    BitVec model(size_t(nv_));
                    for (int v = 1; v <= nv_; ++v) model.set(size_t(v) - 1, assigns_[size_t(v)] == 1);
                    cancel_until(0);
                    if (!check_model(f_, model))
                        throw CnfError("internal: SAT model failed verification");
                    res.model = model;
                    return finish(Verdict::SAT);
                }
                ++decisions_;
                new_decision_level();
                enqueue(next, -1);
            }
        }
    }

    SolveResult solve(const Assignment& assumptions, SolveBudget budget) {
        return solve(assignment_to_lits(assumptions), budget);
    }

  private:
    struct InternalClause {
        std::vector<Lit> lits;
        double activity = 0.0;
        int lbd = 0;
        bool learnt = false;
        bool deleted = false;
    };
    struct Watcher {
        int cref;
        Lit blocker;
    };

    static size_t lit_idx(Lit l) {
        return 2 * size_t(std::abs(l)) + (l < 0 ? 1 : 0);
    }
    int8_t lit_value(Lit l) const {
        int8_t v = assigns_[size_t(std::abs(l))];
        if (v == -1) return -1;
        return (l > 0) == (v == 1) ? 1 : 0;
    }
    int decision_level() const { return int(trail_lim_.size()); }

    static double luby(int i) {
        // Luby sequence: 1 1 2 1 1 2 4 ...
        int k = 1;
        while ((1 << (k + 1)) <= i + 2) ++k;
        while ((1 << k) - 1 != i + 1) {
            i = i - (1 << k) + 1;
            k = 1;
            while ((1 << (k + 1)) <= i + 2) ++k;
        }
        return std::pow(2.0, k - 1);
    }

    bool attach_original(const Clause& cl) {
        // dedup literals (tautologies were rejected at construction)
        std::vector<Lit> lits = cl;
        std::sort(lits.begin(), lits.end(), [](Lit a, Lit b) {
            int va = std::abs(a), vb = std::abs(b);
            return va != vb ? va < vb : a < b;
        });
        lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
        if (lits.size() == 1) {
            int8_t v = lit_value(lits[0]);
            if (v == 0) return false;
            if (v == -1) enqueue(lits[0], -1);
            return true;
        }
        InternalClause ic;
        ic.lits = std::move(lits);
        clauses_.push_back(std::move(ic));
        int cref = int(clauses_.size()) - 1;
        watches_[lit_idx(clauses_[size_t(cref)].lits[0])].push_back({cref, clauses_[size_t(cref)].lits[1]});
        watches_[lit_idx(clauses_[size_t(cref)].lits[1])].push_back({cref, clauses_[size_t(cref)].lits[0]});
        return true;
    }

    void new_decision_level() { trail_lim_.push_back(int(trail_.size())); }

    void enqueue(Lit p, int from) {
        int v = std::abs(p);
        assigns_[size_t(v)] = p > 0 ? 1 : 0;
        level_[size_t(v)] = decision_level();
        reason_[size_t(v)] = from;
        trail_.push_back(p);
    }

    void cancel_until(int lvl) {
        if (decision_level() <= lvl) return;
        for (int i = int(trail_.size()) - 1; i >= trail_lim_[size_t(lvl)]; --i) {
            int v = std::abs(trail_[size_t(i)]);
            if (cfg_.phase_saving) polarity_[size_t(v)] = uint8_t(assigns_[size_t(v)]);
            assigns_[size_t(v)] = -1;
            reason_[size_t(v)] = -1;
            if (heap_pos_[size_t(v)] == -1) heap_insert(v);
        }
        trail_.resize(size_t(trail_lim_[size_t(lvl)]));
        trail_lim_.resize(size_t(lvl));
        qhead_ = std::min(qhead_, trail_.size());
    }

    // two-watched-literal propagation; returns conflicting clause ref or -1
    int propagate() {
        int confl = -1;
        while (qhead_ < trail_.size()) {
            Lit p = trail_[qhead_++];
            ++propagations_;
            auto& ws = watches_[lit_idx(-p)];
            size_t i = 0, j = 0;
            while (i < ws.size()) {
                Watcher w = ws[i];
                if (lit_value(w.blocker) == 1) { ws[j++] = ws[i++]; continue; }
                InternalClause& c = clauses_[size_t(w.cref)];
                if (c.deleted) { ++i; continue; }
                Lit false_lit = -p;
                if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
                ++i;
                Lit first = c.lits[0];
                if (first != w.blocker && lit_value(first) == 1) {
                    ws[j++] = {w.cref, first};
                    continue;
                }
                size_t k = 2;
                for (; k < c.lits.size(); ++k)
                    if (lit_value(c.lits[k]) != 0) break;
                if (k < c.lits.size()) {
                    std::swap(c.lits[1], c.lits[k]);
                    watches_[lit_idx(c.lits[1])].push_back({w.cref, first});
                    continue;
                }
                ws[j++] = {w.cref, first};
                if (lit_value(first) == 0) {
                    confl = w.cref;
                    qhead_ = trail_.size();
                    while (i < ws.size()) ws[j++] = ws[i++];
                } else {
                    enqueue(first, w.cref);
                }
            }
            ws.resize(j);
            if (confl != -1) break;
        }
        return confl;
    }

    void bump_var(int v) {
        activity_[size_t(v)] += var_inc_;
        if (activity_[size_t(v)] > 1e100) {
            for (int x = 1; x <= nv_; ++x) activity_[size_t(x)] *= 1e-100;
            var_inc_ *= 1e-100;
        }
        if (heap_pos_[size_t(v)] != -1) heap_up(heap_pos_[size_t(v)]);
    }

    void bump_clause(InternalClause& c) {
        c.activity += cla_inc_;
        if (c.activity > 1e20) {
            for (auto& cl : clauses_)
                if (cl.learnt) cl.activity *= 1e-20;
            cla_inc_ *= 1e-20;
        }
    }

    void decay_activities() {
        var_inc_ /= cfg_.var_decay;
        cla_inc_ /= cfg_.clause_decay;
    }

    // first-UIP learning with basic recursive-free minimization
    void analyze(int confl, std::vector<Lit>& learnt, int& bt_level, int& lbd) {
        learnt.clear();
        learnt.push_back(0);  // slot for the asserting literal
        int path_c = 0;
        Lit p = 0;
        size_t index = trail_.size();
        int cref = confl;
        do {
            InternalClause& c = clauses_[size_t(cref)];
            if (c.learnt) bump_clause(c);
            for (size_t k = (p == 0 ? 0 : 1); k < c.lits.size(); ++k) {
                Lit q = c.lits[k];
                int v = std::abs(q);
                if (!seen_[size_t(v)] && level_[size_t(v)] > 0) {
                    bump_var(v);
                    seen_[size_t(v)] = 1;
                    if (level_[size_t(v)] >= decision_level()) ++path_c;
                    else learnt.push_back(q);
                }
            }
            while (!seen_[size_t(std::abs(trail_[index - 1]))]) --index;
            --index;
            p = trail_[index];
            cref = reason_[size_t(std::abs(p))];
            seen_[size_t(std::abs(p))] = 0;
            --path_c;
        } while (path_c > 0);
        learnt[0] = -p;

        // basic minimization: drop literals whose reason is fully subsumed
        size_t jj = 1;
        for (size_t ii = 1; ii < learnt.size(); ++ii) {
            int v = std::abs(learnt[ii]);
            int r = reason_[size_t(v)];
            bool redundant = false;
            if (r != -1) {
                redundant = true;
                const InternalClause& rc = clauses_[size_t(r)];
                for (size_t k = 1; k < rc.lits.size(); ++k) {
                    int vv = std::abs(rc.lits[k]);
                    if (!seen_[size_t(vv)] && level_[size_t(vv)] > 0) { redundant = false; break; }
                }
            }
            if (!redundant) learnt[jj++] = learnt[ii];
        }
        learnt.resize(jj);

        if (learnt.size() == 1) {
            bt_level = 0;
        } else {
            size_t max_i = 1;
            for (size_t k = 2; k < learnt.size(); ++k)
                if (level_[size_t(std::abs(learnt[k]))] > level_[size_t(std::abs(learnt[max_i]))])
                    max_i = k;
            std::swap(learnt[1], learnt[max_i]);
            bt_level = level_[size_t(std::abs(learnt[1]))];
        }
        // LBD: distinct decision levels in the learnt clause
        lbd = 0;
        {
            std::vector<int> lvls;
            for (Lit q : learnt) lvls.push_back(level_[size_t(std::abs(q))]);
            std::sort(lvls.begin(), lvls.end());
            lvls.erase(std::unique(lvls.begin(), lvls.end()), lvls.end());
            lbd = int(lvls.size());
        }
        for (Lit q : learnt) seen_[size_t(std::abs(q))] = 0;
    }

    void record_learnt(std::vector<Lit> learnt, int lbd) {
        if (learnt.size() == 1) {
            enqueue(learnt[0], -1);
            return;
        }
        InternalClause ic;
        ic.lits = std::move(learnt);
        ic.learnt = true;
        ic.lbd = lbd;
        ic.activity = cla_inc_;
        clauses_.push_back(std::move(ic));
        int cref = int(clauses_.size()) - 1;
        const auto& lits = clauses_[size_t(cref)].lits;
        watches_[lit_idx(lits[0])].push_back({cref, lits[1]});
        watches_[lit_idx(lits[1])].push_back({cref, lits[0]});
        ++num_learnts_;
        enqueue(lits[0], cref);
    }

    void reduce_db() {
        ++reduces_;
        std::vector<int> cands;
        for (size_t i = 0; i < clauses_.size(); ++i) {
            const auto& c = clauses_[i];
            if (!c.learnt || c.deleted || c.lbd <= 2 || c.lits.size() <= 2) continue;
            if (is_locked(int(i))) continue;
            cands.push_back(int(i));
        }
        std::sort(cands.begin(), cands.end(), [&](int a, int b) {
            const auto& ca = clauses_[size_t(a)];
            const auto& cb = clauses_[size_t(b)];
            if (ca.lbd != cb.lbd) return ca.lbd > cb.lbd;           // worse LBD first
            if (ca.activity != cb.activity) return ca.activity < cb.activity;
            return a < b;
        });
        size_t drop = cands.size() / 2;
        for (size_t i = 0; i < drop; ++i) {
            clauses_[size_t(cands[i])].deleted = true;
            --num_learnts_;
        }
        rebuild_watches();
    }

    bool is_locked(int cref) const {
        const auto& c = clauses_[size_t(cref)];
        int v = std::abs(c.lits[0]);
        return assigns_[size_t(v)] != -1 && reason_[size_t(v)] == cref &&
               lit_value(c.lits[0]) == 1;
    }

    void rebuild_watches() {
        for (auto& w : watches_) w.clear();
        for (size_t i = 0; i < clauses_.size(); ++i) {
            const auto& c = clauses_[i];
            if (c.deleted) continue;
            watches_[lit_idx(c.lits[0])].push_back({int(i), c.lits[1]});
            watches_[lit_idx(c.lits[1])].push_back({int(i), c.lits[0]});
        }
    }

    // --- decision heap: max activity, seeded tie-break ---

    bool heap_less(int a, int b) const {
        // "less" = lower priority
        if (activity_[size_t(a)] != activity_[size_t(b)])
            return activity_[size_t(a)] < activity_[size_t(b)];
        return tie_key_[size_t(a)] < tie_key_[size_t(b)];
    }
    void heap_insert(int v) {
        if (heap_pos_[size_t(v)] != -1) return;
        heap_.push_back(v);
        heap_pos_[size_t(v)] = int(heap_.size()) - 1;
        heap_up(int(heap_.size()) - 1);
    }
    void heap_up(int i) {
        int v = heap_[size_t(i)];
        while (i > 0) {
            int parent = (i - 1) / 2;
            if (!heap_less(heap_[size_t(parent)], v)) break;
            heap_[size_t(i)] = heap_[size_t(parent)];
            heap_pos_[size_t(heap_[size_t(i)])] = i;
            i = parent;
        }
        heap_[size_t(i)] = v;
        heap_pos_[size_t(v)] = i;
    }
    void heap_down(int i) {
        int v = heap_[size_t(i)];
        int n = int(heap_.size());
        for (;;) {
            int c = 2 * i + 1;
            if (c >= n) break;
            if (c + 1 < n && heap_less(heap_[size_t(c)], heap_[size_t(c + 1)])) ++c;
            if (!heap_less(v, heap_[size_t(c)])) break;
            heap_[size_t(i)] = heap_[size_t(c)];
            heap_pos_[size_t(heap_[size_t(i)])] = i;
            i = c;
        }
        heap_[size_t(i)] = v;
        heap_pos_[size_t(v)] = i;
    }
    int heap_pop() {
        int top = heap_[0];
        heap_pos_[size_t(top)] = -1;
        int last = heap_.back();
        heap_.pop_back();
        if (!heap_.empty()) {
            heap_[0] = last;
            heap_pos_[size_t(last)] = 0;
            heap_down(0);
        }
        return top;
    }

    Lit pick_branch_lit() {
        while (!heap_.empty()) {
            int v = heap_[0];
            if (assigns_[size_t(v)] == -1) {
                heap_pop();
                return polarity_[size_t(v)] ? v : -v;
            }
            heap_pop();
        }
        return 0;
    }

    const CnfFormula& f_;
    SolverConfig cfg_;
    int nv_ = 0;
    bool ok_ = true;

    std::vector<InternalClause> clauses_;
    std::vector<std::vector<Watcher>> watches_;
    std::vector<int8_t> assigns_;
    std::vector<int> level_;
    std::vector<int> reason_;
    std::vector<Lit> trail_;
    std::vector<int> trail_lim_;
    size_t qhead_ = 0;

    std::vector<double> activity_;
    std::vector<uint64_t> tie_key_;
    std::vector<uint8_t> polarity_;
    std::vector<uint8_t> seen_;
    std::vector<int> heap_;
    std::vector<int> heap_pos_;
    double var_inc_ = 1.0;
    double cla_inc_ = 1.0;

    uint64_t conflicts_ = 0, decisions_ = 0, propagations_ = 0, restarts_ = 0;
    int num_learnts_ = 0;
    uint64_t reduces_ = 0;
};

/// One-shot convenience wrapper.
inline SolveResult solve(const CnfFormula& formula, const Assignment& assumptions,
                         SolveBudget budget, uint64_t seed = 1) {
    SolverConfig cfg;
    cfg.seed = seed;
    Solver s(formula, cfg);
    return s.solve(assumptions, budget);
}

// ---------------------------------------------------------------------------
// SUPBS verification
// ---------------------------------------------------------------------------

struct SupbsResult {
    bool is_supbs = false;
    bool exhaustive = false;
    uint64_t checked = 0;
    uint64_t first_failure = 0;  // beta index (valid when !is_supbs)
};

inline constexpr int kSupbsExhaustiveMax = 16;

/// True iff unit propagation decides C_f[gamma/Y, beta/B] (conflict, or every
/// variable fixed) for every beta — exhaustively when |B| <= 16, else over
/// `samples` seeded draws. `chi` selects B as a subset of roles().inputs.
inline SupbsResult verify_supbs(const CnfFormula& formula, const BitVec& chi,
                                const Assignment& output_assignment,
                                uint64_t seed = 1, uint64_t samples = 1024) {
    const auto& X = formula.roles().inputs;
    if (chi.size() != X.size())
        throw CnfError("verify_supbs: chi length != |X|");
    std::vector<int> b_vars;
    for (size_t i = 0; i < X.size(); ++i)
        if (chi.get(i)) b_vars.push_back(X[i]);
    size_t s = b_vars.size();

    UnitPropagator up(formula);
    std::vector<Lit> base = assignment_to_lits(output_assignment);
    SupbsResult res;
    res.exhaustive = s <= kSupbsExhaustiveMax;
    uint64_t count = res.exhaustive ? (1ULL << s) : samples;
    Rng rng(mix64(seed, 0x5b5eULL));
    std::vector<Lit> lits;
    for (uint64_t it = 0; it < count; ++it) {
        BitVec beta = res.exhaustive ? BitVec::from_u64(s, it) : BitVec::random(s, rng);
        lits = base;
        for (size_t i = 0; i < s; ++i)
            lits.push_back(beta.get(i) ? b_vars[i] : -b_vars[i]);
        bool no_conflict = up.propagate(lits);
        ++res.checked;
        if (no_conflict && !up.all_assigned()) {
            res.is_supbs = false;
            res.first_failure = it;
            return res;
        }
    }
    res.is_supbs = true;
    return res;
}

}  // namespace ibs
