#pragma once

// CNF formula model with input/output role tracking, Tseitin encoding of
// circuits, assignment substitution, and annotated DIMACS I/O.
//
// Literals are nonzero ints: +v for x_v, -v for its negation; variables are
// 1-based. Formulas are immutable values; substitution returns a new formula
// and never renumbers variables, so role indices stay stable.

#include <algorithm>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "ibs/circuit.hpp"
#include "ibs/common.hpp"

namespace ibs {

using Lit = int;
using Clause = std::vector<Lit>;

class CnfError : public std::runtime_error {
  public:
    explicit CnfError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Ordered input (X) and output (Y) variable lists; everything else is
/// auxiliary. Position in the list is the bit position.
struct VarRoles {
    std::vector<int> inputs;
    std::vector<int> outputs;

    bool operator==(const VarRoles&) const = default;
};

/// Partial assignment: variable index -> bit. Ordered map so iteration is
/// deterministic.
class Assignment {
  public:
    Assignment() = default;

    void set(int var, bool value) { map_[var] = value; }
    bool contains(int var) const { return map_.count(var) != 0; }
    bool value(int var) const { return map_.at(var); }
    size_t size() const { return map_.size(); }
    bool empty() const { return map_.empty(); }

    const std::map<int, bool>& entries() const { return map_; }

    /// Union of two assignments; throws on conflicting values.
    Assignment merged(const Assignment& other) const {
        Assignment out = *this;
        for (const auto& [v, b] : other.map_) {
            auto it = out.map_.find(v);
            if (it != out.map_.end() && it->second != b)
                throw CnfError("Assignment::merged: conflicting value for variable " +
                               std::to_string(v));
            out.map_[v] = b;
        }
        return out;
    }

    /// Assignment of `vars` (in order) to the bits of `bits`.
    static Assignment over(const std::vector<int>& vars, const BitVec& bits) {
        if (vars.size() != bits.size())
            throw CnfError("Assignment::over: length mismatch");
        Assignment a;
        for (size_t i = 0; i < vars.size(); ++i) a.set(vars[i], bits.get(i));
        return a;
    }

    bool operator==(const Assignment&) const = default;

  private:
    std::map<int, bool> map_;
};

class CnfFormula {
  public:
    CnfFormula() = default;

    /// Validates: literals in range, no empty clause, no clause with both
    /// v and -v (tautologies indicate encoder bugs and are rejected).
    CnfFormula(int num_vars, std::vector<Clause> clauses, VarRoles roles = {})
        : num_vars_(num_vars), clauses_(std::move(clauses)), roles_(std::move(roles)) {
        if (num_vars_ < 0) throw CnfError("negative variable count");
        for (const auto& cl : clauses_) {
            if (cl.empty()) throw CnfError("empty clause at construction");
            for (Lit l : cl) {
                int v = std::abs(l);
                if (l == 0 || v > num_vars_)
                    throw CnfError("literal out of range: " + std::to_string(l));
            }
            for (Lit l : cl)
                if (std::find(cl.begin(), cl.end(), -l) != cl.end())
                    throw CnfError("tautological clause rejected");
        }
        check_roles();
    }

    /// Canonical trivially-unsatisfiable formula: a single empty clause.
    static CnfFormula unsat_marker(int num_vars, VarRoles roles = {}) {
        CnfFormula f;
        f.num_vars_ = num_vars;
        f.clauses_ = {Clause{}};
        f.roles_ = std::move(roles);
        f.check_roles();
        return f;
    }

    bool is_unsat_marker() const {
        return clauses_.size() == 1 && clauses_[0].empty();
    }

    int num_vars() const { return num_vars_; }
    const std::vector<Clause>& clauses() const { return clauses_; }
    const VarRoles& roles() const { return roles_; }

    void set_roles(VarRoles roles) {
        roles_ = std::move(roles);
        check_roles();
    }

    /// Same formula plus extra clauses (used by model enumeration loops).
    CnfFormula with_clauses(const std::vector<Clause>& extra) const {
        if (is_unsat_marker()) return *this;
        std::vector<Clause> cl = clauses_;
        cl.insert(cl.end(), extra.begin(), extra.end());
        return CnfFormula(num_vars_, std::move(cl), roles_);
    }

    bool operator==(const CnfFormula&) const = default;

  private:
    void check_roles() const {
        auto check_list = [&](const std::vector<int>& vs, const char* what) {
            std::vector<int> sorted = vs;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw CnfError(std::string(what) + ": duplicate variable");
            for (int v : vs)
                if (v < 1 || v > num_vars_)
                    throw CnfError(std::string(what) + ": variable out of range");
        };
        check_list(roles_.inputs, "roles.inputs");
        check_list(roles_.outputs, "roles.outputs");
        for (int v : roles_.inputs)
            if (std::find(roles_.outputs.begin(), roles_.outputs.end(), v) !=
                roles_.outputs.end())
                throw CnfError("roles: X and Y intersect");
    }

    int num_vars_ = 0;
    std::vector<Clause> clauses_;
    VarRoles roles_;
};

// ---------------------------------------------------------------------------
// Tseitin encoding
// ---------------------------------------------------------------------------

/// Encodes a circuit into CNF with one fresh variable per wire. Gate clauses
/// are full biconditionals, so the encoding is arc consistent per gate under
/// unit propagation. Variable 1..n are the inputs in declaration order.
/// If an output wire is itself an input wire, a fresh alias variable is
/// introduced to keep X and Y disjoint.
inline CnfFormula tseitin_encode(const Circuit& circuit) {
    std::unordered_map<std::string, int> var_of;
    int next = 1;
    VarRoles roles;
    for (const auto& w : circuit.inputs) {
        var_of[w] = next;
        roles.inputs.push_back(next);
        ++next;
    }
    std::vector<Clause> clauses;
    for (const auto& g : circuit.gates) {
        int gv = next++;
        var_of[g.output] = gv;
        auto op = [&](size_t i) { return var_of.at(g.operands[i]); };
        switch (g.kind) {
            case GateKind::AND: {
                int a = op(0), b = op(1);
                clauses.push_back({-gv, a});
                clauses.push_back({-gv, b});
                clauses.push_back({gv, -a, -b});
                break;
            }
            case GateKind::OR: {
                int a = op(0), b = op(1);
                clauses.push_back({gv, -a});
                clauses.push_back({gv, -b});
                clauses.push_back({-gv, a, b});
                break;
            }
            case GateKind::XOR: {
                int a = op(0), b = op(1);
                clauses.push_back({-gv, a, b});
                clauses.push_back({-gv, -a, -b});
                clauses.push_back({gv, -a, b});
                clauses.push_back({gv, a, -b});
                break;
            }
            case GateKind::NOT: {
                int a = op(0);
                clauses.push_back({gv, a});
                clauses.push_back({-gv, -a});
                break;
            }
            case GateKind::CONST0: clauses.push_back({-gv}); break;
            case GateKind::CONST1: clauses.push_back({gv}); break;
        }
    }
    for (const auto& w : circuit.outputs) {
        int v = var_of.at(w);
        bool is_input = std::find(roles.inputs.begin(), roles.inputs.end(), v) !=
                        roles.inputs.end();
        if (is_input) {
            int alias = next++;
            clauses.push_back({-alias, v});
            clauses.push_back({alias, -v});
            v = alias;
        }
        roles.outputs.push_back(v);
    }
    return CnfFormula(next - 1, std::move(clauses), std::move(roles));
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

/// C[beta/B]: clauses with a satisfied literal are dropped, falsified literals
/// are deleted. Deriving an empty clause collapses the result to the canonical
/// unsat marker. Variables are never renumbered.
inline CnfFormula substitute(const CnfFormula& formula, const Assignment& assignment) {
    for (const auto& [v, b] : assignment.entries())
        if (v < 1 || v > formula.num_vars())
            throw CnfError("substitute: variable out of range: " + std::to_string(v));
    if (formula.is_unsat_marker()) return formula;
    std::vector<Clause> out;
    out.reserve(formula.clauses().size());
    for (const auto& cl : formula.clauses()) {
        Clause kept;
        bool satisfied = false;
        for (Lit l : cl) {
            int v = std::abs(l);
            if (assignment.contains(v)) {
                bool val = assignment.value(v);
                if ((l > 0) == val) { satisfied = true; break; }
                // falsified literal: drop it
            } else {
                kept.push_back(l);
            }
        }
        if (satisfied) continue;
        if (kept.empty()) return CnfFormula::unsat_marker(formula.num_vars(), formula.roles());
        out.push_back(std::move(kept));
    }
    CnfFormula result(formula.num_vars(), std::move(out), formula.roles());
    return result;
}

// ---------------------------------------------------------------------------
// Annotated DIMACS
//
//   c ibs input <v1> <v2> ...
//   c ibs output <v1> ...
//   p cnf <vars> <clauses>
//   <lit> ... 0
//
// Role annotation order defines bit positions; multiple lines concatenate.
// Output is bit-exact: space-separated decimals, LF endings.
// ---------------------------------------------------------------------------

inline std::string write_dimacs(const CnfFormula& f) {
    std::ostringstream os;
    auto annotate = [&](const char* tag, const std::vector<int>& vars) {
        if (vars.empty()) return;
        os << "c ibs " << tag;
        for (int v : vars) os << ' ' << v;
        os << '\n';
    };
    annotate("input", f.roles().inputs);
    annotate("output", f.roles().outputs);
    os << "p cnf " << f.num_vars() << ' ' << f.clauses().size() << '\n';
    for (const auto& cl : f.clauses()) {
        for (Lit l : cl) os << l << ' ';
        os << "0\n";
    }
    return os.str();
}

inline CnfFormula read_dimacs(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    VarRoles roles;
    int num_vars = -1;
    size_t num_clauses = 0;
    std::vector<Clause> clauses;
    Clause current;
    bool saw_empty = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == 'c') {
            std::istringstream ls(line);
            std::string c, tag, kind;
            ls >> c >> tag >> kind;
            if (tag == "ibs" && (kind == "input" || kind == "output")) {
                int v;
                while (ls >> v) {
                    if (kind == "input") roles.inputs.push_back(v);
                    else roles.outputs.push_back(v);
                }
            }
            continue;
        }
        if (line[0] == 'p') {
            std::istringstream ls(line);
            std::string p, fmt;
            long long nv = -1, nc = -1;
            ls >> p >> fmt >> nv >> nc;
            if (fmt != "cnf" || nv < 0 || nc < 0 || ls.fail())
                throw CnfError("malformed DIMACS header: " + line);
            if (num_vars >= 0) throw CnfError("duplicate DIMACS header");
            num_vars = int(nv);
            num_clauses = size_t(nc);
            continue;
        }
        if (num_vars < 0) throw CnfError("clause before DIMACS header");
        std::istringstream ls(line);
        long long l;
        while (ls >> l) {
            if (l == 0) {
                if (current.empty()) saw_empty = true;
                else clauses.push_back(std::move(current));
                current.clear();
            } else {
                if (std::llabs(l) > num_vars)
                    throw CnfError("literal out of range: " + std::to_string(l));
                current.push_back(Lit(l));
            }
        }
        if (!ls.eof() && ls.fail()) {
            std::string junk;
            ls.clear();
            ls >> junk;
            throw CnfError("bad token in clause section: " + junk);
        }
    }
    if (!current.empty()) throw CnfError("unterminated clause at end of file");
    if (num_vars < 0) throw CnfError("missing DIMACS header");
    if (saw_empty) {
        if (!clauses.empty() || num_clauses != 1)
            throw CnfError("empty clause in a multi-clause formula");
        return CnfFormula::unsat_marker(num_vars, std::move(roles));
    }
    if (clauses.size() != num_clauses)
        throw CnfError("clause count mismatch: header says " + std::to_string(num_clauses) +
                       ", found " + std::to_string(clauses.size()));
    return CnfFormula(num_vars, std::move(clauses), std::move(roles));
}

}  // namespace ibs
