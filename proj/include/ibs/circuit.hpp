#pragma once

// Gate-level netlists: the carrier for discrete functions f : {0,1}^n -> {0,1}^m.
// A circuit is an acyclic list of gates over named wires; the stored gate order
// is always a valid topological order, so evaluation is a single forward pass.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ibs/common.hpp"

namespace ibs {

enum class GateKind { AND, OR, NOT, XOR, CONST0, CONST1 };

inline const char* gate_kind_name(GateKind k) {
    switch (k) {
        case GateKind::AND: return "AND";
        case GateKind::OR: return "OR";
        case GateKind::NOT: return "NOT";
        case GateKind::XOR: return "XOR";
        case GateKind::CONST0: return "CONST0";
        case GateKind::CONST1: return "CONST1";
    }
    return "?";
}

inline int gate_arity(GateKind k) {
    switch (k) {
        case GateKind::AND:
        case GateKind::OR:
        case GateKind::XOR: return 2;
        case GateKind::NOT: return 1;
        default: return 0;
    }
}

struct Gate {
    std::string output;
    GateKind kind;
    std::vector<std::string> operands;
};

/// Error raised by the netlist parser and circuit validation.
/// line/col are 1-based; 0 means "not tied to a source position".
class CircuitError : public std::runtime_error {
  public:
    CircuitError(std::string msg, int line = 0, int col = 0)
        : std::runtime_error(line > 0 ? ("line " + std::to_string(line) + ":" +
                                         std::to_string(col) + ": " + msg)
                                      : msg),
          line(line), col(col) {}
    int line, col;
};

/// Immutable after construction (validate() finalizes). Wire names are unique;
/// every gate operand is an input wire or the output of an earlier gate.
class Circuit {
  public:
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<Gate> gates;

    size_t num_inputs() const { return inputs.size(); }
    size_t num_outputs() const { return outputs.size(); }

    /// Checks all structural invariants and reorders gates topologically.
    /// Throws CircuitError on undefined wires, cycles, duplicate names,
    /// bad arity, or empty input/output lists.
    void validate() {
        if (inputs.empty()) throw CircuitError("circuit has no inputs");
        if (outputs.empty()) throw CircuitError("circuit has no outputs");
        std::unordered_map<std::string, int> def;  // wire -> defining gate (-1: input)
        for (const auto& w : inputs) {
            if (!def.emplace(w, -1).second)
                throw CircuitError("duplicate wire name `" + w + "`");
        }
        for (size_t g = 0; g < gates.size(); ++g) {
            const Gate& gate = gates[g];
            if (int(gate.operands.size()) != gate_arity(gate.kind))
                throw CircuitError("gate `" + gate.output + "`: " +
                                   gate_kind_name(gate.kind) + " takes " +
                                   std::to_string(gate_arity(gate.kind)) + " operands");
            if (!def.emplace(gate.output, int(g)).second)
                throw CircuitError("duplicate wire name `" + gate.output + "`");
        }
        for (const auto& gate : gates)
            for (const auto& op : gate.operands)
                if (!def.count(op))
                    throw CircuitError("undefined wire `" + op + "`");
        std::unordered_set<std::string> outs_seen;
        for (const auto& w : outputs) {
            if (!def.count(w)) throw CircuitError("undefined output wire `" + w + "`");
            if (!outs_seen.insert(w).second)
                throw CircuitError("duplicate output wire `" + w + "`");
        }
        topo_sort(def);
    }

    /// Forward evaluation: gamma = f(alpha). Input length must equal n.
    BitVec evaluate(const BitVec& input) const {
        if (input.size() != inputs.size())
            throw CircuitError("evaluate: input length " + std::to_string(input.size()) +
                               " != n=" + std::to_string(inputs.size()));
        std::unordered_map<std::string, bool> val;
        val.reserve(inputs.size() + gates.size());
        for (size_t i = 0; i < inputs.size(); ++i) val[inputs[i]] = input.get(i);
        for (const auto& g : gates) {
            bool v = false;
            switch (g.kind) {
                case GateKind::AND: v = val.at(g.operands[0]) && val.at(g.operands[1]); break;
                case GateKind::OR:  v = val.at(g.operands[0]) || val.at(g.operands[1]); break;
                case GateKind::XOR: v = val.at(g.operands[0]) != val.at(g.operands[1]); break;
                case GateKind::NOT: v = !val.at(g.operands[0]); break;
                case GateKind::CONST0: v = false; break;
                case GateKind::CONST1: v = true; break;
            }
            val[g.output] = v;
        }
        BitVec out(outputs.size());
        for (size_t i = 0; i < outputs.size(); ++i) out.set(i, val.at(outputs[i]));
        return out;
    }

  private:
    // Kahn's algorithm, stable in declaration order. Detects cycles.
    void topo_sort(const std::unordered_map<std::string, int>& def) {
        size_t ng = gates.size();
        std::vector<int> indeg(ng, 0);
        std::vector<std::vector<int>> succ(ng);
        for (size_t g = 0; g < ng; ++g)
            for (const auto& op : gates[g].operands) {
                int d = def.at(op);
                if (d >= 0) { succ[d].push_back(int(g)); ++indeg[g]; }
            }
        std::vector<int> ready;
        for (size_t g = 0; g < ng; ++g)
            if (indeg[g] == 0) ready.push_back(int(g));
        std::vector<Gate> order;
        order.reserve(ng);
        std::vector<char> emitted(ng, 0);
        // process smallest declaration index first for a stable result
        size_t head = 0;
        while (head < ready.size()) {
            // pick the minimum unprocessed index in `ready`
            size_t best = head;
            for (size_t k = head + 1; k < ready.size(); ++k)
                if (ready[k] < ready[best]) best = k;
            std::swap(ready[head], ready[best]);
            int g = ready[head++];
            emitted[g] = 1;
            order.push_back(gates[g]);
            for (int s : succ[g])
                if (--indeg[s] == 0) ready.push_back(s);
        }
        if (order.size() != ng) {
            for (size_t g = 0; g < ng; ++g)
                if (!emitted[g])
                    throw CircuitError("cyclic definition involving wire `" +
                                       gates[g].output + "`");
        }
        gates = std::move(order);
    }
};

// ---------------------------------------------------------------------------
// Netlist text format
//
//   INPUT(<name>)
//   OUTPUT(<name>)
//   <name> = <KIND>(<args>)      KIND in {AND, OR, NOT, XOR, CONST0, CONST1}
//
// Line oriented, `#` starts a comment, names match [A-Za-z_][A-Za-z0-9_]*.
// Declaration order of INPUT/OUTPUT lines defines bit positions.
// ---------------------------------------------------------------------------

namespace detail {

struct NetlistLexer {
    const std::string& text;
    size_t pos = 0;
    int line = 1, col = 1;

    explicit NetlistLexer(const std::string& t) : text(t) {}

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void advance() {
        if (text[pos] == '\n') { ++line; col = 1; } else { ++col; }
        ++pos;
    }
    void skip_ws_in_line() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    }
    void skip_to_eol() {
        while (!eof() && peek() != '\n') advance();
    }
    static bool name_start(char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
    }
    static bool name_char(char c) { return name_start(c) || (c >= '0' && c <= '9'); }

    std::string expect_name() {
        skip_ws_in_line();
        if (eof() || !name_start(peek()))
            throw CircuitError("expected identifier", line, col);
        std::string s;
        while (!eof() && name_char(peek())) { s.push_back(peek()); advance(); }
        return s;
    }
    void expect_char(char c) {
        skip_ws_in_line();
        if (eof() || peek() != c)
            throw CircuitError(std::string("expected `") + c + "`", line, col);
        advance();
    }
    bool try_char(char c) {
        skip_ws_in_line();
        if (!eof() && peek() == c) { advance(); return true; }
        return false;
    }
    void expect_eol() {
        skip_ws_in_line();
        if (!eof() && peek() == '#') skip_to_eol();
        if (!eof() && peek() != '\n')
            throw CircuitError("unexpected trailing characters", line, col);
        if (!eof()) advance();
    }
};

inline std::optional<GateKind> gate_kind_from(const std::string& s) {
    if (s == "AND") return GateKind::AND;
    if (s == "OR") return GateKind::OR;
    if (s == "NOT") return GateKind::NOT;
    if (s == "XOR") return GateKind::XOR;
    if (s == "CONST0") return GateKind::CONST0;
    if (s == "CONST1") return GateKind::CONST1;
    return std::nullopt;
}

}  // namespace detail

/// Parses netlist source. Gates may reference wires defined later in the file;
/// the result is validated and topologically ordered.
inline Circuit parse_netlist(const std::string& text) {
    detail::NetlistLexer lx(text);
    Circuit c;
    while (!lx.eof()) {
        lx.skip_ws_in_line();
        if (lx.eof()) break;
        if (lx.peek() == '\n') { lx.advance(); continue; }
        if (lx.peek() == '#') { lx.skip_to_eol(); continue; }
        int line = lx.line, col = lx.col;
        std::string head = lx.expect_name();
        if (head == "INPUT" || head == "OUTPUT") {
            lx.expect_char('(');
            std::string name = lx.expect_name();
            lx.expect_char(')');
            lx.expect_eol();
            if (head == "INPUT") c.inputs.push_back(name);
            else c.outputs.push_back(name);
            continue;
        }
        // gate definition: <name> = KIND(args)
        lx.expect_char('=');
        std::string kind_name = lx.expect_name();
        auto kind = detail::gate_kind_from(kind_name);
        if (!kind)
            throw CircuitError("unknown gate kind `" + kind_name + "`", line, col);
        Gate g;
        g.output = head;
        g.kind = *kind;
        lx.expect_char('(');
        if (!lx.try_char(')')) {
            g.operands.push_back(lx.expect_name());
            while (lx.try_char(',')) g.operands.push_back(lx.expect_name());
            lx.expect_char(')');
        }
        lx.expect_eol();
        if (g.output == "INPUT" || g.output == "OUTPUT")
            throw CircuitError("reserved word cannot name a wire", line, col);
        for (const auto& op : g.operands)
            if (op == g.output)
                throw CircuitError("cyclic definition involving wire `" + g.output + "`",
                                   line, col);
        c.gates.push_back(std::move(g));
    }
    c.validate();
    return c;
}

/// Prints a circuit in the netlist format; parse(print(c)) == c structurally.
inline std::string print_netlist(const Circuit& c) {
    std::ostringstream os;
    for (const auto& w : c.inputs) os << "INPUT(" << w << ")\n";
    for (const auto& w : c.outputs) os << "OUTPUT(" << w << ")\n";
    for (const auto& g : c.gates) {
        os << g.output << " = " << gate_kind_name(g.kind) << "(";
        for (size_t i = 0; i < g.operands.size(); ++i) {
            if (i) os << ", ";
            os << g.operands[i];
        }
        os << ")\n";
    }
    return os.str();
}

inline bool structurally_equal(const Circuit& a, const Circuit& b) {
    if (a.inputs != b.inputs || a.outputs != b.outputs) return false;
    if (a.gates.size() != b.gates.size()) return false;
    for (size_t i = 0; i < a.gates.size(); ++i) {
        if (a.gates[i].output != b.gates[i].output) return false;
        if (a.gates[i].kind != b.gates[i].kind) return false;
        if (a.gates[i].operands != b.gates[i].operands) return false;
    }
    return true;
}

}  // namespace ibs
