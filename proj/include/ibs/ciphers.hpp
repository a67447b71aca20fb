#pragma once

// Built-in toy cipher families and their netlist generators. Each family turns
// a validated CipherSpec into a Circuit whose inputs are the key bits and whose
// outputs are keystream/ciphertext bits; IV and plaintext material is folded in
// as CONST gates.
//
// Conventions shared with the direct simulators used as test oracles:
//
//  * LFSR state s[0..L-1]: output bit is s[0]; feedback is the XOR of s[p-1]
//    for tap positions p (1-based); the register shifts down and the feedback
//    bit enters at index L-1. Key bits fill s[0..L-1] in order.
//  * TRIVIUM_FAMILY: R registers, register i of length L_i, newest bit at
//    index 0. Per step: c_i = S_i[mid_i] ^ S_i[L_i-1],
//    a_i = S_i[and1_i] & S_i[and2_i],
//    t_i = c_i ^ a_i ^ S_{i+1}[cross_{i+1}] (indices mod R); keystream bit
//    z = c_0 ^ ... ^ c_{R-1}; register i shifts down one and t_{i-1} becomes
//    its new index-0 bit. The first `warmup` keystream bits are discarded.
//  * Nibble value of bits b[4j..4j+3] is b[4j]*8 + b[4j+1]*4 + b[4j+2]*2 +
//    b[4j+3] (matches the BitVec hex convention).
//  * TOY_FEISTEL on a 2h-bit block (L = bits 0..h-1, R = bits h..2h-1):
//    round t maps (L,R) -> (R, L ^ F(R, rk_t)) with
//    F(x,k) = rotl(sbox_layer(x ^ k), rot) and rk_t[j] = key[(t*stride+j) mod n].
//  * TOY_SPN on a b-bit block: rounds t = 0..rounds-1 apply key XOR with rk_t,
//    the sbox layer, and (except in the last round) the bit permutation
//    new[perm[i]] = old[i]; a final whitening key rk_rounds is XORed in.

#include <array>
#include <map>
#include <numeric>
#include <set>
#include <variant>

#include "ibs/circuit.hpp"

namespace ibs {

enum class CipherFamily { GEFFE, TRIVIUM_FAMILY, TOY_FEISTEL, TOY_SPN };

struct GeffeParams {
    std::vector<int> lengths;             // exactly 3 registers
    std::vector<std::vector<int>> taps;   // per register, 1-based positions
    int output_bits = 0;
};

struct TriviumFamilyParams {
    std::vector<int> lengths;             // >= 2 registers
    std::vector<int> mid, and1, and2, cross;  // 0-based taps, one per register
    int warmup = 0;
    int output_bits = 0;
};

struct FeistelParams {
    int half_width = 0;   // block is 2*half_width bits; multiple of 4
    int rounds = 0;
    int key_bits = 0;
    int rot = 0;
    int stride = 0;
    std::array<uint8_t, 16> sbox{};
    BitVec plaintext;     // 2*half_width bits
};

struct SpnParams {
    int block_bits = 0;   // multiple of 4
    int rounds = 0;
    int key_bits = 0;
    int stride = 0;
    std::array<uint8_t, 16> sbox{};
    std::vector<int> perm;  // permutation of 0..block_bits-1
    BitVec plaintext;
};

struct CipherSpec {
    CipherFamily family;
    std::variant<GeffeParams, TriviumFamilyParams, FeistelParams, SpnParams> params;

    int num_key_bits() const {
        switch (family) {
            case CipherFamily::GEFFE: {
                const auto& p = std::get<GeffeParams>(params);
                return std::accumulate(p.lengths.begin(), p.lengths.end(), 0);
            }
            case CipherFamily::TRIVIUM_FAMILY: {
                const auto& p = std::get<TriviumFamilyParams>(params);
                return std::accumulate(p.lengths.begin(), p.lengths.end(), 0);
            }
            case CipherFamily::TOY_FEISTEL: return std::get<FeistelParams>(params).key_bits;
            case CipherFamily::TOY_SPN: return std::get<SpnParams>(params).key_bits;
        }
        return 0;
    }

    int num_output_bits() const {
        switch (family) {
            case CipherFamily::GEFFE: return std::get<GeffeParams>(params).output_bits;
            case CipherFamily::TRIVIUM_FAMILY:
                return std::get<TriviumFamilyParams>(params).output_bits;
            case CipherFamily::TOY_FEISTEL:
                return 2 * std::get<FeistelParams>(params).half_width;
            case CipherFamily::TOY_SPN: return std::get<SpnParams>(params).block_bits;
        }
        return 0;
    }
};

class CipherSpecError : public std::runtime_error {
  public:
    explicit CipherSpecError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Spec file parsing: `key = value value ...` lines, `#` comments.
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, std::vector<std::string>> parse_kv_file(const std::string& text) {
    std::map<std::string, std::vector<std::string>> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string eq;
        if (!(ls >> eq) || eq != "=")
            throw CipherSpecError("line " + std::to_string(lineno) + ": expected `key = value`");
        std::vector<std::string> vals;
        std::string tok;
        while (ls >> tok) vals.push_back(tok);
        if (vals.empty())
            throw CipherSpecError("line " + std::to_string(lineno) + ": missing value for `" + key + "`");
        if (!kv.emplace(key, std::move(vals)).second)
            throw CipherSpecError("line " + std::to_string(lineno) + ": duplicate key `" + key + "`");
    }
    return kv;
}

class KvReader {
  public:
    explicit KvReader(std::map<std::string, std::vector<std::string>> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& k) const { return kv_.count(k) != 0; }

    int get_int(const std::string& k) {
        auto v = get_ints(k);
        if (v.size() != 1) throw CipherSpecError("`" + k + "`: expected a single integer");
        return v[0];
    }
    int get_int_or(const std::string& k, int dflt) { return has(k) ? get_int(k) : dflt; }

    std::vector<int> get_ints(const std::string& k) {
        auto it = kv_.find(k);
        if (it == kv_.end()) throw CipherSpecError("missing key `" + k + "`");
        used_.insert(k);
        std::vector<int> out;
        for (const auto& s : it->second) {
            try {
                size_t idx = 0;
                int val = std::stoi(s, &idx);
                if (idx != s.size()) throw std::invalid_argument(s);
                out.push_back(val);
            } catch (const std::exception&) {
                throw CipherSpecError("`" + k + "`: bad integer `" + s + "`");
            }
        }
        return out;
    }

    std::string get_word(const std::string& k) {
        auto it = kv_.find(k);
        if (it == kv_.end()) throw CipherSpecError("missing key `" + k + "`");
        if (it->second.size() != 1) throw CipherSpecError("`" + k + "`: expected a single value");
        used_.insert(k);
        return it->second[0];
    }

    void reject_unknown() const {
        for (const auto& [k, v] : kv_)
            if (!used_.count(k)) throw CipherSpecError("unknown key `" + k + "`");
    }

  private:
    std::map<std::string, std::vector<std::string>> kv_;
    std::set<std::string> used_;
};

inline std::array<uint8_t, 16> read_sbox(KvReader& kv) {
    auto vals = kv.get_ints("sbox");
    if (vals.size() != 16) throw CipherSpecError("sbox: expected 16 entries");
    std::array<uint8_t, 16> sbox{};
    std::array<bool, 16> seen{};
    for (size_t i = 0; i < 16; ++i) {
        if (vals[i] < 0 || vals[i] > 15 || seen[size_t(vals[i])])
            throw CipherSpecError("sbox: entries must form a permutation of 0..15");
        seen[size_t(vals[i])] = true;
        sbox[i] = uint8_t(vals[i]);
    }
    return sbox;
}

}  // namespace detail

inline CipherSpec parse_cipher_spec(const std::string& text) {
    detail::KvReader kv(detail::parse_kv_file(text));
    std::string family = kv.get_word("family");
    CipherSpec spec;
    if (family == "geffe") {
        GeffeParams p;
        p.lengths = kv.get_ints("lengths");
        if (p.lengths.size() != 3) throw CipherSpecError("geffe: `lengths` must have 3 entries");
        for (int i = 0; i < 3; ++i) {
            int L = p.lengths[size_t(i)];
            if (L < 2) throw CipherSpecError("geffe: register length must be >= 2");
            auto taps = kv.get_ints("taps" + std::to_string(i + 1));
            if (taps.empty()) throw CipherSpecError("geffe: empty tap list");
            for (int t : taps)
                if (t < 1 || t > L) throw CipherSpecError("geffe: tap out of range");
            p.taps.push_back(taps);
        }
        p.output_bits = kv.get_int("output_bits");
        if (p.output_bits < 1) throw CipherSpecError("output_bits must be >= 1");
        spec.family = CipherFamily::GEFFE;
        spec.params = std::move(p);
    } else if (family == "trivium_family") {
        TriviumFamilyParams p;
        p.lengths = kv.get_ints("lengths");
        size_t R = p.lengths.size();
        if (R < 2) throw CipherSpecError("trivium_family: need >= 2 registers");
        p.mid = kv.get_ints("mid");
        p.and1 = kv.get_ints("and1");
        p.and2 = kv.get_ints("and2");
        p.cross = kv.get_ints("cross");
        for (const auto* taps : {&p.mid, &p.and1, &p.and2, &p.cross})
            if (taps->size() != R)
                throw CipherSpecError("trivium_family: tap lists must have one entry per register");
        for (size_t i = 0; i < R; ++i) {
            int L = p.lengths[i];
            if (L < 3) throw CipherSpecError("trivium_family: register length must be >= 3");
            for (int t : {p.mid[i], p.and1[i], p.and2[i], p.cross[i]})
                if (t < 0 || t >= L) throw CipherSpecError("trivium_family: tap out of range");
        }
        p.warmup = kv.get_int_or("warmup", std::accumulate(p.lengths.begin(), p.lengths.end(), 0));
        if (p.warmup < 0) throw CipherSpecError("warmup must be >= 0");
        p.output_bits = kv.get_int("output_bits");
        if (p.output_bits < 1) throw CipherSpecError("output_bits must be >= 1");
        spec.family = CipherFamily::TRIVIUM_FAMILY;
        spec.params = std::move(p);
    } else if (family == "toy_feistel") {
        FeistelParams p;
        p.half_width = kv.get_int("half_width");
        if (p.half_width < 4 || p.half_width % 4 != 0)
            throw CipherSpecError("toy_feistel: half_width must be a positive multiple of 4");
        p.rounds = kv.get_int("rounds");
        if (p.rounds < 1) throw CipherSpecError("rounds must be >= 1");
        p.key_bits = kv.get_int("key_bits");
        if (p.key_bits < 1) throw CipherSpecError("key_bits must be >= 1");
        p.rot = kv.get_int_or("rot", 1);
        if (p.rot < 0 || p.rot >= p.half_width) throw CipherSpecError("rot out of range");
        p.stride = kv.get_int_or("stride", p.half_width);
        if (p.stride < 1) throw CipherSpecError("stride must be >= 1");
        p.sbox = detail::read_sbox(kv);
        p.plaintext = BitVec::from_hex(size_t(2 * p.half_width), kv.get_word("plaintext"));
        spec.family = CipherFamily::TOY_FEISTEL;
        spec.params = std::move(p);
    } else if (family == "toy_spn") {
        SpnParams p;
        p.block_bits = kv.get_int("block_bits");
        if (p.block_bits < 4 || p.block_bits % 4 != 0)
            throw CipherSpecError("toy_spn: block_bits must be a positive multiple of 4");
        p.rounds = kv.get_int("rounds");
        if (p.rounds < 1) throw CipherSpecError("rounds must be >= 1");
        p.key_bits = kv.get_int("key_bits");
        if (p.key_bits < 1) throw CipherSpecError("key_bits must be >= 1");
        p.stride = kv.get_int_or("stride", p.block_bits);
        if (p.stride < 1) throw CipherSpecError("stride must be >= 1");
        p.sbox = detail::read_sbox(kv);
        if (kv.has("perm")) {
            p.perm = kv.get_ints("perm");
        } else {
            // default: nibble transpose (bit i of nibble j -> bit j of nibble i's row)
            int b = p.block_bits, nn = b / 4;
            p.perm.resize(size_t(b));
            for (int i = 0; i < b; ++i) p.perm[size_t(i)] = (i % 4) * nn + i / 4;
        }
        if (int(p.perm.size()) != p.block_bits)
            throw CipherSpecError("perm: expected block_bits entries");
        std::vector<bool> seen(size_t(p.block_bits), false);
        for (int x : p.perm) {
            if (x < 0 || x >= p.block_bits || seen[size_t(x)])
                throw CipherSpecError("perm: not a permutation");
            seen[size_t(x)] = true;
        }
        p.plaintext = BitVec::from_hex(size_t(p.block_bits), kv.get_word("plaintext"));
        spec.family = CipherFamily::TOY_SPN;
        spec.params = std::move(p);
    } else {
        throw CipherSpecError("unknown family `" + family + "`");
    }
    kv.reject_unknown();
    return spec;
}

// ---------------------------------------------------------------------------
// Netlist builders
// ---------------------------------------------------------------------------

namespace detail {

class NetlistBuilder {
  public:
    std::string add_input(const std::string& name) {
        c_.inputs.push_back(name);
        return name;
    }
    void add_output(const std::string& wire) { c_.outputs.push_back(wire); }

    std::string emit(GateKind k, std::vector<std::string> ops, const std::string& name = "") {
        Gate g;
        g.output = name.empty() ? fresh() : name;
        g.kind = k;
        g.operands = std::move(ops);
        c_.gates.push_back(g);
        return c_.gates.back().output;
    }

    std::string and_(const std::string& a, const std::string& b) { return emit(GateKind::AND, {a, b}); }
    std::string or_(const std::string& a, const std::string& b) { return emit(GateKind::OR, {a, b}); }
    std::string xor_(const std::string& a, const std::string& b) { return emit(GateKind::XOR, {a, b}); }

    std::string not_(const std::string& a) {
        auto it = not_cache_.find(a);
        if (it != not_cache_.end()) return it->second;
        std::string w = emit(GateKind::NOT, {a});
        not_cache_.emplace(a, w);
        return w;
    }

    std::string zero() {
        if (zero_.empty()) zero_ = emit(GateKind::CONST0, {}, "zero");
        return zero_;
    }
    std::string one() {
        if (one_.empty()) one_ = emit(GateKind::CONST1, {}, "one");
        return one_;
    }
    std::string constant(bool v) { return v ? one() : zero(); }

    std::string xor_tree(const std::vector<std::string>& ws) {
        std::string acc = ws.at(0);
        for (size_t i = 1; i < ws.size(); ++i) acc = xor_(acc, ws[i]);
        return acc;
    }
    std::string or_tree(const std::vector<std::string>& ws) {
        if (ws.empty()) return zero();
        std::string acc = ws[0];
        for (size_t i = 1; i < ws.size(); ++i) acc = or_(acc, ws[i]);
        return acc;
    }
    std::string and_tree(const std::vector<std::string>& ws) {
        std::string acc = ws.at(0);
        for (size_t i = 1; i < ws.size(); ++i) acc = and_(acc, ws[i]);
        return acc;
    }

    /// sbox applied to 4 wires (bit 0 of `in` is the nibble MSB).
    std::vector<std::string> sbox4(const std::array<uint8_t, 16>& sbox,
                                   const std::vector<std::string>& in) {
        std::vector<std::string> lits_pos = in, lits_neg;
        for (const auto& w : in) lits_neg.push_back(not_(w));
        std::vector<std::string> out(4);
        for (int bit = 0; bit < 4; ++bit) {
            std::vector<std::string> minterms;
            for (int v = 0; v < 16; ++v) {
                if (!((sbox[size_t(v)] >> (3 - bit)) & 1)) continue;
                std::vector<std::string> lits;
                for (int k = 0; k < 4; ++k)
                    lits.push_back(((v >> (3 - k)) & 1) ? lits_pos[size_t(k)] : lits_neg[size_t(k)]);
                minterms.push_back(and_tree(lits));
            }
            out[size_t(bit)] = or_tree(minterms);
        }
        return out;
    }

    /// Per-nibble sbox layer over a full word of wires (width multiple of 4).
    std::vector<std::string> sbox_layer(const std::array<uint8_t, 16>& sbox,
                                        const std::vector<std::string>& in) {
        std::vector<std::string> out;
        for (size_t j = 0; j < in.size(); j += 4) {
            auto nib = sbox4(sbox, {in[j], in[j + 1], in[j + 2], in[j + 3]});
            out.insert(out.end(), nib.begin(), nib.end());
        }
        return out;
    }

    Circuit finish() {
        c_.validate();
        return std::move(c_);
    }

  private:
    std::string fresh() { return "g" + std::to_string(counter_++); }

    Circuit c_;
    int counter_ = 0;
    std::string zero_, one_;
    std::unordered_map<std::string, std::string> not_cache_;
};

inline std::vector<std::string> key_wires(NetlistBuilder& b, int n) {
    std::vector<std::string> k;
    for (int i = 0; i < n; ++i) k.push_back(b.add_input("k" + std::to_string(i)));
    return k;
}

inline Circuit build_geffe(const GeffeParams& p) {
    NetlistBuilder b;
    std::vector<std::vector<std::string>> state(3);
    {
        int off = 0;
        for (int r = 0; r < 3; ++r) {
            for (int i = 0; i < p.lengths[size_t(r)]; ++i)
                state[size_t(r)].push_back(b.add_input("k" + std::to_string(off + i)));
            off += p.lengths[size_t(r)];
        }
    }
    for (int t = 0; t < p.output_bits; ++t) {
        std::array<std::string, 3> out;
        for (int r = 0; r < 3; ++r) {
            auto& s = state[size_t(r)];
            out[size_t(r)] = s[0];
            std::vector<std::string> tap_wires;
            for (int tap : p.taps[size_t(r)]) tap_wires.push_back(s[size_t(tap - 1)]);
            std::string fb = b.xor_tree(tap_wires);
            s.erase(s.begin());
            s.push_back(fb);
        }
        // combiner: (s1 & s2) ^ (~s1 & s3)
        std::string t1 = b.and_(out[0], out[1]);
        std::string t2 = b.and_(b.not_(out[0]), out[2]);
        b.emit(GateKind::XOR, {t1, t2}, "z" + std::to_string(t));
        b.add_output("z" + std::to_string(t));
    }
    return b.finish();
}

inline Circuit build_trivium_family(const TriviumFamilyParams& p) {
    NetlistBuilder b;
    size_t R = p.lengths.size();
    std::vector<std::vector<std::string>> state(R);
    {
        int off = 0;
        for (size_t r = 0; r < R; ++r) {
            for (int i = 0; i < p.lengths[r]; ++i)
                state[r].push_back(b.add_input("k" + std::to_string(off + i)));
            off += p.lengths[r];
        }
    }
    int produced = 0;
    for (int t = 0; t < p.warmup + p.output_bits; ++t) {
        std::vector<std::string> c(R), fb(R);
        for (size_t i = 0; i < R; ++i) {
            const auto& s = state[i];
            c[i] = b.xor_(s[size_t(p.mid[i])], s.back());
            std::string a = b.and_(s[size_t(p.and1[i])], s[size_t(p.and2[i])]);
            size_t nx = (i + 1) % R;
            fb[nx] = b.xor_(b.xor_(c[i], a), state[nx][size_t(p.cross[nx])]);
        }
        if (t >= p.warmup) {
            std::string z = c[0];
            for (size_t i = 1; i < R; ++i) z = b.xor_(z, c[i]);
            std::string name = "z" + std::to_string(produced++);
            b.emit(GateKind::XOR, {z, b.zero()}, name);
            b.add_output(name);
        }
        for (size_t i = 0; i < R; ++i) {
            auto& s = state[i];
            s.pop_back();
            s.insert(s.begin(), fb[i]);
        }
    }
    return b.finish();
}

inline std::vector<std::string> round_key(const std::vector<std::string>& key, int t,
                                          int stride, int width) {
    std::vector<std::string> rk;
    int n = int(key.size());
    for (int j = 0; j < width; ++j) rk.push_back(key[size_t((t * stride + j) % n)]);
    return rk;
}

inline Circuit build_feistel(const FeistelParams& p) {
    NetlistBuilder b;
    auto key = key_wires(b, p.key_bits);
    int h = p.half_width;
    std::vector<std::string> left, right;
    for (int i = 0; i < h; ++i) left.push_back(b.constant(p.plaintext.get(size_t(i))));
    for (int i = 0; i < h; ++i) right.push_back(b.constant(p.plaintext.get(size_t(h + i))));
    for (int t = 0; t < p.rounds; ++t) {
        auto rk = round_key(key, t, p.stride, h);
        std::vector<std::string> fx;
        for (int i = 0; i < h; ++i) fx.push_back(b.xor_(right[size_t(i)], rk[size_t(i)]));
        fx = b.sbox_layer(p.sbox, fx);
        std::vector<std::string> rot(size_t(h));
        for (int i = 0; i < h; ++i) rot[size_t(i)] = fx[size_t((i + p.rot) % h)];
        std::vector<std::string> new_right;
        for (int i = 0; i < h; ++i) new_right.push_back(b.xor_(left[size_t(i)], rot[size_t(i)]));
        left = right;
        right = new_right;
    }
    for (int i = 0; i < 2 * h; ++i) {
        std::string w = i < h ? left[size_t(i)] : right[size_t(i - h)];
        std::string name = "z" + std::to_string(i);
        b.emit(GateKind::XOR, {w, b.zero()}, name);
        b.add_output(name);
    }
    return b.finish();
}

inline Circuit build_spn(const SpnParams& p) {
    NetlistBuilder b;
    auto key = key_wires(b, p.key_bits);
    int w = p.block_bits;
    std::vector<std::string> st;
    for (int i = 0; i < w; ++i) st.push_back(b.constant(p.plaintext.get(size_t(i))));
    for (int t = 0; t < p.rounds; ++t) {
        auto rk = round_key(key, t, p.stride, w);
        for (int i = 0; i < w; ++i) st[size_t(i)] = b.xor_(st[size_t(i)], rk[size_t(i)]);
        st = b.sbox_layer(p.sbox, st);
        if (t + 1 < p.rounds) {
            std::vector<std::string> permuted(size_t(w));
            for (int i = 0; i < w; ++i) permuted[size_t(p.perm[size_t(i)])] = st[size_t(i)];
            st = permuted;
        }
    }
    auto rk = round_key(key, p.rounds, p.stride, w);
    for (int i = 0; i < w; ++i) st[size_t(i)] = b.xor_(st[size_t(i)], rk[size_t(i)]);
    for (int i = 0; i < w; ++i) {
        std::string name = "z" + std::to_string(i);
        b.emit(GateKind::XOR, {st[size_t(i)], b.zero()}, name);
        b.add_output(name);
    }
    return b.finish();
}

}  // namespace detail

/// Builds the netlist for a validated cipher spec. Inputs are key bits
/// k0..k(n-1); outputs are z0..z(m-1).
inline Circuit generate_cipher(const CipherSpec& spec) {
    switch (spec.family) {
        case CipherFamily::GEFFE:
            return detail::build_geffe(std::get<GeffeParams>(spec.params));
        case CipherFamily::TRIVIUM_FAMILY:
            return detail::build_trivium_family(std::get<TriviumFamilyParams>(spec.params));
        case CipherFamily::TOY_FEISTEL:
            return detail::build_feistel(std::get<FeistelParams>(spec.params));
        case CipherFamily::TOY_SPN:
            return detail::build_spn(std::get<SpnParams>(spec.params));
    }
    throw CipherSpecError("unreachable");
}

}  // namespace ibs
