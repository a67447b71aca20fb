#pragma once

// Shared primitives: dynamic bit vector, counter-based RNG, hex codecs,
// and a small index-based parallel-for. Everything here is deterministic
// and platform-independent (fixed-width arithmetic only).

#include <atomic>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ibs {

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64 core).
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless combine of two 64-bit values into a well-mixed 64-bit value.
inline uint64_t mix64(uint64_t a, uint64_t b) {
    uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}

/// Small deterministic RNG. Sequences depend only on the seed value,
/// never on platform or call site.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds
        (void)splitmix64(state_);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform value in [0, bound). bound must be > 0.
    uint64_t next_below(uint64_t bound) {
        // rejection sampling keeps the distribution exactly uniform
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    bool next_bool() { return (next_u64() & 1) != 0; }

    /// Uniform double in [0,1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    uint64_t state_;
};

// ---------------------------------------------------------------------------
// BitVec: fixed-length vector over {0,1}.
// ---------------------------------------------------------------------------

/// Dynamic bit vector with value semantics. Bit i of an n-bit vector is the
/// i-th coordinate of a point in {0,1}^n; bit 0 is the first coordinate.
class BitVec {
  public:
    BitVec() = default;
    explicit BitVec(size_t n, bool fill = false)
        : n_(n), words_((n + 63) / 64, fill ? ~0ULL : 0ULL) {
        trim();
    }

    static BitVec ones(size_t n) { return BitVec(n, true); }
    static BitVec zeros(size_t n) { return BitVec(n, false); }

    size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }

    bool get(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
    void set(size_t i, bool v) {
        uint64_t m = 1ULL << (i & 63);
        if (v) words_[i >> 6] |= m; else words_[i >> 6] &= ~m;
    }
    void flip(size_t i) { words_[i >> 6] ^= 1ULL << (i & 63); }

    size_t popcount() const {
        size_t c = 0;
        for (uint64_t w : words_) c += size_t(__builtin_popcountll(w));
        return c;
    }

    size_t hamming_distance(const BitVec& o) const {
        if (o.n_ != n_) throw std::invalid_argument("BitVec: length mismatch");
        size_t c = 0;
        for (size_t k = 0; k < words_.size(); ++k)
            c += size_t(__builtin_popcountll(words_[k] ^ o.words_[k]));
        return c;
    }

    bool operator==(const BitVec& o) const { return n_ == o.n_ && words_ == o.words_; }
    bool operator!=(const BitVec& o) const { return !(*this == o); }
    bool operator<(const BitVec& o) const {
        if (n_ != o.n_) return n_ < o.n_;
        for (size_t k = words_.size(); k-- > 0;)
            if (words_[k] != o.words_[k]) return words_[k] < o.words_[k];
        return false;
    }

    uint64_t hash() const {
        uint64_t h = 0xcbf29ce484222325ULL ^ n_;
        for (uint64_t w : words_) h = mix64(h, w);
        return h;
    }

    /// Interpret the low bits of `value` as bits 0..n-1 (bit i = (value>>i)&1).
    static BitVec from_u64(size_t n, uint64_t value) {
        BitVec v(n);
        for (size_t i = 0; i < n && i < 64; ++i) v.set(i, (value >> i) & 1);
        return v;
    }

    /// Fill from an RNG (each bit independent uniform).
    static BitVec random(size_t n, Rng& rng) {
        BitVec v(n);
        for (auto& w : v.words_) w = rng.next_u64();
        v.trim();
        return v;
    }

    /// Hex encoding: character j holds bits 4j..4j+3, bit 4j in the most
    /// significant position of the nibble. Length is ceil(n/4); the bit
    /// length is not recoverable from the string alone.
    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string s;
        s.reserve((n_ + 3) / 4);
        for (size_t j = 0; j * 4 < n_; ++j) {
            unsigned nib = 0;
            for (size_t k = 0; k < 4; ++k) {
                size_t i = j * 4 + k;
                if (i < n_ && get(i)) nib |= 8u >> k;
            }
            s.push_back(digits[nib]);
        }
        return s;
    }

    static BitVec from_hex(size_t n, const std::string& s) {
        if (s.size() != (n + 3) / 4)
            throw std::invalid_argument("BitVec::from_hex: bad length for n=" + std::to_string(n));
        BitVec v(n);
        for (size_t j = 0; j < s.size(); ++j) {
            char c = s[j];
            unsigned nib;
            if (c >= '0' && c <= '9') nib = unsigned(c - '0');
            else if (c >= 'a' && c <= 'f') nib = unsigned(c - 'a') + 10;
            else if (c >= 'A' && c <= 'F') nib = unsigned(c - 'A') + 10;
            else throw std::invalid_argument("BitVec::from_hex: bad digit");
            for (size_t k = 0; k < 4; ++k) {
                size_t i = j * 4 + k;
                bool bit = (nib >> (3 - k)) & 1;
                if (i < n) v.set(i, bit);
                else if (bit) throw std::invalid_argument("BitVec::from_hex: stray bits past n");
            }
        }
        return v;
    }

    std::string to_binary() const {
        std::string s(n_, '0');
        for (size_t i = 0; i < n_; ++i) if (get(i)) s[i] = '1';
        return s;
    }

  private:
    void trim() {
        if (n_ & 63) words_.back() &= (~0ULL) >> (64 - (n_ & 63));
        if (n_ == 0) words_.clear();
    }

    size_t n_ = 0;
    std::vector<uint64_t> words_;
};

struct BitVecHash {
    size_t operator()(const BitVec& v) const { return size_t(v.hash()); }
};

// ---------------------------------------------------------------------------
// parallel_for: index-based work sharing.
// ---------------------------------------------------------------------------

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Callers get
/// deterministic results by writing to slot i only and aggregating in index
/// order afterwards.
template <typename Fn>
void parallel_for(size_t count, int workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    auto run = [&] {
        for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    size_t spawn = std::min<size_t>(size_t(workers) - 1, count - 1);
    std::vector<std::thread> threads;
    threads.reserve(spawn);
    for (size_t w = 0; w < spawn; ++w) threads.emplace_back(run);
    run();
    for (auto& t : threads) t.join();
}

}  // namespace ibs
