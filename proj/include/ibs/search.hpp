#pragma once

// Tabu-search minimization of the resistance function over the Boolean
// hypercube E^n, with a JSONL journal that doubles as the checkpoint format.
//
// Every source of randomness is derived counter-based from the search seed
// (sweep index for neighborhood order and center jumps), so a run restored
// from a journal prefix continues exactly like the uninterrupted run, and
// worker counts never change the trajectory.

#include <fstream>
#include <functional>
#include <unordered_map>

#include "ibs/estimator.hpp"

namespace ibs {

class SearchError : public std::runtime_error {
  public:
    explicit SearchError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SearchConfig {
    int radius = 1;
    double time_limit_s = 86400;                           // wall-clock cap for this run
    uint64_t max_points = std::numeric_limits<uint64_t>::max();  // total evaluated points cap
    uint64_t search_seed = 0;
    int k_escalate = 3;   // non-improving jumps before the jump distance grows
    BitVec initial_chi;   // empty: start from 1^n
};

struct JournalRecord {
    ResistanceEstimate est;
    uint64_t sweep = 0;
    BitVec center;
};

struct SearchResult {
    BitVec chi_best;
    double g_best = std::numeric_limits<double>::infinity();
    uint64_t points_evaluated = 0;
    uint64_t sweeps = 0;
    bool exhausted = false;  // all 2^n points visited
};

using ResistanceFn = std::function<ResistanceEstimate(const BitVec&)>;
using JournalSink = std::function<void(const JournalRecord&)>;
using StopFlagFn = std::function<bool()>;

// ---------------------------------------------------------------------------
// Neighborhood
// ---------------------------------------------------------------------------

/// All chi' != chi with Hamming distance <= radius, in seeded-random order.
inline std::vector<BitVec> neighborhood(const BitVec& chi, int radius, Rng& order_rng) {
    if (radius < 1) throw SearchError("neighborhood: radius must be >= 1");
    size_t n = chi.size();
    std::vector<BitVec> out;
    std::vector<size_t> flips;
    // enumerate flip sets of size 1..radius
    std::function<void(size_t, int)> rec = [&](size_t start, int remaining) {
        if (!flips.empty()) {
            BitVec v = chi;
            for (size_t f : flips) v.flip(f);
            out.push_back(std::move(v));
        }
        if (remaining == 0) return;
        for (size_t i = start; i < n; ++i) {
            flips.push_back(i);
            rec(i + 1, remaining - 1);
            flips.pop_back();
        }
    };
    rec(0, radius);
    order_rng.shuffle(out);
    return out;
}

// ---------------------------------------------------------------------------
// Journal I/O
// ---------------------------------------------------------------------------

inline nlohmann::json journal_record_to_json(const JournalRecord& r) {
    nlohmann::json j = estimate_to_json(r.est);
    j["type"] = "eval";
    j["sweep"] = r.sweep;
    j["center"] = r.center.to_hex();
    return j;
}

inline JournalRecord journal_record_from_json(const nlohmann::json& j) {
    JournalRecord r;
    r.est = estimate_from_json(j);
    r.sweep = j.at("sweep").get<uint64_t>();
    r.center = BitVec::from_hex(r.est.chi.size(), j.at("center").get<std::string>());
    return r;
}

/// Appends one JSON object per line; each line is flushed immediately so an
/// interrupted run leaves a usable checkpoint.
class JournalWriter {
  public:
    JournalWriter() = default;
    JournalWriter(const std::string& path, bool append) {
        out_.open(path, append ? std::ios::app : std::ios::trunc);
        if (!out_) throw SearchError("cannot open journal file: " + path);
    }

    void write_header(const nlohmann::json& config) {
        nlohmann::json j;
        j["type"] = "config";
        j["config"] = config;
        out_ << j.dump() << '\n';
        out_.flush();
    }

    void write_record(const JournalRecord& r) {
        out_ << journal_record_to_json(r).dump() << '\n';
        out_.flush();
    }

  private:
    std::ofstream out_;
};

struct JournalData {
    std::vector<nlohmann::json> configs;
    std::vector<JournalRecord> records;
};

/// Reads a journal. With salvage=false a corrupt line raises SearchError
/// naming the line number; with salvage=true the valid prefix is kept and
/// reading stops at the first bad line.
inline JournalData read_journal_text(const std::string& text, bool salvage = false) {
    JournalData data;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            std::string type = j.at("type").get<std::string>();
            if (type == "config") data.configs.push_back(j.at("config"));
            else if (type == "eval") data.records.push_back(journal_record_from_json(j));
            else throw SearchError("unknown record type `" + type + "`");
        } catch (const std::exception& e) {
            if (salvage) break;
            throw SearchError("journal line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return data;
}

inline JournalData read_journal_file(const std::string& path, bool salvage = false) {
    std::ifstream in(path);
    if (!in) throw SearchError("cannot open journal file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_journal_text(ss.str(), salvage);
}

// ---------------------------------------------------------------------------
// Tabu search
// ---------------------------------------------------------------------------

class TabuSearch {
  public:
    TabuSearch(size_t n, SearchConfig config, ResistanceFn resistance_fn,
               JournalSink sink = {}, StopFlagFn external_stop = {})
        : n_(n), cfg_(std::move(config)), fn_(std::move(resistance_fn)),
          sink_(std::move(sink)), external_stop_(std::move(external_stop)) {
        if (n_ == 0) throw SearchError("TabuSearch: n must be >= 1");
        if (cfg_.initial_chi.empty()) cfg_.initial_chi = BitVec::ones(n_);
        if (cfg_.initial_chi.size() != n_) throw SearchError("initial chi has wrong length");
    }

    /// Rebuilds state from journal records (tabu list, incumbent, sweep
    /// position). The records must come from a run with identical seed and
    /// config, in original order.
    void replay(const std::vector<JournalRecord>& records) {
        if (records.empty()) throw SearchError("restore: nothing to restore (empty journal)");
        if (!tabu_.empty()) throw SearchError("restore: search already has state");
        if (records[0].sweep != 0) throw SearchError("restore: journal does not start at sweep 0");
        for (const auto& r : records) {
            if (r.est.chi.size() != n_) throw SearchError("restore: chi length mismatch");
            if (r.sweep != sweep_) {
                if (r.sweep != sweep_ + 1)
                    throw SearchError("restore: non-contiguous sweep numbers");
                advance_sweep();  // recomputes the same center the original run chose
                center_ = r.center;
            } else if (sweep_ == 0 && tabu_.empty()) {
                center_ = r.center;
            }
            absorb(r.est, /*from_replay=*/true);
        }
    }

    /// Runs Algorithm-1-style minimization until a limit fires or the cube is
    /// exhausted. May be called after replay() to continue a checkpoint.
    SearchResult run() {
        start_ = std::chrono::steady_clock::now();
        if (tabu_.empty()) {
            // initial point: chi_best <- chi_center <- chi_start, G_best <- G(chi_start)
            center_ = cfg_.initial_chi;
            if (!stop()) {
                absorb(fn_(center_), false);
            }
            if (!stop()) advance_sweep();
        } else if (sweep_ == 0) {
            // journal ended right after the initial point
            advance_sweep();
        }
        while (!stop() && !exhausted_) {
            bool evaluated_all = true;
            for (const BitVec& chi : sweep_order()) {
                if (tabu_.count(chi)) continue;
                if (stop()) { evaluated_all = false; break; }
                absorb(fn_(chi), false);
            }
            if (!evaluated_all) break;
            advance_sweep();
        }
        SearchResult res;
        res.chi_best = best_chi_;
        res.g_best = best_g_;
        res.points_evaluated = tabu_.size();
        res.sweeps = sweep_;
        res.exhausted = exhausted_;
        return res;
    }

    const BitVec& best_chi() const { return best_chi_; }
    double best_g() const { return best_g_; }
    uint64_t points_evaluated() const { return tabu_.size(); }
    const std::unordered_map<BitVec, double, BitVecHash>& tabu_list() const { return tabu_; }

  private:
    std::vector<BitVec> sweep_order() {
        Rng rng(mix64(cfg_.search_seed, mix64(0x0ederULL, sweep_)));
        return neighborhood(center_, cfg_.radius, rng);
    }

    void absorb(const ResistanceEstimate& est, bool from_replay) {
        bool inserted = tabu_.emplace(est.chi, est.g_value).second;
        if (!inserted)
            throw SearchError("duplicate chi " + est.chi.to_hex() +
                              (from_replay ? " in journal" : " evaluated"));
        if (est.g_value < best_g_ || tabu_.size() == 1) {
            best_g_ = est.g_value;
            best_chi_ = est.chi;
            improved_this_sweep_ = true;
        }
        if (!from_replay && sink_) sink_({est, sweep_, center_});
    }

    // End-of-sweep transition: recenter on strict improvement, otherwise jump.
    void advance_sweep() {
        if (sweep_ > 0) {
            if (improved_this_sweep_) {
                center_ = best_chi_;
                consecutive_nonimproving_ = 0;
            } else {
                ++consecutive_nonimproving_;
                auto next = get_new_center();
                if (!next) { exhausted_ = true; return; }
                center_ = *next;
            }
        } else {
            center_ = best_chi_;
        }
        ++sweep_;
        improved_this_sweep_ = false;
    }

    /// Seeded jump: random point at Hamming distance 2 from chi_best (distance
    /// grows every k_escalate consecutive failures), never a tabu point.
    /// Returns nullopt once all 2^n points are evaluated.
    std::optional<BitVec> get_new_center() {
        if (n_ < 63 && tabu_.size() >= (1ULL << n_)) return std::nullopt;
        Rng rng(mix64(cfg_.search_seed, mix64(0x6e77c3ULL, sweep_)));
        int base_dist = 2 + int((consecutive_nonimproving_ - 1) / uint64_t(std::max(1, cfg_.k_escalate)));
        for (int dist = std::min<int>(base_dist, int(n_)); dist <= int(n_); ++dist) {
            for (int attempt = 0; attempt < 64; ++attempt) {
                BitVec cand = random_at_distance(best_chi_, size_t(dist), rng);
                if (!tabu_.count(cand)) return cand;
            }
            // exhaustive pass over the sphere when it is small enough
            if (sphere_size(n_, size_t(dist)) <= 4096) {
                auto sphere = enumerate_sphere(best_chi_, size_t(dist));
                rng.shuffle(sphere);
                for (const auto& cand : sphere)
                    if (!tabu_.count(cand)) return cand;
            }
        }
        for (int attempt = 0; attempt < 1024; ++attempt) {
            BitVec cand = BitVec::random(n_, rng);
            if (!tabu_.count(cand)) return cand;
        }
        if (n_ <= 30) {
            for (uint64_t a = 0; a < (1ULL << n_); ++a) {
                BitVec cand = BitVec::from_u64(n_, a);
                if (!tabu_.count(cand)) return cand;
            }
            return std::nullopt;
        }
        throw SearchError("get_new_center: could not find an unvisited point");
    }

    static BitVec random_at_distance(const BitVec& from, size_t dist, Rng& rng) {
        size_t n = from.size();
        std::vector<size_t> pos(n);
        for (size_t i = 0; i < n; ++i) pos[i] = i;
        BitVec out = from;
        for (size_t k = 0; k < dist; ++k) {
            size_t j = k + size_t(rng.next_below(n - k));
            std::swap(pos[k], pos[j]);
            out.flip(pos[k]);
        }
        return out;
    }

    static double sphere_size(size_t n, size_t d) {
        double c = 1;
        for (size_t i = 0; i < d; ++i) c = c * double(n - i) / double(i + 1);
        return c;
    }

    static std::vector<BitVec> enumerate_sphere(const BitVec& from, size_t dist) {
        std::vector<BitVec> out;
        std::vector<size_t> flips;
        size_t n = from.size();
        std::function<void(size_t)> rec = [&](size_t start) {
            if (flips.size() == dist) {
                BitVec v = from;
                for (size_t f : flips) v.flip(f);
                out.push_back(std::move(v));
                return;
            }
            for (size_t i = start; i + (dist - flips.size()) <= n; ++i) {
                flips.push_back(i);
                rec(i + 1);
                flips.pop_back();
            }
        };
        rec(0);
        return out;
    }

    bool stop() {
        if (external_stop_ && external_stop_()) return true;
        if (tabu_.size() >= cfg_.max_points) return true;
        double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        return el > cfg_.time_limit_s;
    }

    size_t n_;
    SearchConfig cfg_;
    ResistanceFn fn_;
    JournalSink sink_;
    StopFlagFn external_stop_;

    std::unordered_map<BitVec, double, BitVecHash> tabu_;
    BitVec best_chi_;
    double best_g_ = std::numeric_limits<double>::infinity();
    BitVec center_;
    uint64_t sweep_ = 0;
    bool improved_this_sweep_ = false;
    uint64_t consecutive_nonimproving_ = 0;
    bool exhausted_ = false;
    std::chrono::steady_clock::time_point start_;
};

/// Estimator-backed evaluator: the production resistance function. With
/// reuse_sample (default) every point shares one alpha sample (common random
/// numbers); otherwise the sample seed is re-derived per point.
inline ResistanceFn make_resistance_evaluator(const CnfFormula& formula,
                                              EstimatorOptions options,
                                              bool reuse_sample = true) {
    return [&formula, options, reuse_sample](const BitVec& chi) {
        EstimatorOptions opt = options;
        if (!reuse_sample) opt.sample_seed = mix64(options.sample_seed, chi.hash());
        return resistance(formula, Backdoor{chi}, opt);
    };
}

/// Algorithm-1 entry point over a formula with roles.
inline SearchResult tabu_minimize(const CnfFormula& formula, const SearchConfig& config,
                                  const EstimatorOptions& estimator_options,
                                  JournalSink sink = {}, StopFlagFn stop = {},
                                  bool reuse_sample = true) {
    TabuSearch ts(formula.roles().inputs.size(), config,
                  make_resistance_evaluator(formula, estimator_options, reuse_sample),
                  std::move(sink), std::move(stop));
    return ts.run();
}

}  // namespace ibs
