#ifndef TOEPLITZ_WORDS_HPP
#define TOEPLITZ_WORDS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "toeplitz/ntcore.hpp"
#include "toeplitz/rational.hpp"

namespace toeplitz {

enum class Symbol : uint8_t { Zero = 0, One = 1, Hole = 2 };

char symbolChar(Symbol s);
Symbol symbolFromChar(char c);

/// Mutable packed 2-bit symbol array used while assembling words.
class SymbolBuffer {
public:
    SymbolBuffer() = default;
    explicit SymbolBuffer(uint64_t n, Symbol fill = Symbol::Hole);

    uint64_t size() const { return n_; }
    Symbol get(uint64_t i) const {
        return (Symbol)((words_[i >> 5] >> ((i & 31) * 2)) & 3);
    }
    void set(uint64_t i, Symbol s) {
        uint64_t& w = words_[i >> 5];
        int sh = (int)(i & 31) * 2;
        w = (w & ~(3ull << sh)) | ((uint64_t)s << sh);
    }
    const std::vector<uint64_t>& words() const { return words_; }

private:
    friend class PartialWord;
    uint64_t n_ = 0;
    std::vector<uint64_t> words_;
};

/// Immutable partial word over {0,1,?}. Packed 2 bits per symbol; long words
/// switch to run-length storage when the runs actually compress.
class PartialWord {
public:
    PartialWord() = default;
    explicit PartialWord(std::string_view text);       // over "01?"
    explicit PartialWord(SymbolBuffer&& buffer);
    static PartialWord fromRuns(const std::vector<std::pair<Symbol, uint64_t>>& runs);

    uint64_t size() const { return n_; }
    uint64_t holeCount() const { return holes_; }
    bool rle() const { return !runs_.empty() || (n_ > 0 && packed_.empty()); }

    Symbol at(uint64_t i) const;

    /// Maximal runs of equal symbols, in order: f(symbol, start, length).
    template <typename F>
    void forEachRun(F&& f) const {
        if (n_ == 0) return;
        if (rle()) {
            uint64_t start = 0;
            for (uint64_t r : runs_) {
                Symbol s = (Symbol)(r >> 62);
                uint64_t len = r & kLenMask;
                f(s, start, len);
                start += len;
            }
            return;
        }
        Symbol cur = at(0);
        uint64_t start = 0;
        for (uint64_t i = 1; i < n_; ++i) {
            Symbol s = at(i);
            if (s != cur) {
                f(cur, start, i - start);
                cur = s;
                start = i;
            }
        }
        f(cur, start, n_ - start);
    }

    template <typename F>
    void forEachHole(F&& f) const {
        forEachRun([&](Symbol s, uint64_t start, uint64_t len) {
            if (s == Symbol::Hole)
                for (uint64_t i = 0; i < len; ++i) f(start + i);
        });
    }

    std::string toString() const;
    bool operator==(const PartialWord& o) const;

    /// Tile `copies` copies of this word into a buffer (word-level bit blits,
    /// not per-symbol writes).
    SymbolBuffer tiled(uint64_t copies) const;

    /// Write this word into dst starting at symbol position pos.
    void blitInto(SymbolBuffer& dst, uint64_t pos) const;

private:
    static constexpr uint64_t kLenMask = (1ull << 62) - 1;
    static constexpr uint64_t kPackedLimit = 1ull << 20;
    static constexpr uint64_t kRleCompressionFactor = 32;

    void finalize(SymbolBuffer&& buf);

    uint64_t n_ = 0;
    uint64_t holes_ = 0;
    std::vector<uint64_t> packed_;  // 32 symbols per word
    std::vector<uint64_t> runs_;    // symbol in top 2 bits, length below
    std::vector<uint64_t> runStarts_;
};

struct Level {
    uint64_t modulus;
    PartialWord word;
};

struct ConstructionMeta {
    std::string kind = "manual";  // "a" | "b" | "iwanik" | "manual"
    int64_t k = 0, l = 0;
    std::string poly;             // iwanik only, canonical text
    std::string mode;             // "strict" | "relaxed" | ""
    std::string fillPolicy = "zero";
    uint64_t seed = 0;
};

/// Divisibility tower (n_t) with partial words (x_t) and optional checkpoint
/// scales from the construction that produced it. Immutable after build.
class ViablePair {
public:
    ViablePair(std::vector<Level> levels, std::vector<uint64_t> checkpoints = {},
               ConstructionMeta meta = {});
    /// Levels given as strings over "01?"; moduli are the string lengths.
    static ViablePair fromStrings(const std::vector<std::string>& words,
                                  std::vector<uint64_t> checkpoints = {},
                                  ConstructionMeta meta = {});

    const std::vector<Level>& levels() const { return levels_; }
    size_t levelCount() const { return levels_.size(); }
    size_t topLevel() const { return levels_.size() - 1; }
    uint64_t modulus(size_t t) const { return levels_[t].modulus; }
    const PartialWord& word(size_t t) const { return levels_[t].word; }
    uint64_t topModulus() const { return levels_.back().modulus; }
    const std::vector<uint64_t>& checkpoints() const { return checkpoints_; }
    const ConstructionMeta& meta() const { return meta_; }

private:
    std::vector<Level> levels_;
    std::vector<uint64_t> checkpoints_;
    ConstructionMeta meta_;
};

// ---------------------------------------------------------------------------
// viability

struct ViabilityViolation {
    enum class Kind { Divisibility, Refinement, Boundary };
    Kind kind;
    size_t level;    // level where the violation shows
    uint64_t index;  // offending position
    std::string detail;
};

struct ViabilityReport {
    bool viable = true;
    std::optional<ViabilityViolation> first;
};

/// Checks refinement between consecutive levels, and the boundary condition
/// (positions i and -i resolved at a common level, indices mod n_t) for all
/// i < n_{T-1} -- the range the materialized tower is already responsible
/// for. Single-level pairs owe no boundary resolution yet.
ViabilityReport viabilityCheck(const ViablePair& pair);

// ---------------------------------------------------------------------------
// symbol resolution

struct SymbolLookup {
    Symbol symbol;
    size_t level;  // smallest resolving level; top level if still a hole
};

/// x(i) for any integer i: first non-hole value of x_t(i mod n_t) across
/// levels (negative i reduce via n_t + (i mod n_t)).
SymbolLookup symbolAt(const ViablePair& pair, int64_t i);

// ---------------------------------------------------------------------------
// hole statistics

struct LevelQuestionStats {
    uint64_t modulus = 0;
    uint64_t holes = 0;
    Rational holeRatio{0};                  // ?_t / n_t
    std::optional<uint64_t> rhoK;           // rho_k(n_t) when k supplied and affordable
    std::optional<Rational> weightedRatio;  // ?_t * rho_k(n_t) / n_t
};

std::vector<LevelQuestionStats> questionStats(const ViablePair& pair,
                                              std::optional<uint64_t> k = std::nullopt);

// ---------------------------------------------------------------------------
// periodicity

/// Residues r mod s whose whole progression inside [0, w.size()) carries
/// exactly the symbol eps (holes disqualify).
ResidueSet perResidues(const PartialWord& w, uint64_t s, Symbol eps);

enum class PeriodVerdict { Essential, NotEssential, Unknown };

struct DivisorCertificate {
    uint64_t s = 0;
    std::vector<uint64_t> certifiedZero;  // residues mod s, whole class resolved to 0
    std::vector<uint64_t> certifiedOne;
    std::vector<uint64_t> unknown;        // classes blocked by holes
    PeriodVerdict verdict = PeriodVerdict::Unknown;

    bool certified(uint64_t r) const;
    bool possible(uint64_t r) const;  // certified or unknown
};

struct PeriodCertificate {
    size_t level = 0;
    uint64_t modulus = 0;
    std::vector<DivisorCertificate> divisors;  // one per s | n_T, ascending

    const DivisorCertificate& at(uint64_t s) const;
    std::vector<uint64_t> essentialPeriods() const;
    bool anyUnknown() const;
};

/// Certifies Per_s membership over the n_T-periodic partial word X_T for each
/// divisor s of n_T. ESSENTIAL verdicts are sound: deeper levels only refine
/// holes, so certified residues and certified strict inclusions persist.
PeriodCertificate essentialPeriodCertificate(const ViablePair& pair, size_t level);

// ---------------------------------------------------------------------------
// block frequency

struct BlockFrequency {
    Rational low{0};   // certain occurrences / n_T
    Rational high{0};  // hole-compatible occurrences / n_T
    uint64_t certain = 0;
    uint64_t compatible = 0;
};

/// Frequency of the 0/1 block B among the n_T cyclic windows of X_T.
BlockFrequency blockFrequency(const ViablePair& pair, size_t level, const std::string& block);

// ---------------------------------------------------------------------------
// hole resolution (test and experiment support)

/// New pair whose top word has every hole filled with `value`.
ViablePair resolveHoles(const ViablePair& pair, Symbol value);
/// Deterministic seeded variant (mt19937_64 over holes in position order).
ViablePair resolveHolesSeeded(const ViablePair& pair, uint64_t seed);

}  // namespace toeplitz

#endif
