#ifndef TOEPLITZ_CONSTRUCTIONS_HPP
#define TOEPLITZ_CONSTRUCTIONS_HPP

#include <optional>
#include <string>
#include <vector>

#include "toeplitz/int_polynomial.hpp"
#include "toeplitz/ntcore.hpp"
#include "toeplitz/words.hpp"

namespace toeplitz {

enum class ConstructionKind { A, B, Iwanik };
enum class BuildMode { Strict, Relaxed };
enum class FillPolicy { Zero, One, Seeded };

struct ConstructionConfig {
    ConstructionKind kind = ConstructionKind::A;
    int64_t k = 0, l = 0;
    IntPolynomial poly;  // Iwanik only
    size_t levels = 1;   // fill steps above x_0 = "?"
    BuildMode mode = BuildMode::Relaxed;
    FillPolicy fill = FillPolicy::Zero;
    uint64_t seed = 0;
    /// Relaxed towers: one prime per level for A, a prime batch per level for B.
    std::vector<std::vector<uint64_t>> levelPrimes;
    /// Relaxed Iwanik: m_t = n_{t+1}/n_t per level, all of equal parity.
    std::vector<uint64_t> branching;
    uint64_t materializationBudget = 1ull << 30;  // symbols per level
    uint64_t primeSearchBudget = 4'000'000'000ull;
};

/// One named condition evaluated during a build: asserted in strict mode,
/// reported in relaxed mode. For levels refused under the materialization
/// budget the entry carries the required magnitudes instead of built ones.
struct StrictCondition {
    std::string name;
    size_t level = 0;
    bool holds = false;
    double required = 0;
    double actual = 0;
    std::string note;
};

struct ConstructionReport {
    BuildMode mode = BuildMode::Relaxed;
    size_t levelsRequested = 0;
    size_t levelsBuilt = 0;
    bool budgetStopped = false;
    std::vector<StrictCondition> conditions;
    std::vector<std::string> overrides;  // relaxed-mode constants that do not hold
};

/// Per-level block pairs of the strictly ergodic construction.
struct IwanikBlocks {
    std::vector<uint64_t> moduli;                  // n_0 .. n_T
    std::vector<PartialWord> blockZero, blockOne;  // B_t^(0), B_t^(1), fully resolved
    std::vector<std::vector<uint8_t>> epsilon, epsilonPrime;  // sign words, length m_t
    std::vector<ResidueSet> differenceSet;         // A_t = {i : B_t^(0)(i) != B_t^(1)(i)}

    uint64_t branch(size_t t) const { return moduli[t + 1] / moduli[t]; }
};

struct ConstructionResult {
    ViablePair pair;
    ConstructionReport report;
    std::optional<IwanikBlocks> blocks;
};

ConstructionResult buildConstructionA(const ConstructionConfig& cfg);
ConstructionResult buildConstructionB(const ConstructionConfig& cfg);
ConstructionResult buildIwanik(const ConstructionConfig& cfg);
ConstructionResult build(const ConstructionConfig& cfg);

/// Smallest shift s >= 0 and sign so that Q(x) = sign*P(x+s) satisfies
/// Q(n) > M n^d and Q(n+1) - Q(n) > n for all n >= 1 (M = |leading coeff|).
struct NormalizedPoly {
    IntPolynomial poly;
    int64_t shift = 0;
    int sign = 1;
};
NormalizedPoly normalizePoly(const IntPolynomial& P);

/// max{i >= 1 : P(i) < bound}, 0 if there is none. Exhaustive below the
/// derivative's root bound, doubling + binary search beyond it.
uint64_t largestArgumentBelow(const IntPolynomial& P, uint64_t bound);

struct InvariantCheck {
    std::string name;
    size_t level = 0;
    bool hard = true;   // structural invariant (always asserted) vs quantitative bound
    bool pass = true;
    double value = 0;
    double bound = 0;
    std::string detail;
};

struct VerifyReport {
    bool structuralPass = true;  // hole locations, refinement, endpoint rules, quotas, pins
    bool boundsPass = true;      // quantitative lower bounds (asserted only in strict mode)
    std::vector<InvariantCheck> checks;
};

/// Re-checks construction invariants on a built pair. Iwanik pairs get their
/// blocks replayed from metadata when not supplied.
VerifyReport verifyConstructionInvariants(const ViablePair& pair,
                                          const std::optional<IwanikBlocks>& blocks = std::nullopt);

/// Reconstructs the build configuration from pair metadata plus the level
/// moduli (towers are recovered from the modulus ratios).
ConstructionConfig configFromMeta(const ViablePair& pair);

const char* kindName(ConstructionKind k);
const char* modeName(BuildMode m);
const char* fillName(FillPolicy f);
FillPolicy fillFromName(const std::string& name);

}  // namespace toeplitz

#endif
