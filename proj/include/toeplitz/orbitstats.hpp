#ifndef TOEPLITZ_ORBITSTATS_HPP
#define TOEPLITZ_ORBITSTATS_HPP

#include <optional>
#include <string>
#include <vector>

#include "toeplitz/constructions.hpp"
#include "toeplitz/int_polynomial.hpp"
#include "toeplitz/rational.hpp"
#include "toeplitz/words.hpp"

namespace toeplitz {

/// Exact rational interval: holes contribute their full value range, resolved
/// positions a point. unresolved == 0 iff low == high.
struct IntervalValue {
    Rational low{0}, high{0};
    uint64_t resolved = 0, unresolved = 0;

    bool point() const { return unresolved == 0; }
    Rational width() const { return high - low; }
};

/// Largest certified distance between two intervals (0 when they overlap).
Rational intervalInfDistance(const IntervalValue& a, const IntervalValue& b);
/// Worst-case distance between values drawn from the two intervals.
Rational intervalSupDistance(const IntervalValue& a, const IntervalValue& b);

/// Function on the subshift depending on coordinates [-C, C], with exact
/// rational values. Window index: bit j carries the symbol at offset j - C.
class CylinderFunction {
public:
    static CylinderFunction signFunction();  // G(y) = (-1)^{y(0)}
    /// Indicator of windows equal to the odd-length 0/1 word.
    static CylinderFunction indicator(const std::string& window);
    static CylinderFunction fromTable(int radius, std::vector<Rational> table, std::string name);

    int radius() const { return radius_; }
    const std::string& name() const { return name_; }
    const std::vector<Rational>& table() const { return table_; }
    const Rational& value(uint32_t windowIndex) const { return table_[windowIndex]; }
    const Rational& minValue() const { return min_; }
    const Rational& maxValue() const { return max_; }

private:
    CylinderFunction(int radius, std::vector<Rational> table, std::string name);

    int radius_;
    std::vector<Rational> table_;
    Rational min_, max_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Birkhoff averages

struct AverageOptions {
    int threads = 1;
};

/// (1/N) sum_{m<N} F(sigma^{P(m)+shift} x) as an exact interval. Positions
/// reduce mod n_T in 128-bit arithmetic; integer accumulation, one division
/// at the end. Deterministic for any thread count.
IntervalValue birkhoffAverage(const ViablePair& pair, const IntPolynomial& P, int64_t shift,
                              uint64_t N, const CylinderFunction& F,
                              const AverageOptions& options = {});

// ---------------------------------------------------------------------------
// checkpoint divergence

struct CheckpointEntry {
    size_t t = 0;
    uint64_t scale = 0;  // C_t
    IntervalValue average;
    int expectedSign = 1;       // + for even t, - for odd t
    bool signCertified = false; // interval strictly on the expected side
    Rational gap{0};            // certified |avg| lower bound in the expected direction
};

struct CheckpointReport {
    std::string polynomial;
    std::vector<CheckpointEntry> entries;
    bool alternating = false;  // every checkpoint certified on its expected side
};

/// Averages of G at each construction checkpoint C_t (m over [0, C_t)).
/// Throws input_error for pairs without checkpoints.
CheckpointReport checkpointReport(const ViablePair& pair, const IntPolynomial& P,
                                  const AverageOptions& options = {});
/// Polynomial from construction metadata: m^k for towers, the stored
/// polynomial for the strictly ergodic construction.
CheckpointReport checkpointReport(const ViablePair& pair, const AverageOptions& options = {});

std::string checkpointReportJson(const CheckpointReport& report);

// ---------------------------------------------------------------------------
// hole density along polynomial shifts

struct ShiftDensityResult {
    uint64_t maxCount = 0;
    uint64_t argmaxShift = 0;
    bool exact = true;
    /// for construction-B pairs: n_t (2/3)^{ln omega(n_t)} with comparison flag
    std::optional<double> excludedSetBound;
    bool boundHolds = false;
};

/// max_a |{i in [0, n_t) : X_t(P(i)+a) = ?}|, exact within the work budget
/// (cost O(n_t * ?_t)); with sampleShifts > 0 the overflow falls back to that
/// many evenly spaced shifts, flagged as a lower bound.
ShiftDensityResult shiftQuestionDensity(const ViablePair& pair, size_t t, const IntPolynomial& P,
                                        uint64_t workBudget = 200'000'000,
                                        uint64_t sampleShifts = 0);

// ---------------------------------------------------------------------------
// convergence probe

struct ProbeAverage {
    int64_t shift = 0;
    uint64_t N = 0;
    IntervalValue value;
};

struct ProbeCell {
    int64_t shift = 0;
    uint64_t fromN = 0, toN = 0;
    Rational oscillation{0};  // worst-case |avg(fromN) - avg(toN)|
    Rational bound{0};        // min over levels of (8 eps_t + 2 n_t / fromN) * max(1, range/2)
    bool withinBound = false;
};

struct ProbeReport {
    std::vector<ProbeAverage> averages;
    std::vector<ProbeCell> cells;
    bool allWithinBound = true;
};

/// Oscillation of averages along P over the N grid for each shift, checked
/// against the proof's bound computed from measured hole densities.
ProbeReport convergenceProbe(const ViablePair& pair, const IntPolynomial& P,
                             const CylinderFunction& F, const std::vector<int64_t>& shifts,
                             const std::vector<uint64_t>& grid,
                             const AverageOptions& options = {});

// ---------------------------------------------------------------------------
// equidistribution

struct EquiReport {
    IntervalValue orbitAverage;  // along P at N = n_T
    IntervalValue muEstimate;    // block-frequency estimate of the invariant measure
    Rational distance{0};        // certified distance between the two intervals
    Rational tolerance{0};
    bool pass = false;
    Rational identityGap{0};    // |sum_{m<n_T} F(sigma^{P(m)}x) - sum F(sigma^m x)| certified
    Rational identityBound{0};  // 2 (2C+1) ?_T
    bool identityHolds = false;
};

/// Compares the orbit average against the invariant-measure estimate and
/// asserts the permutation-sum inequality at N = n_T. Throws input_error when
/// P is not a permutation mod n_T.
EquiReport equidistributionCheck(const ViablePair& pair, const IntPolynomial& P,
                                 const CylinderFunction& F, const Rational& tolerance,
                                 const AverageOptions& options = {});

// ---------------------------------------------------------------------------
// residue coverage and density

struct ResidueCoverage {
    bool full = false;
    std::vector<uint64_t> missing;
};

ResidueCoverage residuesCovered(const IntPolynomial& P, uint64_t s);
ResidueCoverage residuesCovered(const std::vector<int64_t>& values, uint64_t s);

enum class DensityVerdict { DenseCertified, NotDense, Undecided };

struct DensityReport {
    DensityVerdict verdict = DensityVerdict::Undecided;
    std::vector<uint64_t> essentialPeriods;
    bool permutationModTop = false;
    bool unknownCertificates = false;
    uint64_t witnessPeriod = 0;             // NotDense: essential period missing residues
    std::vector<uint64_t> missingResidues;  // residues of witnessPeriod not attained
};

DensityReport densityVerdict(const ViablePair& pair, const IntPolynomial& P, size_t level);

struct AlmostPrimeObstruction {
    uint64_t witnessModulus = 0;
    uint64_t uncoveredResidue = 0;  // 0 mod witness is never hit by l-almost primes
    int bigOmega = 0;
};

/// Witness tower modulus no l-almost prime is divisible by: the canonical
/// n_{l+2} when the tower is deep enough, otherwise the first modulus with
/// Omega(n) > l.
AlmostPrimeObstruction almostPrimeObstruction(uint64_t l, const std::vector<uint64_t>& tower);

// ---------------------------------------------------------------------------
// block frequencies of the strictly ergodic construction

/// Frequency of B among the aligned |B|-blocks of C; requires |B| divides |C|.
Rational apFrequency(const PartialWord& B, const PartialWord& C);
Rational apFrequency(const std::string& B, const std::string& C);

struct ApComparison {
    size_t t = 0, s = 0;
    int epsT = 0, epsS = 0;
    Rational measured{0};
    Rational closedForm{0};
    bool match = false;
};

struct ApCheckReport {
    std::vector<ApComparison> rows;  // all four (eps, eps') pairs
    Rational supDeviationFromHalf{0};
    bool allMatch = false;
};

/// Measures ap(B_t^(eps), B_s^(eps')) exactly and compares with the closed
/// form 1/2 (even branching) or (1/2)(1 +/- 1/(m_t...m_{s-1})) (odd).
ApCheckReport iwanikApCheck(const IwanikBlocks& blocks, size_t t, size_t s);

// ---------------------------------------------------------------------------
// CSV emission

struct SeriesRow {
    uint64_t N = 0;
    IntervalValue value;
};

/// Columns N,low,high,resolved,unresolved,low_dec,high_dec (RFC 4180).
std::string seriesCsv(const std::vector<SeriesRow>& rows);

}  // namespace toeplitz

#endif
