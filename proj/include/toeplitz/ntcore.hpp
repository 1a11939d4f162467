#ifndef TOEPLITZ_NTCORE_HPP
#define TOEPLITZ_NTCORE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "toeplitz/int_polynomial.hpp"

namespace toeplitz {

// ---------------------------------------------------------------------------
// basic modular arithmetic

uint64_t mulMod(uint64_t a, uint64_t b, uint64_t n);
uint64_t powMod(uint64_t base, uint64_t exp, uint64_t n);
bool isPrime(uint64_t n);  // deterministic Miller-Rabin, full 64-bit range

// ---------------------------------------------------------------------------
// factorization

class Factorization {
public:
    explicit Factorization(uint64_t n, std::vector<std::pair<uint64_t, int>> factors);

    uint64_t n() const { return n_; }
    const std::vector<std::pair<uint64_t, int>>& factors() const { return factors_; }
    uint64_t phi() const { return phi_; }
    int omega() const { return (int)factors_.size(); }
    int bigOmega() const { return bigOmega_; }
    bool squarefree() const { return squarefree_; }
    std::vector<uint64_t> primes() const;

private:
    uint64_t n_;
    std::vector<std::pair<uint64_t, int>> factors_;  // sorted by prime
    uint64_t phi_;
    int bigOmega_;
    bool squarefree_;
};

/// Trial division to 10^6, deterministic Miller-Rabin plus Pollard rho above.
/// Rejects n = 0.
Factorization factorize(uint64_t n);

// ---------------------------------------------------------------------------
// residue sets

class ResidueSet {
public:
    explicit ResidueSet(uint64_t modulus);

    uint64_t modulus() const { return modulus_; }
    uint64_t size() const { return count_; }
    bool contains(uint64_t a) const {
        return (bits_[a >> 6] >> (a & 63)) & 1;
    }
    void insert(uint64_t a);
    std::vector<uint64_t> elements() const;

    template <typename F>
    void forEach(F&& f) const {
        for (uint64_t a = 0; a < modulus_; ++a)
            if (contains(a)) f(a);
    }

    bool operator==(const ResidueSet& o) const {
        return modulus_ == o.modulus_ && bits_ == o.bits_;
    }

private:
    uint64_t modulus_;
    std::vector<uint64_t> bits_;
    uint64_t count_ = 0;
};

// ---------------------------------------------------------------------------
// counting along powers

/// rho_k(N; n, a) = |{1 <= m <= N : m^k = a mod n}|, one period plus remainder.
uint64_t rho(uint64_t k, uint64_t N, uint64_t n, uint64_t a);

/// rho_k(n) = max_a rho_k(n; n, a). Histogram for modest n; for squarefree n
/// the per-prime product formula avoids the O(n) table.
uint64_t rhoMax(uint64_t k, uint64_t n, uint64_t histogramBudget = 20'000'000);

/// R^k_n (all k-th power residues) or R~^k_n (units only).
ResidueSet powerResidues(uint64_t n, uint64_t k, bool unitsOnly);

// ---------------------------------------------------------------------------
// permutation polynomials

/// True iff P is a bijection on Z/nZ, by enumeration. Throws budget_error for
/// n above the bound.
bool isPermutationMod(const IntPolynomial& P, uint64_t n, uint64_t enumerationBound = (1ull << 32));

/// True iff P is a permutation mod p and P' has no root mod p; equivalently
/// (for prime p) P is a permutation mod p^k for every k.
bool liftCriterion(const IntPolynomial& P, uint64_t p);

/// Dickson polynomial D_n(alpha, x) by the three-term recurrence
/// D_1 = x, D_2 = x^2 - 2a, D_{m+1} = x*D_m - a*D_{m-1}.
IntPolynomial dickson(uint64_t n, int64_t alpha);

// ---------------------------------------------------------------------------
// Weil-bound counting

/// Exact |{(x,y) in F_p x F_p : x^k - y^l = a}| via value histograms.
/// When a != 0 mod p and k, l < p, additionally asserts |count - p| <= kl*sqrt(p)
/// (integer comparison of squares); violation throws verdict_error.
uint64_t weilCount(uint64_t p, uint64_t k, uint64_t l, uint64_t a);

// ---------------------------------------------------------------------------
// the sparse power-residue set A

struct ASetResult {
    ResidueSet set;
    /// lower bound phi(n) * (1 - 2^{-omega/4}) / k^omega
    double lowerBound = 0;
    bool lowerBoundHolds = false;
    /// all primes p | n satisfy p > (12kl)^2 (the strict hypothesis)
    bool strictHypotheses = false;
};

/// Bitset {u^k mod p : u in [1, p)}, packed 64 residues per word.
std::vector<uint64_t> unitPowerTable(uint64_t p, uint64_t k);

/// Per-prime membership tables for streaming A-set tests: callers feed the
/// residue vector (a mod p_i) and get unit/k-th-power/A membership without
/// materializing the set. This is what the construction builders use on
/// moduli too large for a ResidueSet.
class ASetTester {
public:
    ASetTester(std::vector<uint64_t> primes, uint64_t k, uint64_t l);

    const std::vector<uint64_t>& primes() const { return primes_; }
    int threshold() const { return threshold_; }
    bool kTable(size_t i, uint64_t r) const;
    bool lTable(size_t i, uint64_t r) const;
    /// a in ((Z/nZ)*)^k, residues[i] = a mod primes()[i]
    bool inUnitPowerK(const std::vector<uint64_t>& residues) const;
    bool inA(const std::vector<uint64_t>& residues) const;

private:
    std::vector<uint64_t> primes_;
    uint64_t k_, l_;
    std::vector<std::vector<uint64_t>> kTables_, lTables_;
    int threshold_;
};

/// Number of prime coordinates that must fail the l-th power test for
/// membership: strictly more than ln(omega).
int aSetBadCountThreshold(int omega);

/// A = {a in ((Z/nZ)*)^k : #{p | n : a mod p not an l-th power} > ln omega(n)}.
/// Requires n squarefree with l | p-1 for every p | n (input_error otherwise).
/// Per-prime power tables plus one CRT pass over residues.
ASetResult buildASet(uint64_t n, uint64_t k, uint64_t l);

/// |A| through the per-prime product expansion (no enumeration of Z/nZ):
/// coefficientwise product of (good_p + bad_p z) over p | n, summed above the
/// threshold. Cross-check route for buildASet.
uint64_t aSetSizeByCrt(uint64_t n, uint64_t k, uint64_t l);

struct MaxPreimageResult {
    uint64_t maxCount = 0;
    uint64_t argmaxShift = 0;
    bool exact = true;  // false for the sampled fallback (lower bound only)
};

/// max_i |{x in Z/nZ : x^l in A + i}| by an l-th power histogram against the
/// membership bitset. Exact path costs O(n * |A|); beyond workBudget either
/// throws budget_error or, when sampleShifts > 0, evaluates that many evenly
/// spaced shifts and flags the result as a lower bound.
MaxPreimageResult maxPowerPreimageOverShifts(uint64_t n, uint64_t l, const ResidueSet& A,
                                             uint64_t workBudget = 200'000'000,
                                             uint64_t sampleShifts = 0);

// ---------------------------------------------------------------------------
// prime selection realizing two prescribed power-gcd values

struct NtlemParams {
    uint64_t k = 0, l = 0;
    uint64_t q = 0;        // prime with nu_q(k) > nu_q(l)
    uint64_t kPrime = 0;   // resulting gcd(p-1, k)
    uint64_t lPrime = 0;   // resulting gcd(p-1, l)
    uint64_t gcdModulus = 0;  // G
    uint64_t gcdTarget = 0;   // g: admissible primes satisfy gcd(p-1, G) = g
};

/// Branch data for the prime condition gcd(p-1, G) = g; requires k not | l.
/// q = 2 branch: k' = 2^{nu2(l)+1}, l' = 2^{nu2(l)}, G = kl.
/// Odd q branch: l' = q^{nuq(l)} gcd(l,2), k' = q^{nuq(l)+1} gcd(k,2), G = 2kl.
NtlemParams ntlemParams(uint64_t k, uint64_t l);

/// First `count` primes >= floor with gcd(p-1, G) = g, optionally filtered
/// further. Walks the progression p = 1 (mod g). Throws budget_error with the
/// scanned range once maxCandidate is passed.
std::vector<uint64_t> findPrimes(const NtlemParams& params, size_t count, uint64_t floor,
                                 const std::function<bool(uint64_t)>& extra = nullptr,
                                 uint64_t maxCandidate = 4'000'000'000ull);

/// Generic predicate version (no progression structure assumed).
std::vector<uint64_t> findPrimes(const std::function<bool(uint64_t)>& predicate, size_t count,
                                 uint64_t floor, uint64_t maxCandidate = 100'000'000ull);

}  // namespace toeplitz

#endif
