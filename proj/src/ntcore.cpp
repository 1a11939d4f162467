#include "toeplitz/ntcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "toeplitz/errors.hpp"

namespace toeplitz {

uint64_t mulMod(uint64_t a, uint64_t b, uint64_t n) {
    return (uint64_t)((unsigned __int128)a * b % n);
}

uint64_t powMod(uint64_t base, uint64_t exp, uint64_t n) {
    if (n == 1) return 0;
    uint64_t acc = 1;
    base %= n;
    while (exp) {
        if (exp & 1) acc = mulMod(acc, base, n);
        base = mulMod(base, base, n);
        exp >>= 1;
    }
    return acc;
}

bool isPrime(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = powMod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mulMod(x, x, n);
            if (x == n - 1) { composite = false; break; }
        }
        if (composite) return false;
    }
    return true;
}

namespace {

uint64_t pollardRho(uint64_t n) {
    // Floyd cycle detection with batched gcd; n must be composite, odd, > 1
    for (uint64_t c = 1;; ++c) {
        auto step = [n, c](uint64_t x) {
            uint64_t v = mulMod(x, x, n) + c;
            return v >= n ? v - n : v;
        };
        uint64_t x = 2, y = 2, d = 1;
        while (d == 1) {
            x = step(x);
            y = step(step(y));
            uint64_t diff = x > y ? x - y : y - x;
            if (diff == 0) { d = n; break; }  // cycle closed, retry with new c
            d = std::gcd(diff, n);
        }
        if (d != n) return d;
    }
}

void factorRec(uint64_t n, std::vector<uint64_t>& out) {
    if (n == 1) return;
    if (isPrime(n)) { out.push_back(n); return; }
    uint64_t d = pollardRho(n);
    factorRec(d, out);
    factorRec(n / d, out);
}

}  // namespace

Factorization::Factorization(uint64_t n, std::vector<std::pair<uint64_t, int>> factors)
    : n_(n), factors_(std::move(factors)) {
    std::sort(factors_.begin(), factors_.end());
    phi_ = 1;
    bigOmega_ = 0;
    squarefree_ = true;
    uint64_t check = 1;
    for (auto& [p, e] : factors_) {
        bigOmega_ += e;
        if (e > 1) squarefree_ = false;
        phi_ *= p - 1;
        check *= p;
        for (int i = 1; i < e; ++i) { phi_ *= p; check *= p; }
    }
    if (check != n_) throw input_error("factorization does not multiply back to n");
}

std::vector<uint64_t> Factorization::primes() const {
    std::vector<uint64_t> out;
    out.reserve(factors_.size());
    for (auto& [p, e] : factors_) out.push_back(p);
    return out;
}

Factorization factorize(uint64_t n) {
    if (n == 0) throw input_error("factorize(0)");
    std::vector<uint64_t> primes;
    uint64_t rest = n;
    for (uint64_t p = 2; p <= 1'000'000 && p * p <= rest; p += (p == 2 ? 1 : 2)) {
        while (rest % p == 0) { primes.push_back(p); rest /= p; }
    }
    if (rest > 1) factorRec(rest, primes);
    std::sort(primes.begin(), primes.end());
    std::vector<std::pair<uint64_t, int>> grouped;
    for (uint64_t p : primes) {
        if (!grouped.empty() && grouped.back().first == p) ++grouped.back().second;
        else grouped.push_back({p, 1});
    }
    return Factorization(n, std::move(grouped));
}

ResidueSet::ResidueSet(uint64_t modulus) : modulus_(modulus) {
    if (modulus == 0) throw input_error("residue set with zero modulus");
    bits_.assign((modulus + 63) / 64, 0);
}

void ResidueSet::insert(uint64_t a) {
    if (a >= modulus_) throw input_error("residue out of range");
    uint64_t& w = bits_[a >> 6];
    uint64_t bit = 1ull << (a & 63);
    if (!(w & bit)) { w |= bit; ++count_; }
}

std::vector<uint64_t> ResidueSet::elements() const {
    std::vector<uint64_t> out;
    out.reserve(count_);
    forEach([&](uint64_t a) { out.push_back(a); });
    return out;
}

uint64_t rho(uint64_t k, uint64_t N, uint64_t n, uint64_t a) {
    if (k == 0 || n == 0 || N == 0) throw input_error("rho requires k, N, n >= 1");
    a %= n;
    if (N < n) {
        uint64_t count = 0;
        for (uint64_t m = 1; m <= N; ++m)
            if (powMod(m, k, n) == a) ++count;
        return count;
    }
    uint64_t full = N / n, r = N % n;
    uint64_t period = 0, prefix = 0;
    for (uint64_t m = 1; m <= n; ++m) {
        if (powMod(m, k, n) == a) {
            ++period;
            if (m <= r) ++prefix;
        }
    }
    return full * period + prefix;
}

uint64_t rhoMax(uint64_t k, uint64_t n, uint64_t histogramBudget) {
    if (k == 0 || n == 0) throw input_error("rhoMax requires k, n >= 1");
    if (n == 1) return 1;
    if (n <= histogramBudget) {
        std::vector<uint32_t> hist(n, 0);
        for (uint64_t m = 1; m <= n; ++m) ++hist[powMod(m, k, n)];
        return *std::max_element(hist.begin(), hist.end());
    }
    Factorization f = factorize(n);
    if (!f.squarefree())
        throw budget_error("rhoMax: n exceeds histogram budget and is not squarefree");
    uint64_t out = 1;
    for (uint64_t p : f.primes()) out *= std::gcd(k, p - 1);
    return out;
}

ResidueSet powerResidues(uint64_t n, uint64_t k, bool unitsOnly) {
    if (n == 0 || k == 0) throw input_error("powerResidues requires n, k >= 1");
    ResidueSet out(n);
    for (uint64_t m = 0; m < n; ++m) {
        if (unitsOnly && std::gcd(m, n) != 1) continue;
        out.insert(powMod(m, k, n));
    }
    return out;
}

bool isPermutationMod(const IntPolynomial& P, uint64_t n, uint64_t enumerationBound) {
    if (n == 0) throw input_error("isPermutationMod with zero modulus");
    if (n > enumerationBound)
        throw budget_error("isPermutationMod: modulus " + std::to_string(n) +
                           " exceeds enumeration bound " + std::to_string(enumerationBound));
    std::vector<bool> seen(n, false);
    for (uint64_t x = 0; x < n; ++x) {
        uint64_t v = P.evalMod(x, n);
        if (seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

bool liftCriterion(const IntPolynomial& P, uint64_t p) {
    if (!isPrime(p)) throw input_error("liftCriterion requires a prime");
    if (!isPermutationMod(P, p)) return false;
    IntPolynomial d = P.derivative();
    for (uint64_t x = 0; x < p; ++x)
        if (d.evalMod(x, p) == 0) return false;
    return true;
}

IntPolynomial dickson(uint64_t n, int64_t alpha) {
    if (n == 0) throw input_error("dickson requires n >= 1");
    IntPolynomial x = IntPolynomial::monomial(1);
    if (n == 1) return x;
    IntPolynomial prev = x;                                       // D_1
    IntPolynomial cur({-2 * alpha, 0, 1});                        // D_2
    auto mulByX = [](const IntPolynomial& q) {
        std::vector<int64_t> c(q.coefficients().size() + 1, 0);
        for (size_t i = 0; i < q.coefficients().size(); ++i) c[i + 1] = q.coefficients()[i];
        return IntPolynomial(std::move(c));
    };
    for (uint64_t m = 2; m < n; ++m) {
        // D_{m+1} = x*D_m - alpha*D_{m-1}
        IntPolynomial xDm = mulByX(cur);
        std::vector<int64_t> c(xDm.coefficients());
        const auto& pc = prev.coefficients();
        for (size_t i = 0; i < pc.size(); ++i) {
            __int128 v = (__int128)c[i] - (__int128)alpha * pc[i];
            if (v > INT64_MAX || v < INT64_MIN) throw verdict_error("dickson coefficient overflow");
            c[i] = (int64_t)v;
        }
        prev = cur;
        cur = IntPolynomial(std::move(c));
    }
    return cur;
}

uint64_t weilCount(uint64_t p, uint64_t k, uint64_t l, uint64_t a) {
    if (k == 0 || l == 0) throw input_error("weilCount requires k, l >= 1");
    if (!isPrime(p)) throw input_error("weilCount requires a prime");
    a %= p;
    std::vector<uint32_t> hx(p, 0), hy(p, 0);
    for (uint64_t v = 0; v < p; ++v) {
        ++hx[powMod(v, k, p)];
        ++hy[powMod(v, l, p)];
    }
    // x^k - y^l = a  <=>  x^k = y^l + a
    uint64_t count = 0;
    for (uint64_t w = 0; w < p; ++w) {
        uint64_t t = w + a;
        if (t >= p) t -= p;
        count += (uint64_t)hx[t] * hy[w];
    }
    if (a != 0 && k < p && l < p) {
        uint64_t d = count > p ? count - p : p - count;
        if ((unsigned __int128)d * d > (unsigned __int128)k * k * l * l * p)
            throw verdict_error("Weil bound violated at p=" + std::to_string(p) +
                                " k=" + std::to_string(k) + " l=" + std::to_string(l) +
                                " a=" + std::to_string(a) + " count=" + std::to_string(count));
    }
    return count;
}

int aSetBadCountThreshold(int omega) {
    if (omega <= 0) throw input_error("threshold needs omega >= 1");
    if (omega == 1) return 1;  // ln 1 = 0 exactly, need count > 0
    return (int)std::floor(std::log((double)omega)) + 1;
}

std::vector<uint64_t> unitPowerTable(uint64_t p, uint64_t k) {
    std::vector<uint64_t> bits((p + 63) / 64, 0);
    for (uint64_t u = 1; u < p; ++u) {
        uint64_t v = powMod(u, k, p);
        bits[v >> 6] |= 1ull << (v & 63);
    }
    return bits;
}

ASetTester::ASetTester(std::vector<uint64_t> primes, uint64_t k, uint64_t l)
    : primes_(std::move(primes)), k_(k), l_(l) {
    if (k_ == 0 || l_ == 0) throw input_error("A-set requires k, l >= 1");
    for (size_t i = 0; i + 1 < primes_.size(); ++i)
        if (primes_[i] == primes_[i + 1]) throw input_error("A-set modulus must be squarefree");
    for (uint64_t p : primes_) {
        if ((p - 1) % l_ != 0)
            throw input_error("A-set hypothesis violated: l does not divide p-1 for p=" +
                              std::to_string(p));
        kTables_.push_back(unitPowerTable(p, k_));
        lTables_.push_back(unitPowerTable(p, l_));
    }
    threshold_ = aSetBadCountThreshold((int)primes_.size());
}

bool ASetTester::kTable(size_t i, uint64_t r) const {
    return (kTables_[i][r >> 6] >> (r & 63)) & 1;
}

bool ASetTester::lTable(size_t i, uint64_t r) const {
    return (lTables_[i][r >> 6] >> (r & 63)) & 1;
}

bool ASetTester::inUnitPowerK(const std::vector<uint64_t>& residues) const {
    for (size_t i = 0; i < primes_.size(); ++i)
        if (residues[i] == 0 || !kTable(i, residues[i])) return false;
    return true;
}

bool ASetTester::inA(const std::vector<uint64_t>& residues) const {
    int bad = 0;
    for (size_t i = 0; i < primes_.size(); ++i) {
        if (residues[i] == 0 || !kTable(i, residues[i])) return false;
        if (!lTable(i, residues[i])) ++bad;
    }
    return bad >= threshold_;
}

ASetResult buildASet(uint64_t n, uint64_t k, uint64_t l) {
    Factorization f = factorize(n);
    if (n < 2) throw input_error("A-set requires omega(n) >= 1");
    if (!f.squarefree()) throw input_error("A-set hypothesis violated: n not squarefree");
    ASetTester tester(f.primes(), k, l);
    const auto primes = f.primes();
    ASetResult out{ResidueSet(n)};
    std::vector<uint64_t> res(primes.size(), 0);
    for (uint64_t a = 0; a < n; ++a) {
        if (tester.inA(res)) out.set.insert(a);
        for (size_t i = 0; i < primes.size(); ++i)
            if (++res[i] == primes[i]) res[i] = 0;
    }
    int omega = f.omega();
    double kPow = std::pow((double)k, omega);
    out.lowerBound = (double)f.phi() * (1.0 - std::pow(2.0, -omega / 4.0)) / kPow;
    out.lowerBoundHolds = (double)out.set.size() > out.lowerBound;
    out.strictHypotheses = k > 1 && k < l && l % k == 0;
    for (uint64_t p : primes)
        if (p <= (12 * k * l) * (12 * k * l)) out.strictHypotheses = false;
    // under the full hypotheses this bound always holds; a violation
    // means the implementation is wrong
    if (out.strictHypotheses && !out.lowerBoundHolds)
        throw verdict_error("A-set lower bound violated under strict hypotheses at n=" +
                            std::to_string(n));
    return out;
}

uint64_t aSetSizeByCrt(uint64_t n, uint64_t k, uint64_t l) {
    Factorization f = factorize(n);
    if (n < 2) throw input_error("A-set requires omega(n) >= 1");
    if (!f.squarefree()) throw input_error("A-set hypothesis violated: n not squarefree");
    if (k == 0 || l == 0) throw input_error("A-set requires k, l >= 1");
    // coefficient j of prod_p (good_p + bad_p z) counts residues with exactly
    // j prime coordinates outside the l-th powers
    std::vector<unsigned __int128> dp{1};
    for (uint64_t p : f.primes()) {
        if ((p - 1) % l != 0)
            throw input_error("A-set hypothesis violated: l does not divide p-1 for p=" +
                              std::to_string(p));
        uint64_t gk = std::gcd(k, p - 1), gl = std::gcd(l, p - 1);
        uint64_t sizeK = (p - 1) / gk;
        uint64_t good = (p - 1) / std::lcm(gk, gl);
        uint64_t bad = sizeK - good;
        std::vector<unsigned __int128> next(dp.size() + 1, 0);
        for (size_t j = 0; j < dp.size(); ++j) {
            next[j] += dp[j] * good;
            next[j + 1] += dp[j] * bad;
        }
        dp = std::move(next);
    }
    int c = aSetBadCountThreshold(f.omega());
    unsigned __int128 total = 0;
    for (size_t j = (size_t)c; j < dp.size(); ++j) total += dp[j];
    if (total > UINT64_MAX) throw verdict_error("A-set size overflow");
    return (uint64_t)total;
}

MaxPreimageResult maxPowerPreimageOverShifts(uint64_t n, uint64_t l, const ResidueSet& A,
                                             uint64_t workBudget, uint64_t sampleShifts) {
    if (A.modulus() != n) throw input_error("A has wrong modulus");
    if (l == 0 || n == 0) throw input_error("maxPowerPreimage requires n, l >= 1");
    if (A.size() == 0) return {0, 0, true};
    std::vector<uint32_t> hist(n, 0);
    for (uint64_t x = 0; x < n; ++x) ++hist[powMod(x, l, n)];
    std::vector<uint64_t> elems = A.elements();
    bool exact = true;
    std::vector<uint64_t> shifts;
    if ((unsigned __int128)n * elems.size() > workBudget) {
        if (sampleShifts == 0)
            throw budget_error("maxPowerPreimage: n*|A| = " + std::to_string(n) + "*" +
                               std::to_string(elems.size()) + " exceeds work budget");
        exact = false;
        for (uint64_t j = 0; j < sampleShifts; ++j) shifts.push_back(j * n / sampleShifts);
    } else {
        shifts.resize(n);
        for (uint64_t i = 0; i < n; ++i) shifts[i] = i;
    }
    MaxPreimageResult out;
    out.exact = exact;
    for (uint64_t i : shifts) {
        uint64_t count = 0;
        for (uint64_t a : elems) {
            uint64_t t = a + i;
            if (t >= n) t -= n;
            count += hist[t];
        }
        if (count > out.maxCount) { out.maxCount = count; out.argmaxShift = i; }
    }
    return out;
}

namespace {

int valuation(uint64_t n, uint64_t q) {
    int v = 0;
    while (n % q == 0) { n /= q; ++v; }
    return v;
}

uint64_t ipow(uint64_t b, int e) {
    uint64_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

}  // namespace

NtlemParams ntlemParams(uint64_t k, uint64_t l) {
    if (k == 0 || l == 0) throw input_error("ntlemParams requires k, l >= 1");
    if (l % k == 0) throw input_error("ntlemParams requires k not dividing l");
    Factorization fk = factorize(k);
    uint64_t q = 0;
    for (uint64_t p : fk.primes()) {
        if (valuation(k, p) > valuation(l, p)) {
            if (p == 2) { q = 2; break; }
            if (q == 0 || p < q) q = p;
        }
    }
    if (valuation(k, 2) > valuation(l, 2)) q = 2;
    NtlemParams out;
    out.k = k;
    out.l = l;
    out.q = q;
    if (q == 2) {
        int v2l = valuation(l, 2);
        out.kPrime = ipow(2, v2l + 1);
        out.lPrime = ipow(2, v2l);
        out.gcdModulus = k * l;
        out.gcdTarget = out.kPrime;
    } else {
        int vql = valuation(l, q);
        out.lPrime = ipow(q, vql) * std::gcd(l, (uint64_t)2);
        out.kPrime = ipow(q, vql + 1) * std::gcd(k, (uint64_t)2);
        out.gcdModulus = 2 * k * l;
        out.gcdTarget = 2 * ipow(q, vql + 1);
    }
    if (!(out.kPrime > out.lPrime && out.lPrime >= 1) || k % out.kPrime != 0 || l % out.lPrime != 0)
        throw verdict_error("ntlemParams produced inconsistent exponents");
    return out;
}

std::vector<uint64_t> findPrimes(const NtlemParams& params, size_t count, uint64_t floor,
                                 const std::function<bool(uint64_t)>& extra, uint64_t maxCandidate) {
    std::vector<uint64_t> out;
    if (count == 0) return out;
    uint64_t g = params.gcdTarget, G = params.gcdModulus;
    // admissible primes satisfy g | p-1, so walk p = 1 (mod g)
    uint64_t c = floor < 2 ? 2 : floor;
    if (g > 1) {
        uint64_t rem = (c - 1) % g;
        if (rem != 0) c += g - rem;
    }
    for (; c <= maxCandidate; c += (g > 1 ? g : 1)) {
        if (std::gcd(c - 1, G) != g) continue;
        if (!isPrime(c)) continue;
        if (extra && !extra(c)) continue;
        out.push_back(c);
        if (out.size() == count) return out;
    }
    throw budget_error("prime search exhausted: scanned [" + std::to_string(floor) + ", " +
                       std::to_string(maxCandidate) + "], found " + std::to_string(out.size()) +
                       " of " + std::to_string(count));
}

std::vector<uint64_t> findPrimes(const std::function<bool(uint64_t)>& predicate, size_t count,
                                 uint64_t floor, uint64_t maxCandidate) {
    std::vector<uint64_t> out;
    if (count == 0) return out;
    for (uint64_t c = floor < 2 ? 2 : floor; c <= maxCandidate; ++c) {
        if (!isPrime(c)) continue;
        if (predicate && !predicate(c)) continue;
        out.push_back(c);
        if (out.size() == count) return out;
    }
    throw budget_error("prime search exhausted: scanned [" + std::to_string(floor) + ", " +
                       std::to_string(maxCandidate) + "], found " + std::to_string(out.size()) +
                       " of " + std::to_string(count));
}

}  // namespace toeplitz
