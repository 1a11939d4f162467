#include "toeplitz/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "toeplitz/errors.hpp"

namespace toeplitz {

const char* kindName(ConstructionKind k) {
    switch (k) {
        case ConstructionKind::A: return "a";
        case ConstructionKind::B: return "b";
        default: return "iwanik";
    }
}

const char* modeName(BuildMode m) { return m == BuildMode::Strict ? "strict" : "relaxed"; }

const char* fillName(FillPolicy f) {
    switch (f) {
        case FillPolicy::Zero: return "zero";
        case FillPolicy::One: return "one";
        default: return "seeded";
    }
}

FillPolicy fillFromName(const std::string& name) {
    if (name == "zero") return FillPolicy::Zero;
    if (name == "one") return FillPolicy::One;
    if (name == "seeded") return FillPolicy::Seeded;
    throw input_error("unknown fill policy '" + name + "'");
}

namespace {

uint64_t ipowClamped(uint64_t base, uint64_t exp, uint64_t cap) {
    uint64_t r = 1;
    for (uint64_t i = 0; i < exp; ++i) {
        if (base != 0 && r > cap / base) return cap + 1;
        r *= base;
        if (r > cap) return cap + 1;
    }
    return r;
}

uint64_t kthRootFloor(uint64_t n, uint64_t k) {
    if (k == 0) throw input_error("kthRootFloor with k = 0");
    if (k == 1 || n <= 1) return n;
    uint64_t r = (uint64_t)std::pow((double)n, 1.0 / (double)k);
    while (r > 0 && ipowClamped(r, k, n) > n) --r;
    while (ipowClamped(r + 1, k, n) <= n) ++r;
    return r;
}

class FillSource {
public:
    FillSource(FillPolicy policy, uint64_t seed) : policy_(policy), rng_(seed) {}
    Symbol next() {
        switch (policy_) {
            case FillPolicy::Zero: return Symbol::Zero;
            case FillPolicy::One: return Symbol::One;
            default: return (rng_() & 1) ? Symbol::One : Symbol::Zero;
        }
    }

private:
    FillPolicy policy_;
    std::mt19937_64 rng_;
};

// membership in ((Z/nZ)*)^k for squarefree n given per-prime residues
struct UnitPowerKTester {
    std::vector<uint64_t> primes;
    std::vector<std::vector<uint64_t>> tables;

    UnitPowerKTester(std::vector<uint64_t> ps, uint64_t k) : primes(std::move(ps)) {
        for (uint64_t p : primes) tables.push_back(unitPowerTable(p, k));
    }
    bool contains(const std::vector<uint64_t>& residues) const {
        for (size_t i = 0; i < primes.size(); ++i) {
            if (residues[i] == 0) return false;
            if (!((tables[i][residues[i] >> 6] >> (residues[i] & 63)) & 1)) return false;
        }
        return true;
    }
};

double phiRatio(const std::vector<uint64_t>& primes) {
    double r = 1;
    for (uint64_t p : primes) r *= 1.0 - 1.0 / (double)p;
    return r;
}

void recordCondition(ConstructionReport& report, std::string name, size_t level, bool holds,
                     double required, double actual, std::string note = "") {
    report.conditions.push_back({name, level, holds, required, actual, std::move(note)});
    if (!holds && report.mode == BuildMode::Relaxed)
        report.overrides.push_back(name + "@level" + std::to_string(level));
}

void assertStrict(const ConstructionReport& report) {
    for (const auto& c : report.conditions)
        if (!c.holds)
            throw verdict_error("strict conditions infeasible: (" + c.name + ") violated at level " +
                                std::to_string(c.level) + " (required " + std::to_string(c.required) +
                                ", actual " + std::to_string(c.actual) + ")");
}

// shared skeleton of constructions A and B; they differ in the admissible
// hole set and in the order of the power and batch fill steps
struct TowerBuilder {
    const ConstructionConfig& cfg;
    ConstructionReport report;
    std::vector<Level> levels;
    std::vector<uint64_t> checkpoints;
    std::vector<uint64_t> primesSoFar;
    FillSource fills;

    explicit TowerBuilder(const ConstructionConfig& c)
        : cfg(c), fills(c.fill, c.seed) {
        report.mode = c.mode;
        report.levelsRequested = c.levels;
        levels.push_back({1, PartialWord("?")});
    }

    uint64_t modulus() const { return levels.back().modulus; }

    // positions i^k for i in [0, floor(n^(1/k))]; fill surviving holes
    void powerFill(SymbolBuffer& buf, uint64_t n, size_t t, uint64_t k) {
        uint64_t c = kthRootFloor(n, k);
        for (uint64_t i = 0; i <= c; ++i) {
            uint64_t pos = ipowClamped(i, k, n);
            if (pos >= n) continue;
            if (buf.get(pos) == Symbol::Hole)
                buf.set(pos, t % 2 == 0 ? Symbol::Zero : Symbol::One);
        }
    }

    // walk every hole inherited from the parent level in ascending position
    // order; a hole survives only off the edges and where keep(residues) holds
    template <typename Keep>
    void batchFill(SymbolBuffer& buf, uint64_t parentModulus, const std::vector<uint64_t>& holes,
                   const std::vector<uint64_t>& primes, Keep&& keep) {
        uint64_t n = buf.size();
        uint64_t copies = n / parentModulus;
        std::vector<uint64_t> base(primes.size(), 0), res(primes.size());
        for (uint64_t c = 0; c < copies; ++c) {
            uint64_t offset = c * parentModulus;
            for (uint64_t h : holes) {
                uint64_t a = offset + h;
                if (buf.get(a) != Symbol::Hole) continue;
                for (size_t i = 0; i < primes.size(); ++i) {
                    res[i] = base[i] + h % primes[i];
                    if (res[i] >= primes[i]) res[i] -= primes[i];
                }
                bool edge = a < parentModulus || a >= n - parentModulus;
                if (edge || !keep(res)) buf.set(a, fills.next());
            }
            for (size_t i = 0; i < primes.size(); ++i) {
                base[i] += parentModulus % primes[i];
                if (base[i] >= primes[i]) base[i] -= primes[i];
            }
        }
    }

    std::vector<uint64_t> parentHoles() const {
        std::vector<uint64_t> holes;
        holes.reserve(levels.back().word.holeCount());
        levels.back().word.forEachHole([&](uint64_t h) { holes.push_back(h); });
        return holes;
    }

    ViablePair finish(ConstructionMeta meta) {
        report.levelsBuilt = levels.size() - 1;
        return ViablePair(std::move(levels), std::move(checkpoints), std::move(meta));
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// construction A (k does not divide l)

namespace {

// smallest admissible prime for the next strict level of construction A, plus
// the conditions it was chosen to satisfy
uint64_t strictNextPrimeA(const NtlemParams& params, uint64_t nt, size_t t, uint64_t k,
                          double phiSoFar, ConstructionReport& report, uint64_t searchBudget) {
    // (powcond) p > 30 n_t^k
    uint64_t powFloor = ipowClamped(nt, k, UINT64_MAX / 31);
    powFloor = powFloor > UINT64_MAX / 30 ? UINT64_MAX : 30 * powFloor;
    // (phicond) phi(n_{t+1})/n_{t+1} > 9/10
    double phiFloor = phiSoFar > 0.9 ? 1.0 / (1.0 - 0.9 / phiSoFar) : INFINITY;
    if (!std::isfinite(phiFloor)) throw verdict_error("phicond cannot be recovered at this level");
    // (sumcond) term for this transition, geometric allocation 0.1 * 2^-t
    // (the series starts at t = 1, so the first transition is free)
    double sumFloor = 0;
    if (t >= 1) {
        double allowance = 0.1 * std::pow(0.5, (double)t);
        double root = 8.0 * (double)k * (double)nt / allowance;
        sumFloor = root * root;
    }
    double floorD = std::max({(double)powFloor + 1, phiFloor, sumFloor + 1, 2.0});
    uint64_t floor = floorD > 9e18 ? UINT64_MAX : (uint64_t)floorD;
    if (floor == UINT64_MAX)
        throw budget_error("strict prime floor exceeds 64-bit search range");
    uint64_t p = findPrimes(params, 1, floor, nullptr, std::max(searchBudget, floor * 2))[0];
    recordCondition(report, "powcond", t + 1, p > powFloor, (double)powFloor, (double)p,
                    "p > 30 n_t^k");
    recordCondition(report, "phicond", t + 1, phiSoFar * (1.0 - 1.0 / (double)p) > 0.9, 0.9,
                    phiSoFar * (1.0 - 1.0 / (double)p), "phi(n)/n > 9/10");
    if (t >= 1)
        recordCondition(report, "sumcond", t + 1,
                        8.0 * (double)k * (double)nt / std::sqrt((double)p) <=
                            0.1 * std::pow(0.5, (double)t),
                        0.1 * std::pow(0.5, (double)t),
                        8.0 * (double)k * (double)nt / std::sqrt((double)p),
                        "geometric share of sum 8k n_t / sqrt(p) < 1/10");
    recordCondition(report, "ntlem-gcd", t + 1, std::gcd(p - 1, params.gcdModulus) == params.gcdTarget,
                    (double)params.gcdTarget, (double)std::gcd(p - 1, params.gcdModulus),
                    "gcd(p-1, G) = g");
    return p;
}

}  // namespace

ConstructionResult buildConstructionA(const ConstructionConfig& cfg) {
    if (cfg.k < 1 || cfg.l < 1) throw input_error("construction A requires k, l >= 1");
    if (cfg.l % cfg.k == 0) throw input_error("construction A requires k not dividing l");
    uint64_t k = (uint64_t)cfg.k;
    NtlemParams params = ntlemParams(k, (uint64_t)cfg.l);

    bool autoSearch = cfg.levelPrimes.empty();
    if (!autoSearch && cfg.levelPrimes.size() != cfg.levels)
        throw input_error("need one prime per level");

    TowerBuilder tb(cfg);
    double phiSoFar = 1.0;
    for (size_t t = 0; t < cfg.levels; ++t) {
        uint64_t p;
        if (autoSearch) {
            if (cfg.mode == BuildMode::Relaxed)
                throw input_error("relaxed construction A needs explicit primes");
            p = strictNextPrimeA(params, tb.modulus(), t, k, phiSoFar, tb.report,
                                 cfg.primeSearchBudget);
        } else {
            if (cfg.levelPrimes[t].size() != 1)
                throw input_error("construction A takes exactly one prime per level");
            p = cfg.levelPrimes[t][0];
            if (!isPrime(p)) throw input_error(std::to_string(p) + " is not prime");
            if (std::gcd(p - 1, params.gcdModulus) != params.gcdTarget)
                throw input_error("invalid prime " + std::to_string(p) +
                                  ": gcd(p-1, " + std::to_string(params.gcdModulus) +
                                  ") != " + std::to_string(params.gcdTarget));
            double powFloor = 30.0 * (double)ipowClamped(tb.modulus(), k, UINT64_MAX / 31);
            recordCondition(tb.report, "powcond", t + 1, (double)p > powFloor, powFloor, (double)p,
                            "p > 30 n_t^k");
            recordCondition(tb.report, "phicond", t + 1, phiSoFar * (1.0 - 1.0 / (double)p) > 0.9,
                            0.9, phiSoFar * (1.0 - 1.0 / (double)p), "phi(n)/n > 9/10");
            if (t >= 1)
                recordCondition(tb.report, "sumcond", t + 1,
                                8.0 * (double)k * (double)tb.modulus() / std::sqrt((double)p) <=
                                    0.1 * std::pow(0.5, (double)t),
                                0.1 * std::pow(0.5, (double)t),
                                8.0 * (double)k * (double)tb.modulus() / std::sqrt((double)p), "");
        }
        for (uint64_t q : tb.primesSoFar)
            if (q == p) throw input_error("tower primes must be distinct");

        uint64_t nt = tb.modulus();
        if ((unsigned __int128)nt * p > cfg.materializationBudget) {
            tb.report.budgetStopped = true;
            recordCondition(tb.report, "materialization", t + 1, false,
                            (double)cfg.materializationBudget, (double)nt * (double)p,
                            "level refused: n exceeds the symbol budget; conditions above report "
                            "the required magnitudes");
            break;
        }
        uint64_t n1 = nt * p;
        phiSoFar *= 1.0 - 1.0 / (double)p;
        std::vector<uint64_t> holes = tb.parentHoles();
        tb.primesSoFar.push_back(p);
        std::sort(tb.primesSoFar.begin(), tb.primesSoFar.end());

        SymbolBuffer buf = tb.levels.back().word.tiled(p);
        // batch fill first (edges, and everything outside the unit k-th powers)
        UnitPowerKTester tester(tb.primesSoFar, k);
        tb.batchFill(buf, nt, holes, tb.primesSoFar,
                     [&](const std::vector<uint64_t>& res) { return tester.contains(res); });
        // then the k-th power positions, zeros at even t
        tb.powerFill(buf, n1, t, k);
        tb.checkpoints.push_back(kthRootFloor(n1, k));
        tb.levels.push_back({n1, PartialWord(std::move(buf))});
    }
    if (cfg.mode == BuildMode::Strict && !autoSearch) assertStrict(tb.report);

    ConstructionMeta meta;
    meta.kind = "a";
    meta.k = cfg.k;
    meta.l = cfg.l;
    meta.mode = modeName(cfg.mode);
    meta.fillPolicy = fillName(cfg.fill);
    meta.seed = cfg.seed;
    ConstructionReport report = std::move(tb.report);
    ViablePair pair = tb.finish(std::move(meta));
    report.levelsBuilt = pair.levelCount() - 1;
    return {std::move(pair), std::move(report), std::nullopt};
}

// ---------------------------------------------------------------------------
// construction B (k divides l, k > 1)

namespace {

// strict construction B is infeasible at desk scale: the 2^(-omega/4) term of
// (indcond) forces omega(n_1) ~ 20 primes each larger than (12kl)^2. Report
// the required magnitudes instead of thrashing.
void strictSymbolicB(const ConstructionConfig& cfg, ConstructionReport& report) {
    uint64_t k = (uint64_t)cfg.k, l = (uint64_t)cfg.l;
    uint64_t primeFloor = (12 * k * l) * (12 * k * l);
    for (size_t t = 0; t < cfg.levels; ++t) {
        double allowance = 0.1 * std::pow(0.5, (double)(t + 1)) / 2.0;
        int omegaReq = (int)std::ceil(-4.0 * std::log2(allowance));
        auto primes = findPrimes([&](uint64_t p) { return (p - 1) % l == 0 && p > primeFloor; },
                                 (size_t)omegaReq, primeFloor + 1);
        double log10n = 0;
        for (uint64_t p : primes) log10n += std::log10((double)p);
        double phi = phiRatio(primes);
        double indFirst = std::pow(2.0, -omegaReq / 4.0);
        // second term of (indcond) ~ sqrt(n) / (phi(n)/k^omega), evaluated in logs
        double log10Second = log10n / (double)k -
                             (log10n + std::log10(phi) - omegaReq * std::log10((double)k));
        bool indHolds = indFirst <= allowance && log10Second < -2;
        recordCondition(report, "indcond", t + 1, indHolds, 2 * allowance,
                        indFirst + std::pow(10.0, log10Second),
                        "omega >= " + std::to_string(omegaReq) + ", log10(n) >= " +
                            std::to_string(log10n));
        recordCondition(report, "phicond2", t + 1, phi > 0.9, 0.9, phi,
                        "primes exceed (12kl)^2 = " + std::to_string(primeFloor));
        recordCondition(report, "powcond2", t + 1, true, 0, log10n,
                        "n_{t+1} > 10 n_t^k by construction of the magnitudes");
        recordCondition(report, "materialization", t + 1, false,
                        (double)cfg.materializationBudget, log10n,
                        "required n has ~" + std::to_string((int)log10n + 1) +
                            " digits; level not materialized");
        report.budgetStopped = true;
        break;  // nothing materializes, deeper levels only grow
    }
}

}  // namespace

ConstructionResult buildConstructionB(const ConstructionConfig& cfg) {
    if (cfg.k <= 1) throw input_error("construction B requires k > 1");
    if (cfg.l <= cfg.k || cfg.l % cfg.k != 0)
        throw input_error("construction B requires k | l with l > k");
    uint64_t k = (uint64_t)cfg.k, l = (uint64_t)cfg.l;
    uint64_t strictPrimeFloor = (12 * k * l) * (12 * k * l);

    TowerBuilder tb(cfg);
    bool autoSearch = cfg.levelPrimes.empty();
    if (autoSearch) {
        if (cfg.mode == BuildMode::Relaxed)
            throw input_error("relaxed construction B needs explicit level primes");
        strictSymbolicB(cfg, tb.report);
    } else if (cfg.levelPrimes.size() != cfg.levels) {
        throw input_error("need one prime batch per level");
    }

    if (!autoSearch) {
        for (size_t t = 0; t < cfg.levels; ++t) {
            const auto& batch = cfg.levelPrimes[t];
            if (batch.empty()) throw input_error("empty prime batch at level " + std::to_string(t));
            for (uint64_t p : batch) {
                if (!isPrime(p)) throw input_error(std::to_string(p) + " is not prime");
                if ((p - 1) % l != 0)
                    throw input_error("invalid prime " + std::to_string(p) + ": l does not divide p-1");
                recordCondition(tb.report, "prime-floor", t + 1, p > strictPrimeFloor,
                                (double)strictPrimeFloor, (double)p, "p > (12kl)^2");
                for (uint64_t q : tb.primesSoFar)
                    if (q == p) throw input_error("tower primes must be distinct");
                tb.primesSoFar.push_back(p);
            }
            uint64_t nt = tb.modulus();
            unsigned __int128 wide = nt;
            for (uint64_t p : batch) wide *= p;
            if (wide > cfg.materializationBudget) {
                tb.report.budgetStopped = true;
                recordCondition(tb.report, "materialization", t + 1, false,
                                (double)cfg.materializationBudget, (double)wide, "level refused");
                for (size_t i = 0; i < batch.size(); ++i) tb.primesSoFar.pop_back();
                break;
            }
            uint64_t n1 = (uint64_t)wide;
            std::sort(tb.primesSoFar.begin(), tb.primesSoFar.end());
            std::vector<uint64_t> holes = tb.parentHoles();

            // quantitative conditions of the k | l case, reported per level
            double phi = phiRatio(tb.primesSoFar);
            recordCondition(tb.report, "phicond2", t + 1, phi > 0.9, 0.9, phi, "phi(n)/n > 9/10");
            uint64_t powBound = ipowClamped(nt, k, UINT64_MAX / 11);
            recordCondition(tb.report, "powcond2", t + 1,
                            powBound <= UINT64_MAX / 10 && n1 > 10 * powBound, 10.0 * (double)powBound,
                            (double)n1, "n_{t+1} > 10 n_t^k");
            int omega1 = (int)tb.primesSoFar.size();
            double indTerm = std::pow(2.0, -omega1 / 4.0) +
                             (2.0 * (double)nt + std::pow((double)n1, 1.0 / (double)k)) /
                                 (phi * (double)n1 / std::pow((double)k, omega1));
            recordCondition(tb.report, "indcond", t + 1,
                            indTerm <= 0.1 * std::pow(0.5, (double)(t + 1)),
                            0.1 * std::pow(0.5, (double)(t + 1)), indTerm,
                            "geometric share of the inductive sum");

            SymbolBuffer buf = tb.levels.back().word.tiled(n1 / nt);
            // powers first in the k | l construction
            tb.powerFill(buf, n1, t, k);
            // then keep only holes inside A_{t+1}
            ASetTester tester(tb.primesSoFar, k, l);
            tb.batchFill(buf, nt, holes, tb.primesSoFar,
                         [&](const std::vector<uint64_t>& res) { return tester.inA(res); });
            tb.checkpoints.push_back(kthRootFloor(n1, k));
            tb.levels.push_back({n1, PartialWord(std::move(buf))});
        }
        if (cfg.mode == BuildMode::Strict) assertStrict(tb.report);
    }

    ConstructionMeta meta;
    meta.kind = "b";
    meta.k = cfg.k;
    meta.l = cfg.l;
    meta.mode = modeName(cfg.mode);
    meta.fillPolicy = fillName(cfg.fill);
    meta.seed = cfg.seed;
    ConstructionReport report = std::move(tb.report);
    ViablePair pair = tb.finish(std::move(meta));
    report.levelsBuilt = pair.levelCount() - 1;
    return {std::move(pair), std::move(report), std::nullopt};
}

// ---------------------------------------------------------------------------
// polynomial normalization for the strictly ergodic construction

namespace {

// 1 + max |c_j| / |c_top|: all real roots lie strictly below this
uint64_t cauchyBound(const IntPolynomial& P) {
    const auto& c = P.coefficients();
    if (c.size() <= 1) return 1;
    long double top = (long double)std::abs((double)c.back());
    long double m = 0;
    for (size_t i = 0; i + 1 < c.size(); ++i)
        m = std::max(m, (long double)std::abs((double)c[i]));
    return (uint64_t)(m / top) + 2;
}

bool positiveForAllPositive(const IntPolynomial& R) {
    if (R.isZero()) return false;
    if (R.coefficients().back() < 0) return false;
    uint64_t limit = cauchyBound(R) + 1;
    if (limit > 20'000'000)
        throw budget_error("normalization scan: coefficient ratios too large to check exhaustively");
    for (uint64_t x = 1; x <= limit; ++x)
        if (R.evalClamped((int64_t)x, ((__int128)1) << 100) <= 0) return false;
    return true;
}

IntPolynomial minusMonomial(const IntPolynomial& P, int degree, int64_t coeff) {
    std::vector<int64_t> c(P.coefficients());
    if ((int)c.size() <= degree) c.resize(degree + 1, 0);
    c[degree] -= coeff;
    return IntPolynomial(std::move(c));
}

}  // namespace

NormalizedPoly normalizePoly(const IntPolynomial& P) {
    if (P.degree() <= 1) throw input_error("normalizePoly requires degree > 1");
    int sign = P.coefficients().back() > 0 ? 1 : -1;
    IntPolynomial base = sign == 1 ? P : P.negated();
    int64_t M = base.leadingMagnitude();
    int d = base.degree();
    for (int64_t shift = 0; shift <= 1'000'000; ++shift) {
        IntPolynomial Q = base.shifted(shift);
        // Q(n) > M n^d for n >= 1
        if (!positiveForAllPositive(minusMonomial(Q, d, M))) continue;
        // Q(n+1) - Q(n) > n for n >= 1
        std::vector<int64_t> dc(Q.shifted(1).coefficients());
        const auto& qc = Q.coefficients();
        dc.resize(std::max(dc.size(), qc.size()), 0);
        for (size_t i = 0; i < qc.size(); ++i) dc[i] -= qc[i];
        if (!positiveForAllPositive(minusMonomial(IntPolynomial(std::move(dc)), 1, 1))) continue;
        return {Q, shift, sign};
    }
    throw verdict_error("normalizePoly found no admissible shift");
}

uint64_t largestArgumentBelow(const IntPolynomial& P, uint64_t bound) {
    if (P.degree() < 1 || P.coefficients().back() <= 0)
        throw input_error("threshold scan needs a nonconstant polynomial with positive leading coefficient");
    __int128 b = (__int128)bound;
    // the clamp must sit far above both the bound and any coefficient, so a
    // saturated Horner partial can never swing back across the threshold
    constexpr __int128 kFar = (__int128)1 << 100;
    auto below = [&](uint64_t x) { return P.evalClamped((int64_t)x, kFar) < b; };
    uint64_t x0 = cauchyBound(P.derivative()) + 1;  // P strictly increasing beyond
    if (x0 > 100'000'000)
        throw budget_error("threshold scan: derivative coefficient ratios too large");
    uint64_t best = 0;
    for (uint64_t i = 1; i <= x0; ++i)
        if (below(i)) best = i;
    if (below(x0)) {
        uint64_t lo = x0, hi = x0;
        while (hi < (1ull << 62) && below(hi * 2)) { lo = hi * 2; hi = lo; }
        hi = hi < (1ull << 62) ? hi * 2 : hi;
        // last admissible argument in (lo, hi]
        while (lo + 1 < hi) {
            uint64_t mid = lo + (hi - lo) / 2;
            if (below(mid)) lo = mid;
            else hi = mid;
        }
        best = std::max(best, lo);
    }
    return best;
}

// ---------------------------------------------------------------------------
// the strictly ergodic counterexample construction

namespace {

void buildIwanikLevel(const IntPolynomial& P, size_t t, uint64_t m, IwanikBlocks& blocks,
                      std::vector<Level>& levels, std::vector<uint64_t>& checkpoints) {
    uint64_t nt = blocks.moduli.back();
    uint64_t n1 = nt * m;
    const PartialWord& b0 = blocks.blockZero[t];
    const PartialWord& b1 = blocks.blockOne[t];
    const ResidueSet& at = blocks.differenceSet[t];

    std::vector<int8_t> eps(m, -1);
    eps[0] = 0;
    eps[m - 1] = 1;
    // condition (2): pin the slot of every qualifying i so that the word
    // carries the forced value at position P(i). Even t forces 0 (the parity
    // that makes the checkpoint averages alternate with even positive).
    if (n1 > nt + 1) {
        Symbol target = t % 2 == 0 ? Symbol::Zero : Symbol::One;
        uint64_t ctop = largestArgumentBelow(P, n1 - nt);
        for (uint64_t i = nt + 1; i <= ctop; ++i) {
            int64_t v = P.evalChecked((int64_t)i);
            if (v < 0 || (uint64_t)v >= n1 - nt) continue;
            uint64_t r = (uint64_t)v % nt;
            if (!at.contains(r)) continue;
            uint64_t slot = (uint64_t)v / nt;
            if (slot < 1 || slot > m - 2)
                throw verdict_error("iwanik pin collides with an endpoint slot at level " +
                                    std::to_string(t));
            int8_t want = b0.at(r) == target ? 0 : 1;
            if (eps[slot] != -1 && eps[slot] != want)
                throw verdict_error("iwanik pin conflict at level " + std::to_string(t) +
                                    " slot " + std::to_string(slot));
            eps[slot] = want;
        }
    }
    // condition (3): zero quota
    uint64_t quota0 = m % 2 == 0 ? m / 2 : (m + 1) / 2;
    uint64_t count0 = 0, count1 = 0;
    for (int8_t e : eps) {
        if (e == 0) ++count0;
        if (e == 1) ++count1;
    }
    if (count0 > quota0 || count1 > m - quota0)
        throw verdict_error("iwanik pins exceed the zero quota at level " + std::to_string(t));
    for (uint64_t j = 0; j < m; ++j) {
        if (eps[j] != -1) continue;
        if (count0 < quota0) { eps[j] = 0; ++count0; }
        else { eps[j] = 1; ++count1; }
    }
    std::vector<int8_t> epsPrime(m);
    epsPrime[0] = 0;
    epsPrime[m - 1] = 1;
    for (uint64_t j = 1; j + 1 < m; ++j) epsPrime[j] = (int8_t)(1 - eps[j]);

    SymbolBuffer buf0(n1, Symbol::Zero), buf1(n1, Symbol::Zero);
    for (uint64_t j = 0; j < m; ++j) {
        (eps[j] == 0 ? b0 : b1).blitInto(buf0, j * nt);
        (epsPrime[j] == 0 ? b0 : b1).blitInto(buf1, j * nt);
    }
    PartialWord nb0(std::move(buf0)), nb1(std::move(buf1));

    ResidueSet diff(n1);
    SymbolBuffer wordBuf(n1, Symbol::Zero);
    for (uint64_t i = 0; i < n1; ++i) {
        Symbol a = nb0.at(i), b = nb1.at(i);
        if (a != b) {
            diff.insert(i);
            wordBuf.set(i, Symbol::Hole);
        } else {
            wordBuf.set(i, a);
        }
    }

    blocks.moduli.push_back(n1);
    blocks.epsilon.push_back(std::vector<uint8_t>(eps.begin(), eps.end()));
    blocks.epsilonPrime.push_back(std::vector<uint8_t>(epsPrime.begin(), epsPrime.end()));
    blocks.blockZero.push_back(std::move(nb0));
    blocks.blockOne.push_back(std::move(nb1));
    blocks.differenceSet.push_back(std::move(diff));
    checkpoints.push_back(largestArgumentBelow(P, n1 - nt));
    levels.push_back({n1, PartialWord(std::move(wordBuf))});
}

}  // namespace

ConstructionResult buildIwanik(const ConstructionConfig& cfg) {
    const IntPolynomial& P = cfg.poly;
    if (P.degree() <= 1) throw input_error("iwanik construction requires deg P > 1");
    if (P.coefficients().back() <= 0)
        throw input_error("iwanik construction requires a positive leading coefficient "
                          "(normalize the polynomial first)");
    ConstructionReport report;
    report.mode = cfg.mode;
    report.levelsRequested = cfg.levels;

    uint64_t M = (uint64_t)P.leadingMagnitude();
    int d = P.degree();

    std::vector<uint64_t> branching = cfg.branching;
    bool autoSearch = branching.empty();
    if (autoSearch && cfg.mode == BuildMode::Relaxed)
        throw input_error("relaxed iwanik construction needs explicit branching");
    if (!autoSearch && branching.size() != cfg.levels)
        throw input_error("need one branching factor per level");

    IwanikBlocks blocks;
    blocks.moduli = {1};
    blocks.blockZero = {PartialWord("0")};
    blocks.blockOne = {PartialWord("1")};
    {
        ResidueSet a0(1);
        a0.insert(0);
        blocks.differenceSet = {std::move(a0)};
    }
    std::vector<Level> levels{{1, PartialWord("?")}};
    std::vector<uint64_t> checkpoints;

    std::optional<int> parity;
    for (size_t t = 0; t < cfg.levels; ++t) {
        uint64_t nt = blocks.moduli.back();
        uint64_t m = 0;
        if (autoSearch) {
            // strict growth: n_{t+1} > (M+1)(10 n_t)^d and a geometric share of
            // (recipsum): 2 n_t / n_{t+1} < (1/5) 2^{-(t+1)}
            uint64_t growFloor = ipowClamped(10 * nt, (uint64_t)d, UINT64_MAX / (M + 2));
            unsigned __int128 need = (unsigned __int128)(M + 1) * growFloor + 1;
            unsigned __int128 recip = (unsigned __int128)nt * 10 * (1ull << (t + 1)) + 1;
            if (recip > need) need = recip;
            uint64_t mFloor = (uint64_t)((need + nt - 1) / nt);
            bool found = false;
            for (uint64_t cand = mFloor; cand < mFloor + 1000; ++cand) {
                if (parity && (cand % 2) != (uint64_t)*parity) continue;
                unsigned __int128 n1 = (unsigned __int128)nt * cand;
                if (n1 > cfg.materializationBudget) break;
                if (!isPermutationMod(P, (uint64_t)n1, cfg.materializationBudget)) continue;
                m = cand;
                found = true;
                break;
            }
            if (!found) {
                report.budgetStopped = true;
                recordCondition(report, "growth", t + 1, true, (double)need, 0,
                                "required n_{t+1} > (M+1)(10 n_t)^d = " +
                                    std::to_string((double)need) + "; level not materialized");
                recordCondition(report, "recipsum", t + 1, true, (double)recip, 0,
                                "geometric share of sum 2 n_t / n_{t+1} < 1/5");
                recordCondition(report, "materialization", t + 1, false,
                                (double)cfg.materializationBudget, (double)need, "level refused");
                break;
            }
            recordCondition(report, "growth", t + 1, (unsigned __int128)nt * m > (unsigned __int128)(M + 1) * growFloor,
                            (double)((M + 1) * (double)growFloor), (double)nt * (double)m,
                            "n_{t+1} > (M+1)(10 n_t)^d");
            recordCondition(report, "recipsum", t + 1,
                            2.0 * (double)nt / ((double)nt * (double)m) <
                                0.2 * std::pow(0.5, (double)(t + 1)),
                            0.2 * std::pow(0.5, (double)(t + 1)), 2.0 / (double)m, "");
        } else {
            m = branching[t];
            if (m < 2) throw input_error("branching factors must be >= 2");
            unsigned __int128 n1 = (unsigned __int128)nt * m;
            if (n1 > cfg.materializationBudget) {
                report.budgetStopped = true;
                recordCondition(report, "materialization", t + 1, false,
                                (double)cfg.materializationBudget, (double)n1, "level refused");
                break;
            }
            if (!isPermutationMod(P, (uint64_t)n1, cfg.materializationBudget))
                throw input_error("permutativity violation: P is not a permutation mod " +
                                  std::to_string((uint64_t)n1));
            recordCondition(report, "growth", t + 1,
                            (double)(uint64_t)n1 > (double)(M + 1) * std::pow(10.0 * (double)nt, d),
                            (double)(M + 1) * std::pow(10.0 * (double)nt, d), (double)(uint64_t)n1,
                            "n_{t+1} > (M+1)(10 n_t)^d");
            recordCondition(report, "recipsum", t + 1,
                            2.0 / (double)m < 0.2 * std::pow(0.5, (double)(t + 1)),
                            0.2 * std::pow(0.5, (double)(t + 1)), 2.0 / (double)m, "");
        }
        if (parity && (m % 2) != (uint64_t)*parity)
            throw input_error("branching factors must share parity");
        if (!parity) parity = (int)(m % 2);
        buildIwanikLevel(P, t, m, blocks, levels, checkpoints);
    }
    if (cfg.mode == BuildMode::Strict && !autoSearch) assertStrict(report);

    ConstructionMeta meta;
    meta.kind = "iwanik";
    meta.poly = P.toString();
    meta.mode = modeName(cfg.mode);
    meta.fillPolicy = fillName(cfg.fill);
    meta.seed = cfg.seed;
    report.levelsBuilt = levels.size() - 1;
    ViablePair pair(std::move(levels), std::move(checkpoints), std::move(meta));
    return {std::move(pair), std::move(report), std::move(blocks)};
}

ConstructionResult build(const ConstructionConfig& cfg) {
    switch (cfg.kind) {
        case ConstructionKind::A: return buildConstructionA(cfg);
        case ConstructionKind::B: return buildConstructionB(cfg);
        default: return buildIwanik(cfg);
    }
}

// ---------------------------------------------------------------------------
// invariant verification

namespace {

void addCheck(VerifyReport& report, bool strictMode, InvariantCheck check) {
    if (check.hard && !check.pass) report.structuralPass = false;
    if (!check.hard && !check.pass && strictMode) report.boundsPass = false;
    report.checks.push_back(std::move(check));
}

std::vector<uint64_t> residuesOf(uint64_t a, const std::vector<uint64_t>& primes) {
    std::vector<uint64_t> res(primes.size());
    for (size_t i = 0; i < primes.size(); ++i) res[i] = a % primes[i];
    return res;
}

void verifyTowerHoles(const ViablePair& pair, bool isB, bool strictMode, VerifyReport& report) {
    uint64_t k = (uint64_t)pair.meta().k, l = (uint64_t)pair.meta().l;
    for (size_t t = 1; t < pair.levelCount(); ++t) {
        uint64_t n = pair.modulus(t);
        auto fac = factorize(n);
        auto primes = fac.primes();
        std::optional<ASetTester> aTester;
        std::optional<UnitPowerKTester> kTester;
        if (isB) aTester.emplace(primes, k, l);
        else kTester.emplace(primes, k);

        uint64_t badHole = n;  // sentinel: no violation
        pair.word(t).forEachHole([&](uint64_t h) {
            if (badHole != n) return;
            auto res = residuesOf(h, primes);
            bool ok = isB ? aTester->inA(res) : kTester->contains(res);
            if (!ok) badHole = h;
        });
        addCheck(report, strictMode,
                 {isB ? "holes-in-A" : "holes-in-unit-powers", t, true, badHole == n, 0, 0,
                  badHole == n ? "" : "hole at " + std::to_string(badHole) + " outside the admissible set"});

        if (isB) {
            uint64_t c = kthRootFloor(n, k);
            uint64_t badPow = n;
            for (uint64_t i = 0; i <= c && badPow == n; ++i) {
                uint64_t pos = ipowClamped(i, k, n);
                if (pos < n && pair.word(t).at(pos) == Symbol::Hole) badPow = pos;
            }
            addCheck(report, strictMode,
                     {"powers-filled", t, true, badPow == n, 0, 0,
                      badPow == n ? "" : "hole at power position " + std::to_string(badPow)});
        }

        // quantitative lower bound on the hole count
        double holes = (double)pair.word(t).holeCount();
        double phi = (double)fac.phi();
        double ratio;
        std::string name;
        if (isB) {
            ratio = holes * std::pow((double)k, fac.omega()) / phi;
            name = "holes-vs-phi (?_t k^omega / phi)";
        } else {
            NtlemParams params = ntlemParams(k, l);
            ratio = holes * std::pow((double)params.kPrime, (double)t) / phi;
            name = "holes-vs-phi (?_t k'^t / phi)";
        }
        addCheck(report, strictMode, {name, t, false, ratio >= 0.9, ratio, 0.9, ""});
    }
}

void verifyIwanik(const ViablePair& pair, const IwanikBlocks& blocks, bool strictMode,
                  VerifyReport& report) {
    IntPolynomial P = IntPolynomial::parse(pair.meta().poly);
    size_t built = blocks.moduli.size() - 1;
    for (size_t t = 0; t < built; ++t) {
        uint64_t nt = blocks.moduli[t], n1 = blocks.moduli[t + 1];
        uint64_t m = blocks.branch(t);
        const auto& eps = blocks.epsilon[t];
        const auto& epsP = blocks.epsilonPrime[t];

        bool endpointsOk = eps[0] == 0 && eps[m - 1] == 1 && epsP[0] == 0 && epsP[m - 1] == 1;
        for (uint64_t j = 1; j + 1 < m && endpointsOk; ++j)
            if (epsP[j] != 1 - eps[j]) endpointsOk = false;
        addCheck(report, strictMode, {"sign-word-endpoints", t + 1, true, endpointsOk, 0, 0, ""});

        uint64_t quota0 = m % 2 == 0 ? m / 2 : (m + 1) / 2;
        uint64_t zeros = 0;
        for (uint8_t e : eps) zeros += e == 0;
        addCheck(report, strictMode,
                 {"zero-quota", t + 1, true, zeros == quota0, (double)zeros, (double)quota0, ""});

        // block structure: B_{t+1} starts with B_t^(0) and ends with B_t^(1)
        bool blockEdges = true;
        for (uint64_t i = 0; i < nt && blockEdges; ++i) {
            if (blocks.blockZero[t + 1].at(i) != blocks.blockZero[t].at(i)) blockEdges = false;
            if (blocks.blockOne[t + 1].at(i) != blocks.blockZero[t].at(i)) blockEdges = false;
            if (blocks.blockZero[t + 1].at(n1 - nt + i) != blocks.blockOne[t].at(i)) blockEdges = false;
            if (blocks.blockOne[t + 1].at(n1 - nt + i) != blocks.blockOne[t].at(i)) blockEdges = false;
        }
        addCheck(report, strictMode, {"block-endpoints", t + 1, true, blockEdges, 0, 0, ""});

        // condition (2) pins hold in the emitted block
        bool pinsOk = true;
        if (n1 > nt + 1) {
            Symbol target = t % 2 == 0 ? Symbol::Zero : Symbol::One;
            uint64_t ctop = largestArgumentBelow(P, n1 - nt);
            for (uint64_t i = nt + 1; i <= ctop && pinsOk; ++i) {
                int64_t v = P.evalChecked((int64_t)i);
                if (v < 0 || (uint64_t)v >= n1 - nt) continue;
                if (!blocks.differenceSet[t].contains((uint64_t)v % nt)) continue;
                if (blocks.blockZero[t + 1].at((uint64_t)v) != target) pinsOk = false;
            }
        }
        addCheck(report, strictMode, {"condition-2-pins", t + 1, true, pinsOk, 0, 0, ""});

        uint64_t predicted = (m - 2) * blocks.differenceSet[t].size();
        uint64_t actual = blocks.differenceSet[t + 1].size();
        addCheck(report, strictMode,
                 {"difference-growth |A_{t+1}| >= (m-2)|A_t|", t + 1, true, actual >= predicted,
                  (double)actual, (double)predicted, ""});

        double frac = (double)actual / (double)n1;
        addCheck(report, strictMode, {"difference-density |A_t|/n_t", t + 1, false, frac >= 0.8,
                                      frac, 0.8, ""});

        // pair word must be the agreement of the two blocks
        bool agree = true;
        for (uint64_t i = 0; i < n1 && agree; ++i) {
            Symbol a = blocks.blockZero[t + 1].at(i), b = blocks.blockOne[t + 1].at(i);
            Symbol w = pair.word(t + 1).at(i);
            if (a == b ? w != a : w != Symbol::Hole) agree = false;
        }
        addCheck(report, strictMode, {"word-is-block-agreement", t + 1, true, agree, 0, 0, ""});
    }
}

}  // namespace

VerifyReport verifyConstructionInvariants(const ViablePair& pair,
                                          const std::optional<IwanikBlocks>& blocks) {
    VerifyReport report;
    bool strictMode = pair.meta().mode == "strict";
    ViabilityReport viability = viabilityCheck(pair);
    addCheck(report, strictMode,
             {"viability", pair.topLevel(), true, viability.viable, 0, 0,
              viability.viable ? "" : viability.first->detail});

    const std::string& kind = pair.meta().kind;
    if (kind == "a") {
        verifyTowerHoles(pair, false, strictMode, report);
    } else if (kind == "b") {
        verifyTowerHoles(pair, true, strictMode, report);
    } else if (kind == "iwanik") {
        if (blocks) {
            verifyIwanik(pair, *blocks, strictMode, report);
        } else {
            ConstructionResult replay = buildIwanik(configFromMeta(pair));
            verifyIwanik(pair, *replay.blocks, strictMode, report);
        }
    }
    return report;
}

ConstructionConfig configFromMeta(const ViablePair& pair) {
    const ConstructionMeta& m = pair.meta();
    ConstructionConfig cfg;
    cfg.levels = pair.levelCount() - 1;
    cfg.mode = m.mode == "strict" ? BuildMode::Strict : BuildMode::Relaxed;
    cfg.fill = fillFromName(m.fillPolicy.empty() ? "zero" : m.fillPolicy);
    cfg.seed = m.seed;
    cfg.materializationBudget = std::max<uint64_t>(1ull << 30, pair.topModulus());
    if (m.kind == "a") {
        cfg.kind = ConstructionKind::A;
        cfg.k = m.k;
        cfg.l = m.l;
        for (size_t t = 1; t < pair.levelCount(); ++t)
            cfg.levelPrimes.push_back({pair.modulus(t) / pair.modulus(t - 1)});
    } else if (m.kind == "b") {
        cfg.kind = ConstructionKind::B;
        cfg.k = m.k;
        cfg.l = m.l;
        for (size_t t = 1; t < pair.levelCount(); ++t) {
            uint64_t ratio = pair.modulus(t) / pair.modulus(t - 1);
            auto fac = factorize(ratio);
            if (!fac.squarefree()) throw input_error("level ratio is not squarefree");
            cfg.levelPrimes.push_back(fac.primes());
        }
    } else if (m.kind == "iwanik") {
        cfg.kind = ConstructionKind::Iwanik;
        cfg.poly = IntPolynomial::parse(m.poly);
        for (size_t t = 1; t < pair.levelCount(); ++t)
            cfg.branching.push_back(pair.modulus(t) / pair.modulus(t - 1));
    } else {
        throw input_error("pair has no construction metadata to replay");
    }
    return cfg;
}

}  // namespace toeplitz
