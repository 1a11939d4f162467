#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "toeplitz/errors.hpp"
#include "toeplitz/ntcore.hpp"
#include "toeplitz/rational.hpp"

using namespace toeplitz;

namespace {

// oracle: rho by direct enumeration
uint64_t rhoBrute(uint64_t k, uint64_t N, uint64_t n, uint64_t a) {
    uint64_t count = 0;
    for (uint64_t m = 1; m <= N; ++m)
        if (powMod(m, k, n) == a % n) ++count;
    return count;
}

// oracle: Weil counting by full enumeration of F_p x F_p
uint64_t weilBrute(uint64_t p, uint64_t k, uint64_t l, uint64_t a) {
    uint64_t count = 0;
    for (uint64_t x = 0; x < p; ++x)
        for (uint64_t y = 0; y < p; ++y)
            if ((powMod(x, k, p) + p - powMod(y, l, p)) % p == a % p) ++count;
    return count;
}

// oracle: the A set by per-element tests along an independent route
// (k-th power units via image enumeration, l-th power test via Euler powers)
std::set<uint64_t> aSetBrute(uint64_t n, uint64_t k, uint64_t l) {
    auto fac = factorize(n);
    auto primes = fac.primes();
    std::set<uint64_t> kthPowers;
    for (uint64_t u = 0; u < n; ++u)
        if (std::gcd(u, n) == 1) kthPowers.insert(powMod(u, k, n));
    int threshold = aSetBadCountThreshold(fac.omega());
    std::set<uint64_t> out;
    for (uint64_t a = 0; a < n; ++a) {
        if (std::gcd(a, n) != 1 || !kthPowers.count(a)) continue;
        int bad = 0;
        for (uint64_t p : primes)
            if (powMod(a % p, (p - 1) / l, p) != 1) ++bad;
        if (bad >= threshold) out.insert(a);
    }
    return out;
}

Rational evalRational(const IntPolynomial& P, const Rational& x) {
    Rational acc(0);
    for (size_t i = P.coefficients().size(); i-- > 0;)
        acc = acc * x + Rational(P.coefficients()[i]);
    return acc;
}

Rational ratPow(const Rational& x, uint64_t e) {
    Rational acc(1);
    for (uint64_t i = 0; i < e; ++i) acc = acc * x;
    return acc;
}

}  // namespace

TEST_CASE("factorize: unit, semiprime, prime power") {
    auto f1 = factorize(1);
    CHECK(f1.factors().empty());
    CHECK(f1.phi() == 1);
    CHECK(f1.omega() == 0);
    CHECK(f1.bigOmega() == 0);

    auto f221 = factorize(221);
    REQUIRE(f221.factors().size() == 2);
    CHECK(f221.factors()[0] == std::pair<uint64_t, int>{13, 1});
    CHECK(f221.factors()[1] == std::pair<uint64_t, int>{17, 1});
    CHECK(f221.phi() == 192);
    CHECK(f221.squarefree());

    auto f16 = factorize(16);
    REQUIRE(f16.factors().size() == 1);
    CHECK(f16.factors()[0] == std::pair<uint64_t, int>{2, 4});
    CHECK(f16.bigOmega() == 4);
    CHECK_FALSE(f16.squarefree());

    CHECK_THROWS_AS(factorize(0), input_error);
}

TEST_CASE("factorize agrees with trial division and handles large semiprimes") {
    for (uint64_t n = 1; n <= 2000; ++n) {
        auto f = factorize(n);
        // phi by direct gcd count
        uint64_t phi = 0;
        for (uint64_t a = 1; a <= n; ++a)
            if (std::gcd(a, n) == 1) ++phi;
        CHECK(f.phi() == phi);
    }
    uint64_t p = 1'000'003, q = 1'000'033;
    auto f = factorize(p * q);
    REQUIRE(f.factors().size() == 2);
    CHECK(f.factors()[0].first == p);
    CHECK(f.factors()[1].first == q);
}

TEST_CASE("rho examples and period identity") {
    CHECK(rho(2, 5, 5, 4) == 2);
    CHECK(rho(3, 1, 1, 0) == 1);
    for (uint64_t N : {1ull, 7ull, 100ull}) CHECK(rho(3, N, 1, 0) == N);
    CHECK(rho(3, 7, 7, 6) == 3);

    std::mt19937_64 rng(7);
    for (int i = 0; i < 60; ++i) {
        uint64_t k = 1 + rng() % 6, n = 1 + rng() % 400, N = 1 + rng() % 900;
        uint64_t a = rng() % n;
        CHECK(rho(k, N, n, a) == rhoBrute(k, N, n, a));
    }
    // sum over residues of one full period counts every m exactly once
    for (uint64_t n : {1ull, 2ull, 12ull, 97ull, 360ull, 1024ull, 9973ull}) {
        for (uint64_t k : {2ull, 3ull, 6ull}) {
            uint64_t total = 0;
            for (uint64_t a = 0; a < n; ++a) total += rho(k, n, n, a);
            CHECK(total == n);
        }
    }
}

TEST_CASE("rhoMax examples, brute force, and the squarefree product route") {
    CHECK(rhoMax(1, 12) == 1);
    CHECK(rhoMax(2, 8) == 4);
    CHECK(rhoMax(2, 7) == 2);
    for (uint64_t n = 1; n <= 200; ++n) {
        for (uint64_t k : {2ull, 3ull, 5ull}) {
            uint64_t best = 0;
            for (uint64_t a = 0; a < n; ++a) best = std::max(best, rhoBrute(k, n, n, a));
            CHECK(rhoMax(k, n) == best);
        }
    }
    // histogram vs product formula on a squarefree modulus
    uint64_t n = 3 * 5 * 7 * 11;
    CHECK(rhoMax(2, n) == rhoMax(2, n, /*histogramBudget=*/1));
}

TEST_CASE("powerResidues examples and unit counts") {
    auto r7 = powerResidues(7, 2, true);
    CHECK(r7.elements() == std::vector<uint64_t>{1, 2, 4});
    auto r8 = powerResidues(8, 2, false);
    CHECK(r8.elements() == std::vector<uint64_t>{0, 1, 4});
    for (uint64_t n : {2ull, 15ull, 36ull, 97ull})
        CHECK(powerResidues(n, 1, true).size() == factorize(n).phi());

    // |R~^k_p| = (p-1)/gcd(p-1, k) for all primes p < 500, k <= 12
    for (uint64_t p = 2; p < 500; ++p) {
        if (!isPrime(p)) continue;
        for (uint64_t k = 1; k <= 12; ++k)
            CHECK(powerResidues(p, k, true).size() == (p - 1) / std::gcd(p - 1, k));
    }
}

TEST_CASE("isPermutationMod examples") {
    CHECK(isPermutationMod(IntPolynomial::monomial(3), 5));
    for (uint64_t n : {1ull, 2ull, 17ull, 100ull})
        CHECK(isPermutationMod(IntPolynomial::monomial(1), n));
    CHECK_FALSE(isPermutationMod(IntPolynomial::monomial(2), 3));
    for (uint64_t p = 2; p <= 200; ++p) {
        if (!isPrime(p)) continue;
        CHECK(isPermutationMod(IntPolynomial::monomial(3), p) == (std::gcd(3ull, p - 1) == 1));
    }
    CHECK_THROWS_AS(isPermutationMod(IntPolynomial::monomial(3), 1ull << 40), budget_error);
}

TEST_CASE("liftCriterion examples and cross-checks") {
    IntPolynomial cube = IntPolynomial::monomial(3);
    CHECK_FALSE(liftCriterion(cube, 2));
    CHECK_FALSE(isPermutationMod(cube, 4));  // cross-check: cubes mod 4 are 0,1,0,3

    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull})
        CHECK(liftCriterion(IntPolynomial::monomial(1), p));

    IntPolynomial affine({1, 2});  // 2x + 1
    CHECK(liftCriterion(affine, 5));
    CHECK(isPermutationMod(affine, 25));
}

TEST_CASE("liftCriterion equals permutation mod p^2 on a sampled family") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        std::vector<int64_t> coeffs(4);
        for (auto& c : coeffs) c = (int64_t)(rng() % 7) - 3;
        IntPolynomial P(std::move(coeffs));
        for (uint64_t p : {2ull, 3ull, 5ull}) {
            CHECK(liftCriterion(P, p) == isPermutationMod(P, p * p));
        }
    }
}

TEST_CASE("dickson base cases and recurrence") {
    CHECK(dickson(1, 4) == IntPolynomial::monomial(1));
    CHECK(dickson(2, 3) == IntPolynomial({-6, 0, 1}));
    CHECK(dickson(3, 2) == IntPolynomial({0, -6, 0, 1}));  // x^3 - 3*2*x
    CHECK(dickson(3, 0) == IntPolynomial::monomial(3));
}

TEST_CASE("dickson functional equation in exact rationals") {
    for (uint64_t n = 1; n <= 10; ++n) {
        for (int64_t alpha = -5; alpha <= 5; ++alpha) {
            IntPolynomial D = dickson(n, alpha);
            for (int64_t xi = -7; xi <= 7; ++xi) {
                if (xi == 0) continue;
                Rational x(xi);
                Rational arg = x + Rational(alpha) / x;
                Rational lhs = evalRational(D, arg);
                Rational rhs = ratPow(x, n) + ratPow(Rational(alpha) / x, n);
                CHECK(lhs == rhs);
            }
        }
    }
}

TEST_CASE("weilCount examples and brute-force agreement") {
    CHECK(weilCount(7, 1, 1, 3) == 7);
    CHECK(weilBrute(5, 2, 2, 1) == 4);
    CHECK(weilCount(5, 2, 2, 1) == 4);
    CHECK(weilBrute(7, 2, 3, 1) == 11);
    CHECK(weilCount(7, 2, 3, 1) == 11);
    for (uint64_t p : {5ull, 7ull, 11ull, 13ull})
        for (uint64_t k = 1; k <= 4; ++k)
            for (uint64_t l = 1; l <= 4; ++l)
                for (uint64_t a = 0; a < p; ++a)
                    CHECK(weilCount(p, k, l, a) == weilBrute(p, k, l, a));
    CHECK_THROWS_AS(weilCount(9, 2, 2, 1), input_error);  // not prime
}

TEST_CASE("buildASet: the 221 instance, single primes, degenerate k = l") {
    auto r = buildASet(221, 2, 4);
    CHECK(r.set.size() == 36);
    CHECK(r.lowerBound > 14.0);
    CHECK(r.lowerBound < 14.2);
    CHECK(r.lowerBoundHolds);
    CHECK_FALSE(r.strictHypotheses);  // 13, 17 <= (12*2*4)^2

    // single prime: threshold becomes count >= 1
    auto r13 = buildASet(13, 2, 4);
    CHECK(r13.set.elements() == std::vector<uint64_t>{4, 10, 12});

    // k = l: every k-th power is an l-th power at every coordinate
    CHECK(buildASet(221, 2, 2).set.size() == 0);
    CHECK(buildASet(13, 4, 4).set.size() == 0);

    CHECK_THROWS_AS(buildASet(12, 2, 4), input_error);  // not squarefree
    CHECK_THROWS_AS(buildASet(15, 2, 4), input_error);  // 4 does not divide 3-1
}

TEST_CASE("buildASet matches the independent enumeration oracle and the CRT count") {
    std::mt19937_64 rng(13);
    std::vector<uint64_t> primesMod4;  // p = 1 mod 4 keeps l = 4 admissible
    for (uint64_t p = 5; p < 300; p += 4)
        if (isPrime(p)) primesMod4.push_back(p);
    for (int i = 0; i < 20; ++i) {
        uint64_t n = 1;
        std::set<size_t> used;
        int parts = 1 + (int)(rng() % 2);
        while ((int)used.size() < parts) used.insert(rng() % primesMod4.size());
        for (size_t idx : used) {
            if (n * primesMod4[idx] > 10000) break;
            n *= primesMod4[idx];
        }
        if (n == 1) n = primesMod4[rng() % primesMod4.size()];
        uint64_t k = (rng() % 2) ? 2 : 4;
        uint64_t l = 4;
        auto fast = buildASet(n, k, l);
        auto oracle = aSetBrute(n, k, l);
        CHECK(fast.set.size() == oracle.size());
        for (uint64_t a : oracle) CHECK(fast.set.contains(a));
        CHECK(aSetSizeByCrt(n, k, l) == oracle.size());
    }
}

TEST_CASE("buildASet is contained in the unit power residues") {
    for (auto [n, k, l] : {std::tuple<uint64_t, uint64_t, uint64_t>{221, 2, 4},
                           {65, 2, 4},
                           {13, 2, 4}}) {
        auto a = buildASet(n, k, l);
        auto powers = powerResidues(n, k, true);
        a.set.forEach([&](uint64_t v) { CHECK(powers.contains(v)); });
    }
}

TEST_CASE("maxPowerPreimageOverShifts: trivial sets, brute force, budget") {
    ResidueSet empty(97);
    auto r0 = maxPowerPreimageOverShifts(97, 4, empty);
    CHECK(r0.maxCount == 0);
    CHECK(r0.argmaxShift == 0);

    ResidueSet full(10);
    for (uint64_t i = 0; i < 10; ++i) full.insert(i);
    auto r1 = maxPowerPreimageOverShifts(10, 3, full);
    CHECK(r1.maxCount == 10);
    CHECK(r1.argmaxShift == 0);

    auto a221 = buildASet(221, 2, 4);
    auto fast = maxPowerPreimageOverShifts(221, 4, a221.set);
    uint64_t brute = 0;
    for (uint64_t i = 0; i < 221; ++i) {
        uint64_t count = 0;
        for (uint64_t x = 0; x < 221; ++x)
            if (a221.set.contains((powMod(x, 4, 221) + 221 - i) % 221)) ++count;
        brute = std::max(brute, count);
    }
    CHECK(fast.maxCount == brute);
    CHECK(fast.exact);
    // empirical report against the (2/3)^(ln omega) bound at this desk-scale n
    CHECK((double)fast.maxCount < 221.0 * std::pow(2.0 / 3.0, std::log(2.0)));

    CHECK_THROWS_AS(maxPowerPreimageOverShifts(221, 4, a221.set, /*workBudget=*/10), budget_error);
    auto sampled = maxPowerPreimageOverShifts(221, 4, a221.set, 10, /*sampleShifts=*/8);
    CHECK_FALSE(sampled.exact);
    CHECK(sampled.maxCount <= brute);
}

TEST_CASE("ntlemParams frozen examples") {
    auto p23 = ntlemParams(2, 3);
    CHECK(p23.q == 2);
    CHECK(p23.kPrime == 2);
    CHECK(p23.lPrime == 1);
    CHECK(p23.gcdModulus == 6);
    CHECK(p23.gcdTarget == 2);

    auto p93 = ntlemParams(9, 3);
    CHECK(p93.q == 3);
    CHECK(p93.kPrime == 9);
    CHECK(p93.lPrime == 3);
    CHECK(p93.gcdModulus == 54);
    CHECK(p93.gcdTarget == 18);

    auto p46 = ntlemParams(4, 6);
    CHECK(p46.q == 2);
    CHECK(p46.kPrime == 4);
    CHECK(p46.lPrime == 2);
    CHECK(p46.gcdModulus == 24);
    CHECK(p46.gcdTarget == 4);

    CHECK_THROWS_AS(ntlemParams(2, 4), input_error);  // k | l
    CHECK_THROWS_AS(ntlemParams(3, 3), input_error);
}

TEST_CASE("ntlemParams primes realize gcd(p-1,k) = k' and gcd(p-1,l) = l'") {
    for (uint64_t k = 2; k <= 12; ++k) {
        for (uint64_t l = 1; l <= 12; ++l) {
            if (l % k == 0) continue;
            auto params = ntlemParams(k, l);
            CHECK(params.kPrime > params.lPrime);
            CHECK(k % params.kPrime == 0);
            CHECK(l % params.lPrime == 0);
            auto primes = findPrimes(params, 5, 2);
            for (uint64_t p : primes) {
                CHECK(std::gcd(p - 1, k) == params.kPrime);
                CHECK(std::gcd(p - 1, l) == params.lPrime);
            }
        }
    }
}

TEST_CASE("findPrimes: gcd progression, predicates, counts, budget") {
    // oracle for the (k,l) = (2,3) condition gcd(p-1, 6) = 2: 3, 5, 11
    auto seq = findPrimes(ntlemParams(2, 3), 3, 2);
    CHECK(seq == std::vector<uint64_t>{3, 5, 11});

    auto l4 = findPrimes([](uint64_t p) { return (p - 1) % 4 == 0; }, 2, 2);
    CHECK(l4 == std::vector<uint64_t>{5, 13});

    CHECK(findPrimes(ntlemParams(2, 3), 0, 2).empty());
    CHECK_THROWS_AS(findPrimes([](uint64_t) { return false; }, 1, 2, 10'000), budget_error);
}

TEST_CASE("mulMod/powMod/isPrime basics") {
    CHECK(mulMod(UINT64_MAX - 1, UINT64_MAX - 2, UINT64_MAX) == 2);
    CHECK(powMod(2, 64, 1'000'000'007) == 582344008);
    CHECK(isPrime(2));
    CHECK(isPrime(1'000'000'007ull));
    CHECK_FALSE(isPrime(1));
    CHECK_FALSE(isPrime((1ull << 61) - 2));
    CHECK(isPrime((1ull << 61) - 1));
}

TEST_CASE("polynomial parsing: grammar, errors, canonical round trip") {
    CHECK(IntPolynomial::parse("m^2") == IntPolynomial({0, 0, 1}));
    CHECK(IntPolynomial::parse("3*m^3 - m + 7") == IntPolynomial({7, -1, 0, 3}));
    CHECK(IntPolynomial::parse("x^2 + x") == IntPolynomial({0, 1, 1}));
    CHECK(IntPolynomial::parse(" - m + 2 ") == IntPolynomial({2, -1}));
    CHECK(IntPolynomial::parse("5") == IntPolynomial({5}));
    CHECK(IntPolynomial::parse("m + m") == IntPolynomial({0, 2}));

    CHECK_THROWS_AS(IntPolynomial::parse("m^(2)"), input_error);
    CHECK_THROWS_AS(IntPolynomial::parse("1.5*m"), input_error);
    CHECK_THROWS_AS(IntPolynomial::parse("3m"), input_error);   // grammar requires '*'
    CHECK_THROWS_AS(IntPolynomial::parse(""), input_error);
    CHECK_THROWS_AS(IntPolynomial::parse("m^"), input_error);
    CHECK_THROWS_AS(IntPolynomial::parse("2 +"), input_error);
    CHECK_THROWS_AS(IntPolynomial::parse("y^2"), input_error);  // only m or x

    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int64_t> coeffs(1 + rng() % 6);
        for (auto& v : coeffs) v = (int64_t)(rng() % 41) - 20;
        IntPolynomial P(std::move(coeffs));
        CHECK(IntPolynomial::parse(P.toString()) == P);
    }
    CHECK(IntPolynomial().toString() == "0");
    CHECK(IntPolynomial::parse("0") == IntPolynomial());
}

TEST_CASE("polynomial evaluation overflow detection and mod arithmetic") {
    IntPolynomial big({0, 0, 0, 0, 0, 0, 1});  // m^6
    CHECK_THROWS_AS(big.evalChecked(1'000'000'000), verdict_error);
    CHECK(big.evalMod(1'000'000'000, 97) == powMod(1'000'000'000 % 97, 6, 97));
    // negative coefficients reduce correctly
    IntPolynomial neg({-1, -2});
    CHECK(neg.evalMod(3, 7) == ((-1 - 2 * 3) % 7 + 7) % 7);
    CHECK(neg.evalMod(3, 1) == 0);
}

TEST_CASE("unit power residues: squarefree product formula and a p^3 lift") {
    // |R~^k_n| = phi(n)/k^omega(n) when n is squarefree and k | p-1 throughout
    for (auto [n, k] : {std::pair<uint64_t, uint64_t>{221, 4}, {221, 2}, {65, 4}, {1105, 4}}) {
        auto f = factorize(n);
        uint64_t expect = f.phi();
        for (int i = 0; i < f.omega(); ++i) expect /= k;
        CHECK(powerResidues(n, k, true).size() == expect);
    }
    // lift criterion reaches past p^2: 2x+1 stays a bijection mod 5^3
    CHECK(liftCriterion(IntPolynomial({1, 2}), 5));
    CHECK(isPermutationMod(IntPolynomial({1, 2}), 125));
    CHECK_FALSE(isPermutationMod(IntPolynomial::monomial(3), 8));  // fails the lift at 2
}

TEST_CASE("evalClamped saturation semantics") {
    __int128 limit = (__int128)1 << 100;
    CHECK(IntPolynomial::monomial(6).evalClamped(1 << 30, limit) == limit + 1);
    CHECK(IntPolynomial::monomial(6, -1).evalClamped(1 << 30, limit) == -limit - 1);
    // exact right at the 2^62 internal floor
    CHECK(IntPolynomial::monomial(2).evalClamped(1ll << 31, limit) == (__int128)1 << 62);
    // saturation from enormous arguments keeps the sign
    CHECK(IntPolynomial::monomial(2).evalClamped((1ll << 62) - 1, limit) == limit + 1);
    IntPolynomial osc({-306, 0, 100});
    CHECK(osc.evalClamped(3, limit) == 594);
    CHECK(osc.evalClamped(-3, limit) == 594);
    CHECK(osc.evalClamped(1, limit) == -206);
}
