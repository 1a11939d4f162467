#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "toeplitz/constructions.hpp"
#include "toeplitz/errors.hpp"
#include "toeplitz/orbitstats.hpp"
#include "toeplitz/tpv.hpp"

using namespace toeplitz;

namespace {

ConstructionConfig relaxedA(int64_t k, int64_t l, std::vector<uint64_t> primes) {
    ConstructionConfig cfg;
    cfg.kind = ConstructionKind::A;
    cfg.k = k;
    cfg.l = l;
    cfg.levels = primes.size();
    for (uint64_t p : primes) cfg.levelPrimes.push_back({p});
    return cfg;
}

ConstructionConfig relaxedB(int64_t k, int64_t l, std::vector<std::vector<uint64_t>> batches) {
    ConstructionConfig cfg;
    cfg.kind = ConstructionKind::B;
    cfg.k = k;
    cfg.l = l;
    cfg.levels = batches.size();
    cfg.levelPrimes = std::move(batches);
    return cfg;
}

}  // namespace

TEST_CASE("birkhoffAverage frozen examples") {
    CylinderFunction G = CylinderFunction::signFunction();

    auto p01 = ViablePair::fromStrings({"01"});
    auto v = birkhoffAverage(p01, IntPolynomial::monomial(2), 0, 4, G);
    CHECK(v.point());
    CHECK(v.low == Rational(0));  // positions 0,1,4,9 carry 0,1,0,1

    auto constant = ViablePair::fromStrings({"0"});
    for (const auto& P : {IntPolynomial::monomial(1), IntPolynomial::monomial(3),
                          IntPolynomial({7, 0, 5})}) {
        auto c = birkhoffAverage(constant, P, 0, 17, G);
        CHECK(c.point());
        CHECK(c.low == Rational(1));
    }

    auto holey = ViablePair::fromStrings({"?", "0?"});
    auto h = birkhoffAverage(holey, IntPolynomial::monomial(1), 0, 2, G);
    CHECK(h.resolved == 1);
    CHECK(h.unresolved == 1);
    CHECK(h.low == Rational(0));
    CHECK(h.high == Rational(1));
}

TEST_CASE("birkhoffAverage is deterministic across thread counts") {
    auto p01 = ViablePair::fromStrings({"01"});
    CylinderFunction G = CylinderFunction::signFunction();
    AverageOptions four;
    four.threads = 4;
    for (uint64_t N : {100'000ull, 100'001ull}) {
        auto a = birkhoffAverage(p01, IntPolynomial::monomial(2), 3, N, G);
        auto b = birkhoffAverage(p01, IntPolynomial::monomial(2), 3, N, G, four);
        CHECK(a.low == b.low);
        CHECK(a.high == b.high);
        CHECK(a.resolved == b.resolved);
    }
}

TEST_CASE("birkhoffAverage shift periodicity") {
    auto a = buildConstructionA(relaxedA(2, 3, {11})).pair;
    CylinderFunction G = CylinderFunction::signFunction();
    IntPolynomial P = IntPolynomial::monomial(3);
    for (int64_t r : {-7, 0, 4}) {
        auto v1 = birkhoffAverage(a, P, r, 50, G);
        auto v2 = birkhoffAverage(a, P, r + 11, 50, G);
        CHECK(v1.low == v2.low);
        CHECK(v1.high == v2.high);
    }
}

TEST_CASE("checkpointReport: golden A instance, constant pair, iwanik scale") {
    auto a = buildConstructionA(relaxedA(2, 3, {11})).pair;
    auto report = checkpointReport(a);
    REQUIRE(report.entries.size() == 1);
    CHECK(report.entries[0].scale == 3);
    CHECK(report.entries[0].average.point());
    CHECK(report.entries[0].average.low == Rational(1));
    CHECK(report.entries[0].signCertified);
    CHECK(report.entries[0].gap == Rational(1));
    CHECK(report.alternating);
    CHECK(report.polynomial == "m^2");

    // constant word with artificial checkpoints: all averages 1, no alternation
    ConstructionMeta meta;
    meta.kind = "manual";
    ViablePair constant({{1, PartialWord("0")}, {2, PartialWord("00")}, {4, PartialWord("0000")}},
                        {2, 3}, meta);
    auto flat = checkpointReport(constant, IntPolynomial::monomial(2));
    REQUIRE(flat.entries.size() == 2);
    CHECK(flat.entries[0].average.low == Rational(1));
    CHECK(flat.entries[1].average.low == Rational(1));
    CHECK_FALSE(flat.alternating);  // odd checkpoint has the wrong sign

    // iwanik checkpoint scale equals the brute-force threshold scan
    ConstructionConfig iw;
    iw.kind = ConstructionKind::Iwanik;
    iw.poly = IntPolynomial::monomial(3);
    iw.levels = 2;
    iw.branching = {5, 47};
    auto iwRes = buildIwanik(iw);
    for (size_t t = 0; t < 2; ++t) {
        uint64_t bound = iwRes.pair.modulus(t + 1) - iwRes.pair.modulus(t);
        uint64_t brute = 0;
        for (uint64_t i = 1; i * i * i < bound; ++i) brute = i;
        CHECK(iwRes.pair.checkpoints()[t] == brute);
    }
    CHECK_THROWS_AS(checkpointReport(ViablePair::fromStrings({"01"})), input_error);
}

TEST_CASE("shiftQuestionDensity: resolved words, the two-hole example, B bound") {
    auto resolved = ViablePair::fromStrings({"0110"});
    for (const auto& P : {IntPolynomial::monomial(1), IntPolynomial::monomial(2)})
        CHECK(shiftQuestionDensity(resolved, 0, P).maxCount == 0);

    auto holey = ViablePair::fromStrings({"?", "0?"});
    auto d = shiftQuestionDensity(holey, 1, IntPolynomial::monomial(2));
    CHECK(d.maxCount == 1);
    CHECK(d.exact);

    auto b = buildConstructionB(relaxedB(2, 4, {{13, 17}})).pair;
    auto db = shiftQuestionDensity(b, 1, IntPolynomial::monomial(4));
    REQUIRE(db.excludedSetBound.has_value());
    CHECK(*db.excludedSetBound == doctest::Approx(221.0 * std::pow(2.0 / 3.0, std::log(2.0))));
    CHECK(db.maxCount > 0);

    // budget handling
    CHECK_THROWS_AS(shiftQuestionDensity(b, 1, IntPolynomial::monomial(4), 3), budget_error);
    auto sampled = shiftQuestionDensity(b, 1, IntPolynomial::monomial(4), 3, 5);
    CHECK_FALSE(sampled.exact);
    CHECK(sampled.maxCount <= db.maxCount);
}

TEST_CASE("convergenceProbe: alternating word, resolved stabilization, A bound") {
    CylinderFunction G = CylinderFunction::signFunction();
    auto p01 = ViablePair::fromStrings({"01"});
    // m^3 has the parity of m: averages vanish at even N
    auto r1 = convergenceProbe(p01, IntPolynomial::monomial(3), G, {0}, {2, 4, 8, 16});
    CHECK(r1.allWithinBound);
    for (const auto& avg : r1.averages) CHECK(avg.value.low == Rational(0));
    for (const auto& cell : r1.cells) CHECK(cell.oscillation == Rational(0));

    // fully resolved pair stabilizes exactly at multiples of n_T
    auto resolved = resolveHoles(buildConstructionA(relaxedA(2, 3, {11})).pair, Symbol::Zero);
    auto r2 = convergenceProbe(resolved, IntPolynomial::monomial(3), G, {0, 5}, {11, 22, 44});
    for (const auto& cell : r2.cells) CHECK(cell.oscillation == Rational(0));
    CHECK(r2.allWithinBound);

    // relaxed construction A along m^3 at N in {n_1, 2n_1, 4n_1}
    auto a = buildConstructionA(relaxedA(2, 3, {11, 23})).pair;
    auto r3 = convergenceProbe(a, IntPolynomial::monomial(3), G, {0, 1}, {253, 506, 1012});
    CHECK(r3.allWithinBound);

    CHECK_THROWS_AS(convergenceProbe(p01, IntPolynomial::monomial(3), G, {0}, {4, 4}),
                    input_error);
}

TEST_CASE("equidistributionCheck: exact halves, constants, hypothesis error") {
    auto p01 = ViablePair::fromStrings({"01"});
    CylinderFunction ones = CylinderFunction::indicator("1");
    auto r = equidistributionCheck(p01, IntPolynomial::monomial(3), ones, Rational(0));
    CHECK(r.orbitAverage.low == Rational(1, 2));
    CHECK(r.orbitAverage.point());
    CHECK(r.muEstimate.low == Rational(1, 2));
    CHECK(r.distance == Rational(0));
    CHECK(r.pass);
    CHECK(r.identityGap == Rational(0));
    CHECK(r.identityHolds);

    auto constant = ViablePair::fromStrings({"0"});
    auto rc = equidistributionCheck(constant, IntPolynomial::monomial(3),
                                    CylinderFunction::signFunction(), Rational(0));
    CHECK(rc.orbitAverage.low == Rational(1));
    CHECK(rc.muEstimate.low == Rational(1));
    CHECK(rc.pass);

    auto p0011 = ViablePair::fromStrings({"0011"});
    CHECK_THROWS_AS(equidistributionCheck(p0011, IntPolynomial::monomial(2),
                                          CylinderFunction::signFunction(), Rational(0)),
                    input_error);
}

TEST_CASE("equidistribution identity bound on a construction pair with holes") {
    // l = 3 odd with gcd(3, 10) = 1: m^3 is a permutation mod 11
    auto a = buildConstructionA(relaxedA(2, 3, {11})).pair;
    CylinderFunction G = CylinderFunction::signFunction();
    auto r = equidistributionCheck(a, IntPolynomial::monomial(3), G, Rational(1, 10));
    CHECK(r.identityBound == Rational(4));  // 2 * (2*0+1) * ?_1 with ?_1 = 2
    CHECK(r.identityHolds);
}

TEST_CASE("permutation identity: exact sum equality on hole-free words") {
    auto resolved = resolveHoles(buildConstructionA(relaxedA(2, 3, {11, 23})).pair, Symbol::Zero);
    uint64_t n = resolved.topModulus();
    CHECK(n == 253);
    REQUIRE(isPermutationMod(IntPolynomial::monomial(3), n));
    CylinderFunction G = CylinderFunction::signFunction();
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        int64_t r = (int64_t)(rng() % 1000) - 500;
        auto sumP = birkhoffAverage(resolved, IntPolynomial::monomial(3), r, n, G);
        auto sumId = birkhoffAverage(resolved, IntPolynomial::monomial(1), r, n, G);
        CHECK(sumP.point());
        CHECK(sumP.low == sumId.low);
    }
}

TEST_CASE("residuesCovered examples") {
    auto r1 = residuesCovered(IntPolynomial::monomial(2), 4);
    CHECK_FALSE(r1.full);
    CHECK(r1.missing == std::vector<uint64_t>{2, 3});
    for (uint64_t s : {1ull, 2ull, 7ull, 12ull})
        CHECK(residuesCovered(IntPolynomial::monomial(1), s).full);
    CHECK(residuesCovered(IntPolynomial::monomial(2), 2).full);

    CHECK(residuesCovered(std::vector<int64_t>{-1, 0, 1}, 3).full);
    CHECK_FALSE(residuesCovered(std::vector<int64_t>{0, 2, 4}, 4).full);
}

TEST_CASE("densityVerdict: dense, not dense, undecided") {
    auto p01 = ViablePair::fromStrings({"01"});
    auto d1 = densityVerdict(p01, IntPolynomial::monomial(3), 0);
    CHECK(d1.verdict == DensityVerdict::DenseCertified);
    CHECK(d1.essentialPeriods == std::vector<uint64_t>{2});
    CHECK(d1.permutationModTop);

    auto p0011 = ViablePair::fromStrings({"0011"});
    auto d2 = densityVerdict(p0011, IntPolynomial::monomial(2), 0);
    CHECK(d2.verdict == DensityVerdict::NotDense);
    CHECK(d2.witnessPeriod == 4);
    CHECK(d2.missingResidues == std::vector<uint64_t>{2, 3});

    auto holey = ViablePair::fromStrings({"?", "0?"});
    auto d3 = densityVerdict(holey, IntPolynomial::monomial(1), 1);
    CHECK(d3.verdict == DensityVerdict::Undecided);
    CHECK(d3.unknownCertificates);
}

TEST_CASE("densityVerdict dense witness search: every resolved cylinder is entered") {
    auto p01 = ViablePair::fromStrings({"01"});
    IntPolynomial P = IntPolynomial::monomial(3);
    REQUIRE(densityVerdict(p01, P, 0).verdict == DensityVerdict::DenseCertified);
    uint64_t n = p01.topModulus();
    for (int radius = 0; radius <= 3; ++radius) {
        for (uint64_t center = 0; center < n; ++center) {
            // the resolved cylinder around `center`
            std::vector<Symbol> window;
            for (int j = -radius; j <= radius; ++j)
                window.push_back(symbolAt(p01, (int64_t)center + j).symbol);
            bool found = false;
            for (uint64_t m = 0; m < n && !found; ++m) {
                bool match = true;
                int64_t base = (int64_t)P.evalMod(m, n);
                for (int j = -radius; j <= radius && match; ++j)
                    if (symbolAt(p01, base + j).symbol != window[(size_t)(j + radius)])
                        match = false;
                found = match;
            }
            CHECK(found);
        }
    }
}

TEST_CASE("almostPrimeObstruction: witness selection and errors") {
    std::vector<uint64_t> pow2{2, 4, 8, 16, 32, 64};
    auto r2 = almostPrimeObstruction(2, pow2);
    CHECK(r2.witnessModulus == 16);  // the proof's n_{l+2}
    CHECK(r2.uncoveredResidue == 0);
    CHECK(r2.bigOmega == 4);

    auto r1 = almostPrimeObstruction(1, {2, 4});
    CHECK(r1.witnessModulus == 4);  // short tower falls back to the first Omega(n) > l

    CHECK_THROWS_AS(almostPrimeObstruction(0, pow2), input_error);
    CHECK_THROWS_AS(almostPrimeObstruction(3, std::vector<uint64_t>{2, 4}), budget_error);
    CHECK_THROWS_AS(almostPrimeObstruction(2, std::vector<uint64_t>{2, 3}), input_error);
}

TEST_CASE("apFrequency examples") {
    CHECK(apFrequency("0", "00011") == Rational(3, 5));
    CHECK(apFrequency("01", "0101") == Rational(1));
    for (const std::string& b : {"0", "01", "0110"}) CHECK(apFrequency(b, b) == Rational(1));
    CHECK_THROWS_AS(apFrequency("01", "011"), input_error);
}

TEST_CASE("iwanikApCheck: odd and even closed forms") {
    ConstructionConfig odd;
    odd.kind = ConstructionKind::Iwanik;
    odd.poly = IntPolynomial::monomial(3);
    odd.levels = 2;
    odd.branching = {5, 47};
    auto iw = buildIwanik(odd);
    auto r01 = iwanikApCheck(*iw.blocks, 0, 1);
    CHECK(r01.allMatch);
    for (const auto& row : r01.rows) {
        Rational expect = row.epsT == row.epsS ? Rational(3, 5) : Rational(2, 5);
        CHECK(row.measured == expect);
    }
    auto r12 = iwanikApCheck(*iw.blocks, 1, 2);
    CHECK(r12.allMatch);
    CHECK(r12.supDeviationFromHalf == Rational(1, 2) * Rational(1, 47));
    auto r02 = iwanikApCheck(*iw.blocks, 0, 2);
    CHECK(r02.allMatch);
    CHECK(r02.supDeviationFromHalf == Rational(1, 2) * Rational(1, 235));

    ConstructionConfig even;
    even.kind = ConstructionKind::Iwanik;
    even.poly = IntPolynomial({0, 1, 0, 6});  // 6m^3 + m is a permutation mod 4^t
    even.levels = 2;
    even.branching = {4, 4};
    auto iwEven = buildIwanik(even);
    for (auto [t, s] : {std::pair<size_t, size_t>{0, 1}, {0, 2}, {1, 2}}) {
        auto re = iwanikApCheck(*iwEven.blocks, t, s);
        CHECK(re.allMatch);
        CHECK(re.supDeviationFromHalf == Rational(0));
        for (const auto& row : re.rows) CHECK(row.measured == Rational(1, 2));
    }

    CHECK_THROWS_AS(iwanikApCheck(*iw.blocks, 1, 1), input_error);
}

TEST_CASE("interval distances and CSV emission") {
    IntervalValue a{Rational(0), Rational(1, 2), 3, 1};
    IntervalValue b{Rational(3, 4), Rational(1), 4, 0};
    CHECK(intervalInfDistance(a, b) == Rational(1, 4));
    CHECK(intervalSupDistance(a, b) == Rational(1));
    CHECK(intervalInfDistance(a, a) == Rational(0));

    std::string csv = seriesCsv({{10, a}});
    CHECK(csv.find("N,low,high,resolved,unresolved,low_dec,high_dec\r\n") == 0);
    CHECK(csv.find("10,0/1,1/2,3,1,") != std::string::npos);

    auto aPair = buildConstructionA(relaxedA(2, 3, {11})).pair;
    std::string json = checkpointReportJson(checkpointReport(aPair));
    CHECK(json.find("\"report_version\": 1") != std::string::npos);
    CHECK(json.find("\"alternating\": true") != std::string::npos);
}

TEST_CASE("cylinder function validation") {
    CHECK_THROWS_AS(CylinderFunction::indicator("01"), input_error);   // even length
    CHECK_THROWS_AS(CylinderFunction::indicator("0?1"), input_error);  // hole
    CHECK_THROWS_AS(CylinderFunction::fromTable(1, {Rational(0)}, "bad"), input_error);
    auto G = CylinderFunction::signFunction();
    CHECK(G.radius() == 0);
    CHECK(G.value(0) == Rational(1));
    CHECK(G.value(1) == Rational(-1));
    CHECK(G.minValue() == Rational(-1));
    CHECK(G.maxValue() == Rational(1));
}

TEST_CASE("mu estimate equals the block-frequency sum on hole-free pairs") {
    auto resolved = resolveHoles(buildConstructionA(relaxedA(2, 3, {11})).pair, Symbol::Zero);
    for (int radius : {0, 1}) {
        // build a nontrivial cylinder table: F(window) = popcount(window)/(2C+1)
        size_t bits = 2 * (size_t)radius + 1;
        std::vector<Rational> table;
        for (uint32_t w = 0; w < (1u << bits); ++w)
            table.push_back(Rational(__builtin_popcount(w), (int64_t)bits));
        auto F = CylinderFunction::fromTable(radius, table, "density");
        auto r = equidistributionCheck(resolved, IntPolynomial::monomial(3), F, Rational(0));
        REQUIRE(r.muEstimate.point());
        Rational sum(0);
        for (uint32_t w = 0; w < (1u << bits); ++w) {
            if (table[w] == Rational(0)) continue;
            std::string block;
            for (size_t j = 0; j < bits; ++j) block += ((w >> j) & 1) ? '1' : '0';
            auto freq = blockFrequency(resolved, resolved.topLevel(), block);
            REQUIRE(freq.low == freq.high);
            sum += table[w] * freq.low;
        }
        CHECK(sum == r.muEstimate.low);
        CHECK(r.pass);  // permutation sums agree exactly on resolved words
    }
}
