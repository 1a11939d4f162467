#include "toeplitz/orbitstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "toeplitz/errors.hpp"

namespace toeplitz {

Rational intervalInfDistance(const IntervalValue& a, const IntervalValue& b) {
    Rational d1 = a.low - b.high;
    Rational d2 = b.low - a.high;
    Rational m = d1 > d2 ? d1 : d2;
    return m > Rational(0) ? m : Rational(0);
}

Rational intervalSupDistance(const IntervalValue& a, const IntervalValue& b) {
    Rational d1 = (a.high - b.low).abs();
    Rational d2 = (b.high - a.low).abs();
    return d1 > d2 ? d1 : d2;
}

CylinderFunction::CylinderFunction(int radius, std::vector<Rational> table, std::string name)
    : radius_(radius), table_(std::move(table)), name_(std::move(name)) {
    if (radius < 0 || radius > 12) throw input_error("cylinder radius out of range [0, 12]");
    size_t want = 1ull << (2 * radius + 1);
    if (table_.size() != want)
        throw input_error("cylinder table must cover all " + std::to_string(want) + " windows");
    min_ = max_ = table_[0];
    for (const Rational& v : table_) {
        if (v < min_) min_ = v;
        if (max_ < v) max_ = v;
    }
}

CylinderFunction CylinderFunction::signFunction() {
    return CylinderFunction(0, {Rational(1), Rational(-1)}, "G");
}

CylinderFunction CylinderFunction::indicator(const std::string& window) {
    if (window.empty() || window.size() % 2 == 0)
        throw input_error("indicator window must have odd length");
    int radius = (int)(window.size() / 2);
    uint32_t idx = 0;
    for (size_t j = 0; j < window.size(); ++j) {
        Symbol s = symbolFromChar(window[j]);
        if (s == Symbol::Hole) throw input_error("indicator window must be over {0,1}");
        idx |= (uint32_t)s << j;
    }
    std::vector<Rational> table(1ull << window.size(), Rational(0));
    table[idx] = Rational(1);
    return CylinderFunction(radius, std::move(table), "block:" + window);
}

CylinderFunction CylinderFunction::fromTable(int radius, std::vector<Rational> table,
                                             std::string name) {
    return CylinderFunction(radius, std::move(table), std::move(name));
}

// ---------------------------------------------------------------------------
// averages

namespace {

struct ScaledTable {
    int64_t den = 1;  // common denominator
    std::vector<int64_t> values;
    int64_t minV = 0, maxV = 0;
};

ScaledTable scaleTable(const CylinderFunction& F) {
    ScaledTable out;
    for (const Rational& v : F.table()) out.den = std::lcm(out.den, v.den());
    out.values.reserve(F.table().size());
    for (const Rational& v : F.table()) {
        __int128 s = (__int128)v.num() * (out.den / v.den());
        if (s > INT64_MAX || s < INT64_MIN) throw input_error("cylinder values overflow when scaled");
        out.values.push_back((int64_t)s);
    }
    out.minV = *std::min_element(out.values.begin(), out.values.end());
    out.maxV = *std::max_element(out.values.begin(), out.values.end());
    return out;
}

struct SumChunk {
    __int128 resolvedSum = 0;
    uint64_t resolved = 0, unresolved = 0;
};

// sum of scaled F over m in [from, to)
SumChunk sumRange(const ViablePair& pair, const IntPolynomial& P, int64_t shift,
                  uint64_t from, uint64_t to, const CylinderFunction& F, const ScaledTable& table) {
    SumChunk out;
    uint64_t n = pair.topModulus();
    int C = F.radius();
    int64_t shiftMod = shift % (int64_t)n;
    if (shiftMod < 0) shiftMod += (int64_t)n;
    for (uint64_t m = from; m < to; ++m) {
        uint64_t base = P.evalMod(m % n, n) + (uint64_t)shiftMod;
        if (base >= n) base -= n;
        uint32_t idx = 0;
        bool ok = true;
        for (int j = -C; j <= C; ++j) {
            int64_t p = (int64_t)base + j;
            if (p < 0) p += (int64_t)n;
            else if (p >= (int64_t)n) p -= (int64_t)n;
            Symbol s = symbolAt(pair, p).symbol;
            if (s == Symbol::Hole) { ok = false; break; }
            idx |= (uint32_t)s << (j + C);
        }
        if (ok) {
            out.resolvedSum += table.values[idx];
            ++out.resolved;
        } else {
            ++out.unresolved;
        }
    }
    return out;
}

IntervalValue intervalFromSums(const SumChunk& total, uint64_t N, const ScaledTable& table) {
    IntervalValue out;
    out.resolved = total.resolved;
    out.unresolved = total.unresolved;
    __int128 den = (__int128)table.den * N;
    out.low = Rational::fromWide(total.resolvedSum + (__int128)total.unresolved * table.minV, den);
    out.high = Rational::fromWide(total.resolvedSum + (__int128)total.unresolved * table.maxV, den);
    return out;
}

}  // namespace

IntervalValue birkhoffAverage(const ViablePair& pair, const IntPolynomial& P, int64_t shift,
                              uint64_t N, const CylinderFunction& F, const AverageOptions& options) {
    if (N == 0) throw input_error("birkhoffAverage requires N >= 1");
    if ((uint64_t)F.radius() >= pair.topModulus())
        throw input_error("cylinder radius exceeds the materialized period");
    ScaledTable table = scaleTable(F);
    SumChunk total;
    int threads = std::max(1, options.threads);
    if (threads == 1 || N < 1u << 16) {
        total = sumRange(pair, P, shift, 0, N, F, table);
    } else {
        std::vector<SumChunk> parts(threads);
        std::vector<std::thread> pool;
        uint64_t per = (N + threads - 1) / threads;
        for (int i = 0; i < threads; ++i) {
            uint64_t from = per * i, to = std::min(N, per * (i + 1));
            if (from >= to) break;
            pool.emplace_back([&, i, from, to]() {
                parts[i] = sumRange(pair, P, shift, from, to, F, table);
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& part : parts) {
            total.resolvedSum += part.resolvedSum;
            total.resolved += part.resolved;
            total.unresolved += part.unresolved;
        }
    }
    return intervalFromSums(total, N, table);
}

// ---------------------------------------------------------------------------
// checkpoints

CheckpointReport checkpointReport(const ViablePair& pair, const IntPolynomial& P,
                                  const AverageOptions& options) {
    if (pair.checkpoints().empty())
        throw input_error("pair carries no checkpoints (no construction metadata)");
    CylinderFunction G = CylinderFunction::signFunction();
    CheckpointReport report;
    report.polynomial = P.toString();
    report.alternating = true;
    for (size_t t = 0; t < pair.checkpoints().size(); ++t) {
        CheckpointEntry e;
        e.t = t;
        e.scale = pair.checkpoints()[t];
        e.expectedSign = t % 2 == 0 ? 1 : -1;
        if (e.scale == 0) {
            report.alternating = false;
            report.entries.push_back(std::move(e));
            continue;
        }
        e.average = birkhoffAverage(pair, P, 0, e.scale, G, options);
        e.signCertified = e.expectedSign > 0 ? e.average.low > Rational(0)
                                             : e.average.high < Rational(0);
        e.gap = e.expectedSign > 0 ? e.average.low : -e.average.high;
        if (!e.signCertified) report.alternating = false;
        report.entries.push_back(std::move(e));
    }
    return report;
}

CheckpointReport checkpointReport(const ViablePair& pair, const AverageOptions& options) {
    const ConstructionMeta& m = pair.meta();
    if (m.kind == "a" || m.kind == "b") {
        if (m.k < 1) throw input_error("construction metadata lacks k");
        return checkpointReport(pair, IntPolynomial::monomial((int)m.k), options);
    }
    if (m.kind == "iwanik") return checkpointReport(pair, IntPolynomial::parse(m.poly), options);
    throw input_error("pair has no construction metadata; supply the polynomial explicitly");
}

std::string checkpointReportJson(const CheckpointReport& report) {
    nlohmann::ordered_json j;
    j["report_version"] = 1;
    j["kind"] = "checkpoints";
    j["polynomial"] = report.polynomial;
    j["alternating"] = report.alternating;
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : report.entries) {
        nlohmann::ordered_json je;
        je["t"] = e.t;
        je["scale"] = e.scale;
        je["low"] = e.average.low.toString();
        je["high"] = e.average.high.toString();
        je["low_dec"] = e.average.low.toDouble();
        je["high_dec"] = e.average.high.toDouble();
        je["resolved"] = e.average.resolved;
        je["unresolved"] = e.average.unresolved;
        je["expected_sign"] = e.expectedSign;
        je["sign_certified"] = e.signCertified;
        je["gap"] = e.gap.toString();
        je["gap_dec"] = e.gap.toDouble();
        entries.push_back(std::move(je));
    }
    j["entries"] = std::move(entries);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// hole density along polynomial shifts

ShiftDensityResult shiftQuestionDensity(const ViablePair& pair, size_t t, const IntPolynomial& P,
                                        uint64_t workBudget, uint64_t sampleShifts) {
    if (t >= pair.levelCount()) throw input_error("level out of range");
    uint64_t n = pair.modulus(t);
    const PartialWord& w = pair.word(t);
    std::vector<uint64_t> holes;
    holes.reserve(w.holeCount());
    w.forEachHole([&](uint64_t h) { holes.push_back(h); });

    ShiftDensityResult out;
    if (!holes.empty()) {
        std::vector<uint32_t> hist(n, 0);
        for (uint64_t i = 0; i < n; ++i) ++hist[P.evalMod(i, n)];
        std::vector<uint64_t> shifts;
        if ((unsigned __int128)n * holes.size() > workBudget) {
            if (sampleShifts == 0)
                throw budget_error("shiftQuestionDensity: n * holes = " + std::to_string(n) + " * " +
                                   std::to_string(holes.size()) + " exceeds the work budget");
            out.exact = false;
            for (uint64_t j = 0; j < sampleShifts; ++j) shifts.push_back(j * n / sampleShifts);
        } else {
            shifts.resize(n);
            for (uint64_t i = 0; i < n; ++i) shifts[i] = i;
        }
        for (uint64_t a : shifts) {
            uint64_t count = 0;
            for (uint64_t h : holes) {
                uint64_t v = h >= a ? h - a : h + n - a;
                count += hist[v];
            }
            if (count > out.maxCount) { out.maxCount = count; out.argmaxShift = a; }
        }
    }
    if (pair.meta().kind == "b" && n > 1) {
        auto fac = factorize(n);
        double bound = (double)n * std::pow(2.0 / 3.0, std::log((double)fac.omega()));
        out.excludedSetBound = bound;
        out.boundHolds = (double)out.maxCount < bound;
        // hard error only when the bound's full hypotheses are met
        uint64_t k = (uint64_t)pair.meta().k, l = (uint64_t)pair.meta().l;
        bool strict = fac.squarefree() && k > 1 && l % k == 0 && l > k;
        for (uint64_t p : fac.primes())
            if ((p - 1) % l != 0 || p <= (12 * k * l) * (12 * k * l)) strict = false;
        if (strict && out.exact && !out.boundHolds)
            throw verdict_error("excluded-set bound violated under strict hypotheses at n=" +
                                std::to_string(n));
    }
    return out;
}

// ---------------------------------------------------------------------------
// convergence probe

ProbeReport convergenceProbe(const ViablePair& pair, const IntPolynomial& P,
                             const CylinderFunction& F, const std::vector<int64_t>& shifts,
                             const std::vector<uint64_t>& grid, const AverageOptions& options) {
    if (grid.empty()) throw input_error("probe needs a nonempty N grid");
    for (size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw input_error("N grid must be strictly increasing");

    // measured hole densities per level feed the proof's bound
    int C = F.radius();
    std::vector<std::pair<uint64_t, uint64_t>> densities;  // (n_t, sqd max)
    for (size_t t = 0; t < pair.levelCount(); ++t) {
        try {
            ShiftDensityResult d = shiftQuestionDensity(pair, t, P);
            densities.push_back({pair.modulus(t), d.maxCount});
        } catch (const budget_error&) {
            // level too large for the exact density; it contributes no bound
        }
    }
    Rational range = F.maxValue() - F.minValue();
    Rational scale = range > Rational(2) ? range / Rational(2) : Rational(1);

    ProbeReport report;
    for (int64_t r : shifts) {
        std::vector<IntervalValue> avgs;
        for (uint64_t N : grid) {
            IntervalValue v = birkhoffAverage(pair, P, r, N, F, options);
            report.averages.push_back({r, N, v});
            avgs.push_back(v);
        }
        for (size_t i = 1; i < grid.size(); ++i) {
            ProbeCell cell;
            cell.shift = r;
            cell.fromN = grid[i - 1];
            cell.toN = grid[i];
            cell.oscillation = intervalSupDistance(avgs[i - 1], avgs[i]);
            Rational best = range;  // trivial bound: averages live in an interval of this width
            for (auto [nt, sqd] : densities) {
                Rational eps = Rational::fromWide((__int128)(2 * C + 1) * sqd, (__int128)nt);
                Rational b = (eps * Rational(8) + Rational::fromWide((__int128)2 * nt, cell.fromN)) *
                             scale;
                if (b < best) best = b;
            }
            cell.bound = best;
            cell.withinBound = cell.oscillation <= cell.bound;
            if (!cell.withinBound) report.allWithinBound = false;
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// equidistribution

EquiReport equidistributionCheck(const ViablePair& pair, const IntPolynomial& P,
                                 const CylinderFunction& F, const Rational& tolerance,
                                 const AverageOptions& options) {
    uint64_t n = pair.topModulus();
    if (!isPermutationMod(P, n))
        throw input_error("equidistribution hypothesis fails: P is not a permutation mod " +
                          std::to_string(n));
    EquiReport report;
    report.tolerance = tolerance;
    report.orbitAverage = birkhoffAverage(pair, P, 0, n, F, options);
    report.muEstimate = birkhoffAverage(pair, IntPolynomial::monomial(1), 0, n, F, options);
    report.distance = intervalInfDistance(report.orbitAverage, report.muEstimate);
    report.pass = report.distance <= tolerance;

    // |sum_{m<n} F(sigma^{P(m)} x) - sum_{m<n} F(sigma^m x)| <= 2 (2C+1) ?_T,
    // certified via the infimum distance of the two sum intervals
    Rational nr((int64_t)n);
    IntervalValue sumP{report.orbitAverage.low * nr, report.orbitAverage.high * nr,
                       report.orbitAverage.resolved, report.orbitAverage.unresolved};
    IntervalValue sumId{report.muEstimate.low * nr, report.muEstimate.high * nr,
                        report.muEstimate.resolved, report.muEstimate.unresolved};
    report.identityGap = intervalInfDistance(sumP, sumId);
    uint64_t holes = pair.word(pair.topLevel()).holeCount();
    report.identityBound =
        Rational::fromWide((__int128)2 * (2 * F.radius() + 1) * holes, (__int128)1);
    report.identityHolds = report.identityGap <= report.identityBound;
    return report;
}

// ---------------------------------------------------------------------------
// residue coverage, density, almost primes

ResidueCoverage residuesCovered(const IntPolynomial& P, uint64_t s) {
    if (s == 0) throw input_error("residuesCovered requires s >= 1");
    std::vector<bool> seen(s, false);
    for (uint64_t i = 0; i < s; ++i) seen[P.evalMod(i, s)] = true;
    ResidueCoverage out;
    out.full = true;
    for (uint64_t r = 0; r < s; ++r)
        if (!seen[r]) { out.full = false; out.missing.push_back(r); }
    return out;
}

ResidueCoverage residuesCovered(const std::vector<int64_t>& values, uint64_t s) {
    if (s == 0) throw input_error("residuesCovered requires s >= 1");
    std::vector<bool> seen(s, false);
    for (int64_t v : values) {
        int64_t r = v % (int64_t)s;
        if (r < 0) r += (int64_t)s;
        seen[(uint64_t)r] = true;
    }
    ResidueCoverage out;
    out.full = true;
    for (uint64_t r = 0; r < s; ++r)
        if (!seen[r]) { out.full = false; out.missing.push_back(r); }
    return out;
}

DensityReport densityVerdict(const ViablePair& pair, const IntPolynomial& P, size_t level) {
    PeriodCertificate cert = essentialPeriodCertificate(pair, level);
    DensityReport report;
    report.essentialPeriods = cert.essentialPeriods();
    report.unknownCertificates = cert.anyUnknown();
    // a certified essential period with missing residues settles the question
    // regardless of unknown certificates elsewhere
    for (uint64_t s : report.essentialPeriods) {
        ResidueCoverage cov = residuesCovered(P, s);
        if (!cov.full) {
            report.verdict = DensityVerdict::NotDense;
            report.witnessPeriod = s;
            report.missingResidues = cov.missing;
            return report;
        }
    }
    report.permutationModTop = isPermutationMod(P, pair.modulus(level));
    if (report.unknownCertificates) {
        report.verdict = DensityVerdict::Undecided;  // deeper levels may add periods
        return report;
    }
    bool everyEssential = true;
    for (uint64_t s : report.essentialPeriods)
        if (!isPermutationMod(P, s)) everyEssential = false;
    report.verdict = (report.permutationModTop || everyEssential)
                         ? DensityVerdict::DenseCertified
                         : DensityVerdict::Undecided;
    return report;
}

AlmostPrimeObstruction almostPrimeObstruction(uint64_t l, const std::vector<uint64_t>& tower) {
    if (l < 1) throw input_error("almost-prime order l must be >= 1");
    if (tower.empty()) throw input_error("empty tower");
    for (size_t i = 0; i < tower.size(); ++i) {
        if (tower[i] < 2) throw input_error("tower moduli must be >= 2");
        if (i > 0 && (tower[i] <= tower[i - 1] || tower[i] % tower[i - 1] != 0))
            throw input_error("tower must be strictly increasing with divisibility");
    }
    // the proof's witness n_{l+2} (1-indexed) when available
    if (tower.size() >= l + 2) {
        uint64_t w = tower[l + 1];
        int big = factorize(w).bigOmega();
        if (big > (int)l) return {w, 0, big};
    }
    for (uint64_t w : tower) {
        int big = factorize(w).bigOmega();
        if (big > (int)l) return {w, 0, big};
    }
    throw budget_error("tower exhausted: no modulus with Omega(n) > l");
}

// ---------------------------------------------------------------------------
// block frequencies

Rational apFrequency(const PartialWord& B, const PartialWord& C) {
    uint64_t beta = B.size(), gamma = C.size();
    if (beta == 0 || gamma == 0 || gamma % beta != 0)
        throw input_error("ap(B, C) requires |B| dividing |C|");
    uint64_t count = 0;
    for (uint64_t i = 0; i < gamma / beta; ++i) {
        bool equal = true;
        for (uint64_t j = 0; j < beta && equal; ++j)
            if (C.at(i * beta + j) != B.at(j)) equal = false;
        if (equal) ++count;
    }
    return Rational::fromWide((__int128)count * beta, (__int128)gamma);
}

Rational apFrequency(const std::string& B, const std::string& C) {
    return apFrequency(PartialWord(B), PartialWord(C));
}

ApCheckReport iwanikApCheck(const IwanikBlocks& blocks, size_t t, size_t s) {
    if (!(t < s) || s >= blocks.moduli.size())
        throw input_error("iwanikApCheck requires t < s within the built tower");
    unsigned __int128 prod = 1;
    bool odd = true;
    for (size_t j = t; j < s; ++j) {
        uint64_t m = blocks.branch(j);
        prod *= m;
        if (m % 2 == 0) odd = false;
    }
    if (prod > INT64_MAX) throw input_error("branching product overflows the exact check");
    Rational half(1, 2);
    ApCheckReport report;
    report.allMatch = true;
    for (int epsT = 0; epsT <= 1; ++epsT) {
        for (int epsS = 0; epsS <= 1; ++epsS) {
            ApComparison row;
            row.t = t;
            row.s = s;
            row.epsT = epsT;
            row.epsS = epsS;
            const PartialWord& wb = epsT == 0 ? blocks.blockZero[t] : blocks.blockOne[t];
            const PartialWord& wc = epsS == 0 ? blocks.blockZero[s] : blocks.blockOne[s];
            row.measured = apFrequency(wb, wc);
            if (odd) {
                Rational dev = Rational(1, (int64_t)prod) * half;
                row.closedForm = epsT == epsS ? half + dev : half - dev;
            } else {
                row.closedForm = half;
            }
            row.match = row.measured == row.closedForm;
            if (!row.match) report.allMatch = false;
            Rational dev = (row.measured - half).abs();
            if (dev > report.supDeviationFromHalf) report.supDeviationFromHalf = dev;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string csvQuote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string seriesCsv(const std::vector<SeriesRow>& rows) {
    std::string out = "N,low,high,resolved,unresolved,low_dec,high_dec\r\n";
    for (const auto& r : rows) {
        out += std::to_string(r.N);
        out += ',';
        out += csvQuote(r.value.low.toString());
        out += ',';
        out += csvQuote(r.value.high.toString());
        out += ',';
        out += std::to_string(r.value.resolved);
        out += ',';
        out += std::to_string(r.value.unresolved);
        out += ',';
        out += std::to_string(r.value.low.toDouble());
        out += ',';
        out += std::to_string(r.value.high.toDouble());
        out += "\r\n";
    }
    return out;
}

}  // namespace toeplitz
