// torbit: build Toeplitz-word constructions and analyze polynomial orbits.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "toeplitz/constructions.hpp"
#include "toeplitz/errors.hpp"
#include "toeplitz/ntcore.hpp"
#include "toeplitz/orbitstats.hpp"
#include "toeplitz/tpv.hpp"

using namespace toeplitz;
using ordered_json = nlohmann::ordered_json;

namespace {

// exit codes: 0 success, 1 verdict failure, 2 input error
constexpr int kExitVerdict = 1;
constexpr int kExitInput = 2;

Rational parseRational(const std::string& text) {
    size_t slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rational(std::stoll(text));
        return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    } catch (const std::exception&) {
        throw input_error("cannot parse rational '" + text + "' (use p or p/q)");
    }
}

std::vector<uint64_t> parseUintList(const std::string& text, char sep = ',') {
    std::vector<uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (item.empty()) continue;
        out.push_back(std::stoull(item));
    }
    if (out.empty()) throw input_error("empty integer list '" + text + "'");
    return out;
}

std::vector<std::vector<uint64_t>> parseLevelPrimes(const std::string& text) {
    std::vector<std::vector<uint64_t>> out;
    std::stringstream ss(text);
    std::string level;
    while (std::getline(ss, level, ';')) out.push_back(parseUintList(level));
    if (out.empty()) throw input_error("empty level-primes list");
    return out;
}

CylinderFunction parseCylinder(const std::string& spec) {
    if (spec == "G" || spec == "g") return CylinderFunction::signFunction();
    if (spec == "ones") return CylinderFunction::indicator("1");
    if (spec.rfind("block:", 0) == 0) return CylinderFunction::indicator(spec.substr(6));
    throw input_error("unknown cylinder '" + spec + "' (use G, ones, or block:<01 word>)");
}

void writeOutput(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot open for writing: " + path);
    out << content;
}

std::string gnuplotScript(const std::string& csvPath, const std::string& title) {
    std::string data = csvPath.empty() || csvPath == "-" ? "series.csv" : csvPath;
    std::string s;
    s += "set datafile separator ','\n";
    s += "set key autotitle columnhead\n";
    s += "set xlabel 'N'\n";
    s += "set title '" + title + "'\n";
    s += "plot '" + data + "' using 1:6 with lines title 'low', \\\n";
    s += "     '" + data + "' using 1:7 with lines title 'high'\n";
    return s;
}

ordered_json conditionsJson(const ConstructionReport& report) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : report.conditions) {
        ordered_json j;
        j["name"] = c.name;
        j["level"] = c.level;
        j["holds"] = c.holds;
        j["required"] = c.required;
        j["actual"] = c.actual;
        if (!c.note.empty()) j["note"] = c.note;
        arr.push_back(std::move(j));
    }
    return arr;
}

int runConstruct(ConstructionKind kind, const std::string& out, int64_t k, int64_t l,
                 const std::string& polyText, bool strict, size_t levels,
                 const std::string& primesText, const std::string& branchingText,
                 const std::string& fill, uint64_t seed, uint64_t budget, bool normalize,
                 bool quiet) {
    ConstructionConfig cfg;
    cfg.kind = kind;
    cfg.k = k;
    cfg.l = l;
    cfg.mode = strict ? BuildMode::Strict : BuildMode::Relaxed;
    cfg.fill = fillFromName(fill);
    cfg.seed = seed;
    cfg.materializationBudget = budget;
    if (kind == ConstructionKind::Iwanik) {
        cfg.poly = IntPolynomial::parse(polyText);
        if (normalize) cfg.poly = normalizePoly(cfg.poly).poly;
        if (!branchingText.empty()) cfg.branching = parseUintList(branchingText);
        cfg.levels = levels ? levels : cfg.branching.size();
    } else {
        if (!primesText.empty()) cfg.levelPrimes = parseLevelPrimes(primesText);
        cfg.levels = levels ? levels : cfg.levelPrimes.size();
    }
    if (cfg.levels == 0) throw input_error("no levels requested (give --levels or a tower)");
    ConstructionResult res = build(cfg);
    tpvSave(res.pair, out);
    if (!quiet) {
        ordered_json j;
        j["report_version"] = 1;
        j["kind"] = kindName(kind);
        j["mode"] = modeName(cfg.mode);
        j["levels_built"] = res.report.levelsBuilt;
        j["budget_stopped"] = res.report.budgetStopped;
        ordered_json moduli = ordered_json::array();
        for (const auto& level : res.pair.levels()) moduli.push_back(level.modulus);
        j["moduli"] = std::move(moduli);
        ordered_json holes = ordered_json::array();
        for (const auto& level : res.pair.levels()) holes.push_back(level.word.holeCount());
        j["holes"] = std::move(holes);
        j["checkpoints"] = res.pair.checkpoints();
        j["conditions"] = conditionsJson(res.report);
        if (!res.report.overrides.empty()) j["relaxed_overrides"] = res.report.overrides;
        std::cerr << j.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Toeplitz-word constructions and polynomial-orbit statistics"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads for averages");

    // ---- construct-a / construct-b / construct-iwanik
    struct ConstructArgs {
        int64_t k = 0, l = 0;
        std::string poly, primes, branching, out;
        std::string fill = "zero";
        bool strict = false, normalize = false, quiet = false;
        size_t levels = 0;
        uint64_t seed = 0;
        uint64_t budget = 1ull << 30;
    };
    auto addConstructFlags = [](CLI::App* cmd, ConstructArgs& a, bool iwanik) {
        if (iwanik) {
            cmd->add_option("--poly", a.poly, "permutative polynomial, e.g. \"m^3\"")->required();
            cmd->add_option("--branching", a.branching, "m_t list, e.g. \"5,47\"");
            cmd->add_flag("--normalize", a.normalize, "replace P by sign*P(x+s) first");
        } else {
            cmd->add_option("--k", a.k, "divergence exponent k")->required();
            cmd->add_option("--l", a.l, "convergence exponent l")->required();
        }
        cmd->add_option("--primes", a.primes, "tower primes: \"11,23\" (A) or \"13,17;5\" (B)");
        cmd->add_option("--levels", a.levels, "levels to build (strict auto-search)");
        cmd->add_flag("--strict", a.strict, "strict constants (validated, budget-guarded)");
        cmd->add_flag("--relaxed", [](int64_t) {}, "desk-scale mode (default)");
        cmd->add_option("--fill", a.fill, "fill policy: zero | one | seeded");
        cmd->add_option("--seed", a.seed, "seed for the seeded fill policy");
        cmd->add_option("--budget", a.budget, "materialization budget in symbols");
        cmd->add_flag("--quiet", a.quiet, "suppress the build report on stderr");
        cmd->add_option("-o,--out", a.out, "output TPV1 file")->required();
    };
    ConstructArgs aArgs, bArgs, iwArgs;
    addConstructFlags(app.add_subcommand("construct-a", "build the k-not-dividing-l tower"),
                      aArgs, false);
    addConstructFlags(app.add_subcommand("construct-b", "build the k-divides-l tower"), bArgs,
                      false);
    addConstructFlags(app.add_subcommand("construct-iwanik", "build the strictly ergodic tower"),
                      iwArgs, true);

    // ---- nt group
    auto* nt = app.add_subcommand("nt", "exact number-theoretic kernels");
    nt->require_subcommand(1);
    uint64_t ntK = 0, ntL = 0, ntN = 0, ntBigN = 0, ntP = 0;
    int64_t ntA = 0, ntAlpha = 0;
    std::string ntPoly;
    bool ntUnits = false, ntElements = false;
    auto* ntRho = nt->add_subcommand("rho", "count m in [1,N] with m^k = a (mod n)");
    ntRho->add_option("--k", ntK)->required();
    ntRho->add_option("--N", ntBigN)->required();
    ntRho->add_option("--n", ntN)->required();
    ntRho->add_option("--a", ntA)->required();
    auto* ntRes = nt->add_subcommand("residues", "k-th power residues mod n");
    ntRes->add_option("--n", ntN)->required();
    ntRes->add_option("--k", ntK)->required();
    ntRes->add_flag("--units", ntUnits, "restrict to residues coprime to n");
    auto* ntPerm = nt->add_subcommand("perm", "is P a permutation mod n");
    ntPerm->add_option("--poly", ntPoly)->required();
    ntPerm->add_option("--n", ntN)->required();
    auto* ntDickson = nt->add_subcommand("dickson", "Dickson polynomial D_n(alpha, x)");
    ntDickson->add_option("--n", ntN)->required();
    ntDickson->add_option("--alpha", ntAlpha)->required();
    auto* ntWeil = nt->add_subcommand("weil", "count x^k - y^l = a over F_p");
    ntWeil->add_option("--p", ntP)->required();
    ntWeil->add_option("--k", ntK)->required();
    ntWeil->add_option("--l", ntL)->required();
    ntWeil->add_option("--a", ntA)->required();
    auto* ntAset = nt->add_subcommand("aset", "the sparse power-residue set A for (n, k, l)");
    ntAset->add_option("--n", ntN)->required();
    ntAset->add_option("--k", ntK)->required();
    ntAset->add_option("--l", ntL)->required();
    ntAset->add_flag("--elements", ntElements, "print the elements");

    // ---- orbit analyses
    std::string pairPath, polyText, cylinderSpec = "G", outPath, tolText = "1/100";
    std::string shiftsText = "0", gridText, apB, apC;
    int64_t shift = 0;
    uint64_t bigN = 0;
    size_t levelT = SIZE_MAX, apT = 0, apS = 0;
    bool emitGnuplot = false, probeCsv = false;

    auto* avg = app.add_subcommand("average", "Birkhoff average along P as exact CSV");
    avg->add_option("--pair", pairPath)->required();
    avg->add_option("--poly", polyText)->required();
    avg->add_option("--N", bigN)->required();
    avg->add_option("--shift", shift);
    avg->add_option("--cylinder", cylinderSpec);
    avg->add_option("-o,--out", outPath);
    avg->add_flag("--gnuplot", emitGnuplot);

    auto* cps = app.add_subcommand("checkpoints", "divergence report at the construction scales");
    cps->add_option("--pair", pairPath)->required();
    cps->add_option("--poly", polyText);
    cps->add_option("-o,--out", outPath);

    auto* probe = app.add_subcommand("probe", "oscillation of averages over an N grid");
    probe->add_option("--pair", pairPath)->required();
    probe->add_option("--poly", polyText)->required();
    probe->add_option("--shifts", shiftsText);
    probe->add_option("--grid", gridText)->required();
    probe->add_option("--cylinder", cylinderSpec);
    probe->add_option("-o,--out", outPath);
    probe->add_flag("--csv", probeCsv, "emit the averages as CSV instead of the JSON report");
    probe->add_flag("--gnuplot", emitGnuplot);

    auto* equi = app.add_subcommand("equi", "equidistribution check against block frequencies");
    equi->add_option("--pair", pairPath)->required();
    equi->add_option("--poly", polyText)->required();
    equi->add_option("--cylinder", cylinderSpec);
    equi->add_option("--tol", tolText, "tolerance p/q (env TOL_OVERRIDE wins)");
    equi->add_option("-o,--out", outPath);

    auto* dens = app.add_subcommand("density", "density verdict for the orbit along P");
    dens->add_option("--pair", pairPath)->required();
    dens->add_option("--poly", polyText)->required();
    dens->add_option("--level", levelT, "certificate level (default: top)");
    dens->add_option("-o,--out", outPath);

    auto* ap = app.add_subcommand("ap", "aligned block frequencies");
    ap->add_option("--pair", pairPath, "iwanik TPV1 file (blocks replayed from metadata)");
    ap->add_option("--t", apT);
    ap->add_option("--s", apS);
    ap->add_option("--B", apB, "direct mode: block B");
    ap->add_option("--C", apC, "direct mode: word C");

    auto* verify = app.add_subcommand("verify", "re-check construction invariants of a TPV1 file");
    verify->add_option("--pair", pairPath)->required();
    verify->add_option("-o,--out", outPath);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("construct-a"))
            return runConstruct(ConstructionKind::A, aArgs.out, aArgs.k, aArgs.l, "", aArgs.strict,
                                aArgs.levels, aArgs.primes, "", aArgs.fill, aArgs.seed,
                                aArgs.budget, false, aArgs.quiet);
        if (app.got_subcommand("construct-b"))
            return runConstruct(ConstructionKind::B, bArgs.out, bArgs.k, bArgs.l, "", bArgs.strict,
                                bArgs.levels, bArgs.primes, "", bArgs.fill, bArgs.seed,
                                bArgs.budget, false, bArgs.quiet);
        if (app.got_subcommand("construct-iwanik"))
            return runConstruct(ConstructionKind::Iwanik, iwArgs.out, 0, 0, iwArgs.poly,
                                iwArgs.strict, iwArgs.levels, "", iwArgs.branching, iwArgs.fill,
                                iwArgs.seed, iwArgs.budget, iwArgs.normalize, iwArgs.quiet);

        if (nt->parsed()) {
            if (ntRho->parsed()) {
                uint64_t a = ((ntA % (int64_t)ntN) + (int64_t)ntN) % (int64_t)ntN;
                std::cout << rho(ntK, ntBigN, ntN, a) << "\n";
            } else if (ntRes->parsed()) {
                ResidueSet r = powerResidues(ntN, ntK, ntUnits);
                std::cout << "size " << r.size() << "\n";
                bool first = true;
                r.forEach([&](uint64_t v) {
                    std::cout << (first ? "" : " ") << v;
                    first = false;
                });
                std::cout << "\n";
            } else if (ntPerm->parsed()) {
                bool ok = isPermutationMod(IntPolynomial::parse(ntPoly), ntN);
                std::cout << (ok ? "permutation" : "not-a-permutation") << "\n";
            } else if (ntDickson->parsed()) {
                std::cout << dickson(ntN, ntAlpha).toString() << "\n";
            } else if (ntWeil->parsed()) {
                uint64_t a = ((ntA % (int64_t)ntP) + (int64_t)ntP) % (int64_t)ntP;
                uint64_t count = weilCount(ntP, ntK, ntL, a);
                double bound = (double)(ntK * ntL) * std::sqrt((double)ntP);
                double dev = count > ntP ? (double)(count - ntP) : (double)(ntP - count);
                char line[128];
                std::snprintf(line, sizeof line, "%llu (bound %.2f) %s\n",
                              (unsigned long long)count, bound, dev <= bound ? "OK" : "VIOLATED");
                std::cout << line;
                if (dev > bound) return kExitVerdict;
            } else if (ntAset->parsed()) {
                ASetResult r = buildASet(ntN, ntK, ntL);
                char line[160];
                std::snprintf(line, sizeof line, "|A| = %llu (lower bound %.4f, %s)%s\n",
                              (unsigned long long)r.set.size(), r.lowerBound,
                              r.lowerBoundHolds ? "holds" : "fails",
                              r.strictHypotheses ? "" : " [strict hypotheses not met]");
                std::cout << line;
                if (ntElements) {
                    bool first = true;
                    r.set.forEach([&](uint64_t v) {
                        std::cout << (first ? "" : " ") << v;
                        first = false;
                    });
                    std::cout << "\n";
                }
            }
            return 0;
        }

        AverageOptions opts;
        opts.threads = threads;

        if (avg->parsed()) {
            ViablePair pair = tpvLoad(pairPath);
            IntPolynomial P = IntPolynomial::parse(polyText);
            CylinderFunction F = parseCylinder(cylinderSpec);
            IntervalValue v = birkhoffAverage(pair, P, shift, bigN, F, opts);
            std::string csv = seriesCsv({{bigN, v}});
            writeOutput(outPath, csv);
            if (emitGnuplot) std::cout << gnuplotScript(outPath, "average along " + P.toString());
            return 0;
        }
        if (cps->parsed()) {
            ViablePair pair = tpvLoad(pairPath);
            CheckpointReport report = polyText.empty()
                                          ? checkpointReport(pair, opts)
                                          : checkpointReport(pair, IntPolynomial::parse(polyText), opts);
            writeOutput(outPath, checkpointReportJson(report));
            return 0;
        }
        if (probe->parsed()) {
            ViablePair pair = tpvLoad(pairPath);
            IntPolynomial P = IntPolynomial::parse(polyText);
            CylinderFunction F = parseCylinder(cylinderSpec);
            std::vector<int64_t> shifts;
            for (uint64_t v : parseUintList(shiftsText)) shifts.push_back((int64_t)v);
            std::vector<uint64_t> grid = parseUintList(gridText);
            ProbeReport report = convergenceProbe(pair, P, F, shifts, grid, opts);
            if (probeCsv) {
                std::vector<SeriesRow> rows;
                for (const auto& a : report.averages) rows.push_back({a.N, a.value});
                writeOutput(outPath, seriesCsv(rows));
            } else {
                ordered_json j;
                j["report_version"] = 1;
                j["kind"] = "probe";
                j["polynomial"] = P.toString();
                j["all_within_bound"] = report.allWithinBound;
                ordered_json cells = ordered_json::array();
                for (const auto& c : report.cells) {
                    ordered_json cj;
                    cj["shift"] = c.shift;
                    cj["from_N"] = c.fromN;
                    cj["to_N"] = c.toN;
                    cj["oscillation"] = c.oscillation.toString();
                    cj["oscillation_dec"] = c.oscillation.toDouble();
                    cj["bound"] = c.bound.toString();
                    cj["bound_dec"] = c.bound.toDouble();
                    cj["within"] = c.withinBound;
                    cells.push_back(std::move(cj));
                }
                j["cells"] = std::move(cells);
                writeOutput(outPath, j.dump(2) + "\n");
            }
            if (emitGnuplot) std::cout << gnuplotScript(outPath, "averages along " + P.toString());
            return report.allWithinBound ? 0 : kExitVerdict;
        }
        if (equi->parsed()) {
            ViablePair pair = tpvLoad(pairPath);
            IntPolynomial P = IntPolynomial::parse(polyText);
            CylinderFunction F = parseCylinder(cylinderSpec);
            const char* envTol = std::getenv("TOL_OVERRIDE");
            Rational tol = parseRational(envTol ? envTol : tolText);
            EquiReport r = equidistributionCheck(pair, P, F, tol, opts);
            ordered_json j;
            j["report_version"] = 1;
            j["kind"] = "equidistribution";
            j["polynomial"] = P.toString();
            j["orbit_low"] = r.orbitAverage.low.toString();
            j["orbit_high"] = r.orbitAverage.high.toString();
            j["mu_low"] = r.muEstimate.low.toString();
            j["mu_high"] = r.muEstimate.high.toString();
            j["distance"] = r.distance.toString();
            j["tolerance"] = r.tolerance.toString();
            j["pass"] = r.pass;
            j["identity_gap"] = r.identityGap.toString();
            j["identity_bound"] = r.identityBound.toString();
            j["identity_holds"] = r.identityHolds;
            writeOutput(outPath, j.dump(2) + "\n");
            return (r.pass && r.identityHolds) ? 0 : kExitVerdict;
        }
        if (dens->parsed()) {
            ViablePair pair = tpvLoad(pairPath);
            IntPolynomial P = IntPolynomial::parse(polyText);
            size_t level = levelT == SIZE_MAX ? pair.topLevel() : levelT;
            DensityReport r = densityVerdict(pair, P, level);
            ordered_json j;
            j["report_version"] = 1;
            j["kind"] = "density";
            j["polynomial"] = P.toString();
            j["verdict"] = r.verdict == DensityVerdict::DenseCertified ? "DENSE-CERTIFIED"
                           : r.verdict == DensityVerdict::NotDense     ? "NOT-DENSE"
                                                                       : "UNDECIDED";
            j["essential_periods"] = r.essentialPeriods;
            j["permutation_mod_top"] = r.permutationModTop;
            j["unknown_certificates"] = r.unknownCertificates;
            if (r.verdict == DensityVerdict::NotDense) {
                j["witness_period"] = r.witnessPeriod;
                j["missing_residues"] = r.missingResidues;
            }
            writeOutput(outPath, j.dump(2) + "\n");
            return 0;
        }
        if (ap->parsed()) {
            if (!apB.empty() || !apC.empty()) {
                if (apB.empty() || apC.empty())
                    throw input_error("direct mode needs both --B and --C");
                std::cout << apFrequency(apB, apC).toString() << "\n";
                return 0;
            }
            if (pairPath.empty()) throw input_error("give --pair or --B/--C");
            ViablePair pair = tpvLoad(pairPath);
            if (pair.meta().kind != "iwanik")
                throw input_error("ap --pair needs an iwanik construction file");
            ConstructionResult replay = buildIwanik(configFromMeta(pair));
            ApCheckReport r = iwanikApCheck(*replay.blocks, apT, apS);
            ordered_json j;
            j["report_version"] = 1;
            j["kind"] = "ap";
            j["t"] = apT;
            j["s"] = apS;
            j["all_match"] = r.allMatch;
            j["sup_deviation_from_half"] = r.supDeviationFromHalf.toString();
            ordered_json rows = ordered_json::array();
            for (const auto& row : r.rows) {
                ordered_json rj;
                rj["eps_t"] = row.epsT;
                rj["eps_s"] = row.epsS;
                rj["measured"] = row.measured.toString();
                rj["closed_form"] = row.closedForm.toString();
                rj["match"] = row.match;
                rows.push_back(std::move(rj));
            }
            j["rows"] = std::move(rows);
            writeOutput(outPath, j.dump(2) + "\n");
            return r.allMatch ? 0 : kExitVerdict;
        }
        if (verify->parsed()) {
            ViablePair pair = tpvLoad(pairPath);
            VerifyReport r = verifyConstructionInvariants(pair);
            bool replayIdentical = true;
            if (pair.meta().kind != "manual") {
                ConstructionResult replay = build(configFromMeta(pair));
                std::ifstream in(pairPath, std::ios::binary);
                std::string original((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
                replayIdentical = tpvToString(replay.pair) == original;
            }
            ordered_json j;
            j["report_version"] = 1;
            j["kind"] = "verify";
            j["structural_pass"] = r.structuralPass;
            j["bounds_pass"] = r.boundsPass;
            j["replay_identical"] = replayIdentical;
            ordered_json checks = ordered_json::array();
            for (const auto& c : r.checks) {
                ordered_json cj;
                cj["name"] = c.name;
                cj["level"] = c.level;
                cj["hard"] = c.hard;
                cj["pass"] = c.pass;
                cj["value"] = c.value;
                cj["bound"] = c.bound;
                if (!c.detail.empty()) cj["detail"] = c.detail;
                checks.push_back(std::move(cj));
            }
            j["checks"] = std::move(checks);
            writeOutput(outPath, j.dump(2) + "\n");
            return (r.structuralPass && r.boundsPass && replayIdentical) ? 0 : kExitVerdict;
        }
    } catch (const input_error& e) {
        std::cerr << "torbit: error[input]: " << e.what() << "\n";
        return kExitInput;
    } catch (const budget_error& e) {
        std::cerr << "torbit: error[budget]: " << e.what() << "\n";
        return kExitInput;
    } catch (const verdict_error& e) {
        std::cerr << "torbit: error[verdict]: " << e.what() << "\n";
        return kExitVerdict;
    } catch (const std::exception& e) {
        std::cerr << "torbit: error[internal]: " << e.what() << "\n";
        return kExitVerdict;
    }
    return 0;
}
