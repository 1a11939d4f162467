#include "toeplitz/words.hpp"

#include <algorithm>
#include <functional>
#include <random>

#include "toeplitz/errors.hpp"

namespace toeplitz {

char symbolChar(Symbol s) {
    switch (s) {
        case Symbol::Zero: return '0';
        case Symbol::One: return '1';
        default: return '?';
    }
}

Symbol symbolFromChar(char c) {
    switch (c) {
        case '0': return Symbol::Zero;
        case '1': return Symbol::One;
        case '?': return Symbol::Hole;
        default: throw input_error(std::string("invalid symbol '") + c + "'");
    }
}

namespace {

uint64_t symbolPattern(Symbol s) {
    switch (s) {
        case Symbol::Zero: return 0;
        case Symbol::One: return 0x5555555555555555ull;
        default: return 0xAAAAAAAAAAAAAAAAull;
    }
}

// write `bitLen` bits read from src (starting at bit 0) into dst at dstPos;
// src chunks are consumed 64-aligned, so src==dst is safe for non-overlapping
// ranges with dstPos >= bitLen
void copyBits(uint64_t* dst, uint64_t dstPos, const uint64_t* src, uint64_t bitLen) {
    uint64_t done = 0;
    while (done < bitLen) {
        uint64_t chunk = bitLen - done;
        if (chunk > 64) chunk = 64;
        uint64_t bits = src[done >> 6];
        if (chunk < 64) bits &= (1ull << chunk) - 1;
        uint64_t p = dstPos + done;
        uint64_t wi = p >> 6;
        unsigned off = (unsigned)(p & 63);
        if (off == 0) {
            uint64_t mask = chunk < 64 ? ((1ull << chunk) - 1) : ~0ull;
            dst[wi] = (dst[wi] & ~mask) | bits;
        } else {
            unsigned cap = 64 - off;
            uint64_t lowBits = chunk < cap ? chunk : cap;
            uint64_t lowMask = (lowBits < 64 ? ((1ull << lowBits) - 1) : ~0ull) << off;
            dst[wi] = (dst[wi] & ~lowMask) | ((bits << off) & lowMask);
            if (chunk > lowBits) {
                uint64_t hiLen = chunk - lowBits;
                uint64_t hiMask = (1ull << hiLen) - 1;
                dst[wi + 1] = (dst[wi + 1] & ~hiMask) | ((bits >> cap) & hiMask);
            }
        }
        done += chunk;
    }
}

}  // namespace

SymbolBuffer::SymbolBuffer(uint64_t n, Symbol fill) : n_(n) {
    words_.assign((n + 31) / 32, symbolPattern(fill));
}

PartialWord::PartialWord(std::string_view text) {
    SymbolBuffer buf(text.size());
    for (size_t i = 0; i < text.size(); ++i) buf.set(i, symbolFromChar(text[i]));
    finalize(std::move(buf));
}

PartialWord::PartialWord(SymbolBuffer&& buffer) { finalize(std::move(buffer)); }

PartialWord PartialWord::fromRuns(const std::vector<std::pair<Symbol, uint64_t>>& runs) {
    uint64_t n = 0;
    for (auto& [s, len] : runs) n += len;
    SymbolBuffer buf(n, Symbol::Zero);
    uint64_t pos = 0;
    for (auto& [s, len] : runs) {
        if (s != Symbol::Zero)
            for (uint64_t i = 0; i < len; ++i) buf.set(pos + i, s);
        pos += len;
    }
    PartialWord out;
    out.finalize(std::move(buf));
    return out;
}

void PartialWord::finalize(SymbolBuffer&& buf) {
    n_ = buf.n_;
    packed_ = std::move(buf.words_);
    runs_.clear();
    runStarts_.clear();
    holes_ = 0;
    if (n_ == 0) return;
    // zero the padding so word-level scans see canonical bits
    unsigned tail = (unsigned)(n_ & 31);
    if (tail) packed_.back() &= (1ull << (tail * 2)) - 1;
    constexpr uint64_t kLow = 0x5555555555555555ull;
    for (uint64_t w : packed_) {
        uint64_t hi = (w >> 1) & kLow, lo = w & kLow;
        holes_ += (uint64_t)__builtin_popcountll(hi & ~lo);
    }
    if (n_ <= kPackedLimit) return;
    // count runs word-wise; switch to RLE only when it compresses
    uint64_t boundaries = 0;
    constexpr uint64_t kFieldMask = 0x1555555555555555ull;  // fields 0..30
    for (size_t i = 0; i < packed_.size(); ++i) {
        uint64_t w = packed_[i];
        uint64_t d = w ^ (w >> 2);
        boundaries += (uint64_t)__builtin_popcountll((d | (d >> 1)) & kFieldMask);
        if (i + 1 < packed_.size()) {
            uint64_t last = (w >> 62) & 3, next = packed_[i + 1] & 3;
            if (last != next && (i + 1) * 32 < n_) ++boundaries;
        }
    }
    // padding made the tail Zero; drop phantom boundaries inside the last word
    if (tail) {
        uint64_t w = packed_.back();
        uint64_t lastSym = (w >> ((tail - 1) * 2)) & 3;
        if (lastSym != 0) --boundaries;  // symbol/padding edge was counted
    }
    uint64_t runCount = boundaries + 1;
    if (runCount > n_ / kRleCompressionFactor) return;
    // extract runs, skipping uniform words
    runs_.reserve(runCount);
    runStarts_.reserve(runCount);
    uint64_t start = 0;
    Symbol cur = (Symbol)(packed_[0] & 3);
    uint64_t i = 0;
    while (i < n_) {
        if ((i & 31) == 0 && i + 32 <= n_ && packed_[i >> 5] == symbolPattern(cur)) {
            i += 32;
            continue;
        }
        Symbol s = (Symbol)((packed_[i >> 5] >> ((i & 31) * 2)) & 3);
        if (s != cur) {
            runs_.push_back(((uint64_t)cur << 62) | (i - start));
            runStarts_.push_back(start);
            cur = s;
            start = i;
        }
        ++i;
    }
    runs_.push_back(((uint64_t)cur << 62) | (n_ - start));
    runStarts_.push_back(start);
    packed_.clear();
    packed_.shrink_to_fit();
}

Symbol PartialWord::at(uint64_t i) const {
    if (i >= n_) throw input_error("word index out of range");
    if (!rle()) return (Symbol)((packed_[i >> 5] >> ((i & 31) * 2)) & 3);
    size_t idx = (size_t)(std::upper_bound(runStarts_.begin(), runStarts_.end(), i) -
                          runStarts_.begin()) - 1;
    return (Symbol)(runs_[idx] >> 62);
}

std::string PartialWord::toString() const {
    std::string out;
    out.reserve(n_);
    forEachRun([&](Symbol s, uint64_t, uint64_t len) { out.append(len, symbolChar(s)); });
    return out;
}

bool PartialWord::operator==(const PartialWord& o) const {
    if (n_ != o.n_ || holes_ != o.holes_) return false;
    if (!rle() && !o.rle()) return packed_ == o.packed_;
    // stream runs from both sides
    uint64_t pos = 0;
    while (pos < n_) {
        Symbol a = at(pos), b = o.at(pos);
        if (a != b) return false;
        ++pos;
    }
    return true;
}

SymbolBuffer PartialWord::tiled(uint64_t copies) const {
    SymbolBuffer out(n_ * copies, Symbol::Zero);
    if (n_ == 0 || copies == 0) return out;
    uint64_t bitsPerCopy = 2 * n_;
    if (!rle()) {
        copyBits(out.words_.data(), 0, packed_.data(), bitsPerCopy);
    } else {
        uint64_t start = 0;
        for (uint64_t r : runs_) {
            Symbol s = (Symbol)(r >> 62);
            uint64_t len = r & kLenMask;
            if (s != Symbol::Zero)
                for (uint64_t i = 0; i < len; ++i) out.set(start + i, s);
            start += len;
        }
    }
    uint64_t done = 1;
    while (done < copies) {
        uint64_t chunk = std::min(done, copies - done);
        copyBits(out.words_.data(), bitsPerCopy * done, out.words_.data(), bitsPerCopy * chunk);
        done += chunk;
    }
    return out;
}

void PartialWord::blitInto(SymbolBuffer& dst, uint64_t pos) const {
    if (pos + n_ > dst.size()) throw input_error("blit out of range");
    if (!rle()) {
        copyBits(dst.words_.data(), 2 * pos, packed_.data(), 2 * n_);
        return;
    }
    forEachRun([&](Symbol s, uint64_t start, uint64_t len) {
        for (uint64_t i = 0; i < len; ++i) dst.set(pos + start + i, s);
    });
}

ViablePair::ViablePair(std::vector<Level> levels, std::vector<uint64_t> checkpoints,
                       ConstructionMeta meta)
    : levels_(std::move(levels)), checkpoints_(std::move(checkpoints)), meta_(std::move(meta)) {
    if (levels_.empty()) throw input_error("pair needs at least one level");
    for (size_t t = 0; t < levels_.size(); ++t) {
        if (levels_[t].modulus == 0 || levels_[t].word.size() != levels_[t].modulus)
            throw input_error("level " + std::to_string(t) + ": word length != modulus");
        if (t > 0) {
            uint64_t a = levels_[t - 1].modulus, b = levels_[t].modulus;
            if (b <= a || b % a != 0)
                throw input_error("level moduli must be strictly increasing and divisible");
        }
    }
    if (checkpoints_.size() + 1 > levels_.size() && !checkpoints_.empty())
        throw input_error("more checkpoints than level transitions");
}

ViablePair ViablePair::fromStrings(const std::vector<std::string>& words,
                                   std::vector<uint64_t> checkpoints, ConstructionMeta meta) {
    std::vector<Level> levels;
    levels.reserve(words.size());
    for (const auto& w : words) levels.push_back({w.size(), PartialWord(w)});
    return ViablePair(std::move(levels), std::move(checkpoints), std::move(meta));
}

ViabilityReport viabilityCheck(const ViablePair& pair) {
    ViabilityReport report;
    auto violate = [&](ViabilityViolation::Kind kind, size_t level, uint64_t index,
                       std::string detail) {
        report.viable = false;
        report.first = ViabilityViolation{kind, level, index, std::move(detail)};
    };
    // refinement between consecutive levels
    for (size_t t = 1; t < pair.levelCount(); ++t) {
        const PartialWord& parent = pair.word(t - 1);
        const PartialWord& child = pair.word(t);
        uint64_t np = parent.size();
        uint64_t r = 0;
        for (uint64_t j = 0; j < child.size(); ++j) {
            Symbol ps = parent.at(r);
            if (ps != Symbol::Hole && child.at(j) != ps) {
                violate(ViabilityViolation::Kind::Refinement, t, j,
                        "copy of level " + std::to_string(t - 1) + " altered at a non-hole");
                return report;
            }
            if (++r == np) r = 0;
        }
    }
    // boundary condition for all i the materialized tower is responsible for:
    // one refinement step must already resolve everything below n_{T-1}, so a
    // single-level pair owes nothing yet (it may still refine later)
    size_t T = pair.topLevel();
    uint64_t range = T >= 1 ? pair.modulus(T - 1) : 0;
    for (uint64_t i = 0; i < range; ++i) {
        bool ok = false;
        for (size_t t = 0; t <= T; ++t) {
            uint64_t n = pair.modulus(t);
            uint64_t a = i % n;
            uint64_t b = (n - a) % n;
            if (pair.word(t).at(a) != Symbol::Hole && pair.word(t).at(b) != Symbol::Hole) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            violate(ViabilityViolation::Kind::Boundary, T, i,
                    "index " + std::to_string(i) + " never resolved");
            return report;
        }
    }
    return report;
}

SymbolLookup symbolAt(const ViablePair& pair, int64_t i) {
    for (size_t t = 0; t < pair.levelCount(); ++t) {
        int64_t n = (int64_t)pair.modulus(t);
        int64_t r = i % n;
        if (r < 0) r += n;
        Symbol s = pair.word(t).at((uint64_t)r);
        if (s != Symbol::Hole) return {s, t};
    }
    return {Symbol::Hole, pair.topLevel()};
}

std::vector<LevelQuestionStats> questionStats(const ViablePair& pair, std::optional<uint64_t> k) {
    std::vector<LevelQuestionStats> out;
    for (size_t t = 0; t < pair.levelCount(); ++t) {
        LevelQuestionStats s;
        s.modulus = pair.modulus(t);
        s.holes = pair.word(t).holeCount();
        s.holeRatio = Rational::fromWide((__int128)s.holes, (__int128)s.modulus);
        if (k) {
            try {
                uint64_t r = rhoMax(*k, s.modulus);
                s.rhoK = r;
                s.weightedRatio = Rational::fromWide((__int128)s.holes * r, (__int128)s.modulus);
            } catch (const budget_error&) {
                // ratio reported without the rho factor
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

ResidueSet perResidues(const PartialWord& w, uint64_t s, Symbol eps) {
    if (s == 0) throw input_error("perResidues requires s >= 1");
    std::vector<bool> ok(s, true);
    uint64_t r = 0;
    for (uint64_t i = 0; i < w.size(); ++i) {
        if (w.at(i) != eps) ok[r] = false;
        if (++r == s) r = 0;
    }
    ResidueSet out(s);
    for (uint64_t i = 0; i < s; ++i)
        if (ok[i]) out.insert(i);
    return out;
}

bool DivisorCertificate::certified(uint64_t r) const {
    return std::binary_search(certifiedZero.begin(), certifiedZero.end(), r) ||
           std::binary_search(certifiedOne.begin(), certifiedOne.end(), r);
}

bool DivisorCertificate::possible(uint64_t r) const {
    return certified(r) || std::binary_search(unknown.begin(), unknown.end(), r);
}

const DivisorCertificate& PeriodCertificate::at(uint64_t s) const {
    for (const auto& d : divisors)
        if (d.s == s) return d;
    throw input_error("no certificate for divisor " + std::to_string(s));
}

std::vector<uint64_t> PeriodCertificate::essentialPeriods() const {
    std::vector<uint64_t> out;
    for (const auto& d : divisors)
        if (d.verdict == PeriodVerdict::Essential) out.push_back(d.s);
    return out;
}

bool PeriodCertificate::anyUnknown() const {
    for (const auto& d : divisors)
        if (d.verdict == PeriodVerdict::Unknown) return true;
    return false;
}

PeriodCertificate essentialPeriodCertificate(const ViablePair& pair, size_t level) {
    if (level >= pair.levelCount()) throw input_error("level out of range");
    uint64_t n = pair.modulus(level);
    const PartialWord& w = pair.word(level);
    std::vector<uint64_t> divisors;
    for (uint64_t d = 1; (unsigned __int128)d * d <= n; ++d) {
        if (n % d == 0) {
            divisors.push_back(d);
            if (d != n / d) divisors.push_back(n / d);
        }
    }
    std::sort(divisors.begin(), divisors.end());

    PeriodCertificate cert;
    cert.level = level;
    cert.modulus = n;
    for (uint64_t s : divisors) {
        DivisorCertificate dc;
        dc.s = s;
        std::vector<uint8_t> flags(s, 0);  // 1 sawZero, 2 sawOne, 4 sawHole
        uint64_t r = 0;
        for (uint64_t j = 0; j < n; ++j) {
            Symbol sym = w.at(j);
            flags[r] |= sym == Symbol::Zero ? 1 : sym == Symbol::One ? 2 : 4;
            if (++r == s) r = 0;
        }
        for (uint64_t i = 0; i < s; ++i) {
            uint8_t f = flags[i];
            bool z = f & 1, o = f & 2, h = f & 4;
            if (z && o) continue;              // conflict: certainly not periodic at s
            if (z && !h) dc.certifiedZero.push_back(i);
            else if (o && !h) dc.certifiedOne.push_back(i);
            else dc.unknown.push_back(i);      // holes block, or class is all holes
        }
        cert.divisors.push_back(std::move(dc));
    }
    // verdicts need all divisor data, so second pass
    for (auto& dc : cert.divisors) {
        uint64_t s = dc.s;
        std::vector<uint64_t> certAll(dc.certifiedZero);
        certAll.insert(certAll.end(), dc.certifiedOne.begin(), dc.certifiedOne.end());
        std::sort(certAll.begin(), certAll.end());
        bool unknowns = !dc.unknown.empty();
        bool essential = !certAll.empty();
        for (const auto& sub : cert.divisors) {
            if (sub.s >= s || s % sub.s != 0) continue;
            if (!sub.unknown.empty()) unknowns = true;
            bool witness = false;
            for (uint64_t r2 : certAll) {
                if (!sub.possible(r2 % sub.s)) { witness = true; break; }
            }
            if (!witness) essential = false;
            if (!essential && unknowns) break;
        }
        if (essential) dc.verdict = PeriodVerdict::Essential;
        else if (!unknowns) dc.verdict = PeriodVerdict::NotEssential;
        else dc.verdict = PeriodVerdict::Unknown;
    }
    return cert;
}

BlockFrequency blockFrequency(const ViablePair& pair, size_t level, const std::string& block) {
    if (level >= pair.levelCount()) throw input_error("level out of range");
    uint64_t n = pair.modulus(level);
    if (block.empty() || block.size() > n) throw input_error("block length must be in [1, n_T]");
    std::vector<Symbol> b;
    for (char c : block) {
        Symbol s = symbolFromChar(c);
        if (s == Symbol::Hole) throw input_error("block must be over {0,1}");
        b.push_back(s);
    }
    const PartialWord& w = pair.word(level);
    uint64_t certain = 0, compatible = 0;
    for (uint64_t i = 0; i < n; ++i) {
        bool allResolved = true, match = true;
        for (size_t j = 0; j < b.size() && match; ++j) {
            uint64_t p = i + j;
            if (p >= n) p -= n;
            Symbol s = w.at(p);
            if (s == Symbol::Hole) allResolved = false;
            else if (s != b[j]) match = false;
        }
        if (!match) continue;
        ++compatible;
        if (allResolved) ++certain;
    }
    BlockFrequency out;
    out.certain = certain;
    out.compatible = compatible;
    out.low = Rational::fromWide((__int128)certain, (__int128)n);
    out.high = Rational::fromWide((__int128)compatible, (__int128)n);
    return out;
}

namespace {

ViablePair withResolvedTop(const ViablePair& pair, const std::function<Symbol()>& next) {
    SymbolBuffer buf = pair.word(pair.topLevel()).tiled(1);
    pair.word(pair.topLevel()).forEachHole([&](uint64_t i) { buf.set(i, next()); });
    std::vector<Level> levels(pair.levels());
    levels.back().word = PartialWord(std::move(buf));
    return ViablePair(std::move(levels), std::vector<uint64_t>(pair.checkpoints()),
                      ConstructionMeta(pair.meta()));
}

}  // namespace

ViablePair resolveHoles(const ViablePair& pair, Symbol value) {
    if (value == Symbol::Hole) throw input_error("resolveHoles needs a concrete symbol");
    return withResolvedTop(pair, [value]() { return value; });
}

ViablePair resolveHolesSeeded(const ViablePair& pair, uint64_t seed) {
    std::mt19937_64 rng(seed);
    return withResolvedTop(pair, [&rng]() {
        return (rng() & 1) ? Symbol::One : Symbol::Zero;
    });
}

}  // namespace toeplitz
