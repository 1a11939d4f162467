#include "toeplitz/int_polynomial.hpp"

#include <cctype>
#include <cstdlib>

#include "toeplitz/errors.hpp"

namespace toeplitz {

namespace {

int64_t checkedMulAdd(int64_t acc, int64_t x, int64_t c) {
    // acc*x + c with overflow detection
    __int128 v = (__int128)acc * x + c;
    if (v > INT64_MAX || v < INT64_MIN) throw verdict_error("polynomial evaluation overflow");
    return (int64_t)v;
}

}  // namespace

IntPolynomial::IntPolynomial(std::vector<int64_t> coefficients) : coeffs_(std::move(coefficients)) {
    while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

IntPolynomial IntPolynomial::monomial(int degree, int64_t coefficient) {
    if (degree < 0) throw input_error("monomial degree must be non-negative");
    std::vector<int64_t> c(degree + 1, 0);
    c[degree] = coefficient;
    return IntPolynomial(std::move(c));
}

int64_t IntPolynomial::leadingMagnitude() const {
    if (coeffs_.empty()) return 0;
    int64_t c = coeffs_.back();
    return c < 0 ? -c : c;
}

uint64_t IntPolynomial::evalMod(uint64_t x, uint64_t n) const {
    if (n == 0) throw input_error("evalMod with zero modulus");
    if (n == 1) return 0;
    x %= n;
    uint64_t acc = 0;
    for (size_t i = coeffs_.size(); i-- > 0;) {
        acc = (uint64_t)(((unsigned __int128)acc * x) % n);
        int64_t c = coeffs_[i];
        uint64_t cm = c >= 0 ? (uint64_t)c % n : n - 1 - ((uint64_t)(-(c + 1)) % n);
        acc += cm;
        if (acc >= n) acc -= n;
    }
    return acc;
}

int64_t IntPolynomial::evalChecked(int64_t x) const {
    int64_t acc = 0;
    for (size_t i = coeffs_.size(); i-- > 0;) acc = checkedMulAdd(acc, x, coeffs_[i]);
    return acc;
}

__int128 IntPolynomial::evalClamped(int64_t x, __int128 limit) const {
    // per-step cap keeping acc*x + c inside __int128. Saturation engages only
    // past 2^62, and once it does every later partial keeps a trustworthy
    // sign (for |x| >= 2 the next magnitude is at least cap*|x| - 2^63), so
    // thresholds up to 2^62 compare correctly against the reported overflow.
    __int128 ax = x < 0 ? -(__int128)x : (__int128)x;
    __int128 cap = (__int128)((~(unsigned __int128)0 >> 2) / (unsigned __int128)(ax < 2 ? 2 : ax));
    cap -= INT64_MAX;
    const __int128 kFloor = (__int128)1 << 62;  // (kFloor+1)*|x| + 2^63 still fits
    if (cap < kFloor) cap = kFloor;
    __int128 acc = 0;
    bool saturated = false;
    for (size_t i = coeffs_.size(); i-- > 0;) {
        acc = acc * x + coeffs_[i];
        if (acc > cap) { acc = cap + 1; saturated = true; }
        if (acc < -cap) { acc = -cap - 1; saturated = true; }
    }
    if (saturated) return acc < 0 ? -limit - 1 : limit + 1;
    if (acc > limit) return limit + 1;
    if (acc < -limit) return -limit - 1;
    return acc;
}

IntPolynomial IntPolynomial::derivative() const {
    if (coeffs_.size() <= 1) return IntPolynomial();
    std::vector<int64_t> d(coeffs_.size() - 1);
    for (size_t i = 1; i < coeffs_.size(); ++i) {
        __int128 v = (__int128)coeffs_[i] * (int64_t)i;
        if (v > INT64_MAX || v < INT64_MIN) throw verdict_error("derivative coefficient overflow");
        d[i - 1] = (int64_t)v;
    }
    return IntPolynomial(std::move(d));
}

IntPolynomial IntPolynomial::shifted(int64_t k) const {
    // Horner in the polynomial ring: acc <- acc*(x+k) + c_i
    std::vector<int64_t> acc;
    auto narrow = [](__int128 v) {
        if (v > INT64_MAX || v < INT64_MIN) throw verdict_error("shift overflow");
        return (int64_t)v;
    };
    for (size_t i = coeffs_.size(); i-- > 0;) {
        std::vector<int64_t> next(acc.size() + 1, 0);
        for (size_t j = 0; j < acc.size(); ++j) {
            next[j + 1] = narrow((__int128)next[j + 1] + acc[j]);
            next[j] = narrow((__int128)next[j] + (__int128)acc[j] * k);
        }
        next[0] = narrow((__int128)next[0] + coeffs_[i]);
        acc = std::move(next);
    }
    return IntPolynomial(std::move(acc));
}

IntPolynomial IntPolynomial::negated() const {
    std::vector<int64_t> c(coeffs_);
    for (auto& v : c) v = -v;
    return IntPolynomial(std::move(c));
}

std::string IntPolynomial::toString(char variable) const {
    if (coeffs_.empty()) return "0";
    std::string out;
    for (size_t i = coeffs_.size(); i-- > 0;) {
        int64_t c = coeffs_[i];
        if (c == 0) continue;
        bool first = out.empty();
        if (first) {
            if (c < 0) out += "-";
        } else {
            out += c < 0 ? " - " : " + ";
        }
        uint64_t mag = c < 0 ? (uint64_t)(-(c + 1)) + 1 : (uint64_t)c;
        if (i == 0) {
            out += std::to_string(mag);
        } else {
            if (mag != 1) {
                out += std::to_string(mag);
                out += "*";
            }
            out += variable;
            if (i > 1) {
                out += "^";
                out += std::to_string(i);
            }
        }
    }
    if (out.empty()) out = "0";
    return out;
}

namespace {

struct Parser {
    const std::string& s;
    size_t pos = 0;

    explicit Parser(const std::string& text) : s(text) {}

    void skipWs() {
        while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw input_error("polynomial syntax error at position " + std::to_string(pos) + ": " + what);
    }
    bool atVar() {
        return pos < s.size() && (s[pos] == 'm' || s[pos] == 'x');
    }
    uint64_t parseUInt() {
        skipWs();
        if (pos >= s.size() || !std::isdigit((unsigned char)s[pos])) fail("expected integer");
        uint64_t v = 0;
        size_t start = pos;
        while (pos < s.size() && std::isdigit((unsigned char)s[pos])) {
            v = v * 10 + (uint64_t)(s[pos] - '0');
            if (v > (uint64_t)INT64_MAX) { pos = start; fail("integer too large"); }
            ++pos;
        }
        if (pos < s.size() && s[pos] == '.') fail("non-integer coefficient");
        return v;
    }

    // term := int ['*' varpow] | varpow ; varpow := var ['^' int]
    void parseTerm(int sign, std::vector<int64_t>& acc) {
        skipWs();
        int64_t coef = 1;
        bool sawCoef = false;
        if (pos < s.size() && std::isdigit((unsigned char)s[pos])) {
            uint64_t v = parseUInt();
            coef = (int64_t)v;
            sawCoef = true;
            skipWs();
            if (pos < s.size() && s[pos] == '*') {
                ++pos;
                skipWs();
                if (!atVar()) fail("expected variable after '*'");
            } else if (atVar()) {
                fail("missing '*' between coefficient and variable");
            } else {
                // pure constant term
                add(acc, 0, sign * coef);
                return;
            }
        }
        if (!atVar()) {
            if (sawCoef) fail("expected variable");
            fail("expected term");
        }
        ++pos;  // consume variable
        uint64_t exp = 1;
        skipWs();
        if (pos < s.size() && s[pos] == '^') {
            ++pos;
            skipWs();
            if (pos < s.size() && s[pos] == '(') fail("parenthesized exponents unsupported");
            exp = parseUInt();
            if (exp > 64) fail("exponent too large");
        }
        add(acc, (size_t)exp, sign * coef);
    }

    static void add(std::vector<int64_t>& acc, size_t deg, int64_t c) {
        if (acc.size() <= deg) acc.resize(deg + 1, 0);
        __int128 v = (__int128)acc[deg] + c;
        if (v > INT64_MAX || v < INT64_MIN)
            throw input_error("polynomial coefficient overflow");
        acc[deg] = (int64_t)v;
    }

    IntPolynomial parse() {
        std::vector<int64_t> acc;
        skipWs();
        if (pos >= s.size()) fail("empty polynomial");
        int sign = 1;
        if (s[pos] == '+' || s[pos] == '-') {
            sign = s[pos] == '-' ? -1 : 1;
            ++pos;
        }
        parseTerm(sign, acc);
        while (true) {
            skipWs();
            if (pos >= s.size()) break;
            if (s[pos] == '+') sign = 1;
            else if (s[pos] == '-') sign = -1;
            else fail("expected '+' or '-'");
            ++pos;
            parseTerm(sign, acc);
        }
        return IntPolynomial(std::move(acc));
    }
};

}  // namespace

IntPolynomial IntPolynomial::parse(const std::string& text) {
    Parser p(text);
    return p.parse();
}

}  // namespace toeplitz
