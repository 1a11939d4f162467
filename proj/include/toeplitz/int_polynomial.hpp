#ifndef TOEPLITZ_INT_POLYNOMIAL_HPP
#define TOEPLITZ_INT_POLYNOMIAL_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace toeplitz {

/// Integer-coefficient polynomial, constant term first. The zero polynomial
/// has an empty coefficient vector and degree -1.
class IntPolynomial {
public:
    IntPolynomial() = default;
    explicit IntPolynomial(std::vector<int64_t> coefficients);

    static IntPolynomial monomial(int degree, int64_t coefficient = 1);
    /// Parses the CLI grammar: integer coefficients, variable m or x,
    /// operators + - * ^, integer exponents. Throws input_error with the
    /// offending position on bad syntax.
    static IntPolynomial parse(const std::string& text);

    const std::vector<int64_t>& coefficients() const { return coeffs_; }
    bool isZero() const { return coeffs_.empty(); }
    int degree() const { return (int)coeffs_.size() - 1; }
    /// |leading coefficient|; 0 for the zero polynomial.
    int64_t leadingMagnitude() const;

    /// P(x) mod n, Horner over 64-bit residues with 128-bit products.
    uint64_t evalMod(uint64_t x, uint64_t n) const;
    /// Exact P(x); throws verdict_error if the value leaves the int64 range.
    int64_t evalChecked(int64_t x) const;
    /// P(x) with saturation: exact while |P(x)| <= limit and every Horner
    /// partial stays below an internal overflow-safe cap (never smaller than
    /// 2^62); otherwise returns +/-(limit+1) with the sign of the true value.
    /// Never overflows; meant for threshold scans like "largest i with
    /// P(i) < bound" with bounds up to 2^62.
    __int128 evalClamped(int64_t x, __int128 limit) const;

    IntPolynomial derivative() const;
    IntPolynomial shifted(int64_t k) const;  // P(x+k), exact
    IntPolynomial negated() const;

    /// Canonical rendering, e.g. "3*m^3 - m + 7"; parse(toString()) round-trips.
    std::string toString(char variable = 'm') const;

    bool operator==(const IntPolynomial& o) const { return coeffs_ == o.coeffs_; }

private:
    std::vector<int64_t> coeffs_;
};

}  // namespace toeplitz

#endif
