#ifndef TOEPLITZ_RATIONAL_HPP
#define TOEPLITZ_RATIONAL_HPP

#include <cstdint>
#include <numeric>
#include <string>

#include "toeplitz/errors.hpp"

namespace toeplitz {

/// Exact rational on int64 with checked narrowing. Denominator always positive,
/// gcd-reduced. Intermediates run through __int128, so products of any two
/// in-range rationals reduce safely.
class Rational {
public:
    Rational() = default;
    Rational(int64_t value) : num_(value), den_(1) {}  // NOLINT: implicit by design
    Rational(int64_t num, int64_t den) { assign(num, den); }

    static Rational fromWide(__int128 num, __int128 den);

    int64_t num() const { return num_; }
    int64_t den() const { return den_; }

    Rational operator-() const { return Rational(-num_, den_); }
    Rational operator+(const Rational& o) const {
        return fromWide((__int128)num_ * o.den_ + (__int128)o.num_ * den_, (__int128)den_ * o.den_);
    }
    Rational operator-(const Rational& o) const { return *this + (-o); }
    Rational operator*(const Rational& o) const {
        return fromWide((__int128)num_ * o.num_, (__int128)den_ * o.den_);
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw input_error("rational division by zero");
        return fromWide((__int128)num_ * o.den_, (__int128)den_ * o.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const {
        return (__int128)num_ * o.den_ < (__int128)o.num_ * den_;
    }
    bool operator<=(const Rational& o) const { return !(o < *this); }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return !(*this < o); }

    Rational abs() const { return num_ < 0 ? -*this : *this; }
    double toDouble() const { return (double)num_ / (double)den_; }

    /// "p/q", denominator always printed so CSV cells parse uniformly.
    std::string toString() const {
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    void assign(int64_t num, int64_t den) {
        if (den == 0) throw input_error("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        num_ = num;
        den_ = den;
    }

    int64_t num_ = 0;
    int64_t den_ = 1;
};

inline Rational Rational::fromWide(__int128 num, __int128 den) {
    if (den == 0) throw input_error("rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    __int128 a = num < 0 ? -num : num;
    __int128 b = den;
    while (b != 0) { __int128 t = a % b; a = b; b = t; }
    if (a > 1) { num /= a; den /= a; }
    constexpr __int128 lim = INT64_MAX;
    if (num > lim || num < -lim || den > lim)
        throw verdict_error("rational overflow after reduction");
    Rational r;
    r.num_ = (int64_t)num;
    r.den_ = (int64_t)den;
    return r;
}

}  // namespace toeplitz

#endif
