#pragma once

// Exact rationals that stay on the stack while numerator and denominator fit
// in 64 bits and fall back to GMP otherwise. Poisson coefficients are almost
// always tiny, and a heap allocation per coefficient dominated run time.

#include <cstdint>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace operadkit {

class Rational {
public:
    Rational() = default;
    Rational(int v) : n_(v) {}
    Rational(long v) : n_(v) {}
    Rational(long long v) : n_(v) {}
    Rational(std::int64_t n, std::int64_t d)
    {
        if (d == 0)
            throw std::domain_error("zero denominator");
        set_small_or_big(static_cast<__int128>(n), static_cast<__int128>(d));
    }
    explicit Rational(const mpq_class& q) { assign(q); }
    explicit Rational(const mpz_class& z) { assign(mpq_class(z)); }

    Rational(const Rational& o) : n_(o.n_), d_(o.d_), big_(o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr) {}
    Rational(Rational&&) noexcept = default;
    Rational& operator=(const Rational& o)
    {
        if (this != &o) {
            n_ = o.n_;
            d_ = o.d_;
            big_ = o.big_ ? std::make_unique<mpq_class>(*o.big_) : nullptr;
        }
        return *this;
    }
    Rational& operator=(Rational&&) noexcept = default;

    static Rational parse(const std::string& s)
    {
        mpq_class q(s);
        q.canonicalize();
        return Rational(q);
    }

    bool is_big() const { return big_ != nullptr; }
    int sign() const { return big_ ? sgn(*big_) : (n_ > 0) - (n_ < 0); }
    bool is_zero() const { return sign() == 0; }
    bool is_integer() const { return big_ ? big_->get_den() == 1 : d_ == 1; }

    mpq_class to_mpq() const
    {
        if (big_)
            return *big_;
        mpq_class q(mpz_from(n_), mpz_from(d_));
        q.canonicalize();
        return q;
    }
    mpz_class numerator() const { return big_ ? mpz_class(big_->get_num()) : mpz_from(n_); }
    mpz_class denominator() const { return big_ ? mpz_class(big_->get_den()) : mpz_from(d_); }
    std::string str() const { return big_ ? big_->get_str() : (d_ == 1 ? std::to_string(n_) : std::to_string(n_) + "/" + std::to_string(d_)); }

    Rational operator-() const
    {
        if (big_ || n_ == INT64_MIN)
            return Rational(mpq_class(-to_mpq()));
        Rational r;
        r.n_ = -n_;
        r.d_ = d_;
        return r;
    }

    friend Rational operator+(const Rational& a, const Rational& b)
    {
        if (!a.big_ && !b.big_) {
            if (a.d_ == 1 && b.d_ == 1) {
                std::int64_t s;
                if (!__builtin_add_overflow(a.n_, b.n_, &s))
                    return Rational(s);
            }
            __int128 n = static_cast<__int128>(a.n_) * b.d_ + static_cast<__int128>(b.n_) * a.d_;
            __int128 d = static_cast<__int128>(a.d_) * b.d_;
            if (fits_128(a, b)) {
                Rational r;
                r.set_small_or_big(n, d);
                return r;
            }
        }
        return Rational(mpq_class(a.to_mpq() + b.to_mpq()));
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b)
    {
        if (!a.big_ && !b.big_) {
            if (a.d_ == 1 && b.d_ == 1) {
                std::int64_t p;
                if (!__builtin_mul_overflow(a.n_, b.n_, &p))
                    return Rational(p);
            } else if (fits_128(a, b)) {
                Rational r;
                r.set_small_or_big(static_cast<__int128>(a.n_) * b.n_, static_cast<__int128>(a.d_) * b.d_);
                return r;
            }
        }
        return Rational(mpq_class(a.to_mpq() * b.to_mpq()));
    }
    friend Rational operator/(const Rational& a, const Rational& b)
    {
        if (b.is_zero())
            throw std::domain_error("division by zero");
        return Rational(mpq_class(a.to_mpq() / b.to_mpq()));
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    friend bool operator==(const Rational& a, const Rational& b)
    {
        if (!a.big_ && !b.big_)
            return a.n_ == b.n_ && a.d_ == b.d_;
        return a.to_mpq() == b.to_mpq();
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) { return a.to_mpq() < b.to_mpq(); }

    friend Rational abs(const Rational& a) { return a.sign() < 0 ? -a : a; }
    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    std::int64_t n_ = 0;
    std::int64_t d_ = 1;
    std::unique_ptr<mpq_class> big_;

    static mpz_class mpz_from(std::int64_t v)
    {
        mpz_class z;
        // mpz_import reads magnitude only
        std::uint64_t mag = v < 0 ? 0 - static_cast<std::uint64_t>(v) : static_cast<std::uint64_t>(v);
        mpz_import(z.get_mpz_t(), 1, 1, sizeof(mag), 0, 0, &mag);
        if (v < 0)
            z = -z;
        return z;
    }

    static bool fits_128(const Rational& a, const Rational& b)
    {
        auto small = [](std::int64_t x) { return x > -(std::int64_t(1) << 62) && x < (std::int64_t(1) << 62); };
        return small(a.n_) && small(a.d_) && small(b.n_) && small(b.d_);
    }

    static __int128 gcd128(__int128 a, __int128 b)
    {
        if (a < 0)
            a = -a;
        if (b < 0)
            b = -b;
        while (b) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    void set_small_or_big(__int128 n, __int128 d)
    {
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 g = gcd128(n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        if (n == 0)
            d = 1;
        if (n >= INT64_MIN && n <= INT64_MAX && d <= INT64_MAX) {
            n_ = static_cast<std::int64_t>(n);
            d_ = static_cast<std::int64_t>(d);
            big_.reset();
            return;
        }
        // |n|, d < 2^126 here; split into two 63-bit halves
        auto to_mpz = [](__int128 v) {
            bool neg = v < 0;
            unsigned __int128 m = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
            std::uint64_t words[2] = {static_cast<std::uint64_t>(m >> 64), static_cast<std::uint64_t>(m)};
            mpz_class z;
            mpz_import(z.get_mpz_t(), 2, 1, sizeof(std::uint64_t), 0, 0, words);
            return neg ? mpz_class(-z) : z;
        };
        assign(mpq_class(to_mpz(n), to_mpz(d)));
    }

    void assign(mpq_class q)
    {
        q.canonicalize();
        if (q.get_num().fits_slong_p() && q.get_den().fits_slong_p()) {
            n_ = q.get_num().get_si();
            d_ = q.get_den().get_si();
            big_.reset();
        } else {
            n_ = 0;
            d_ = 1;
            big_ = std::make_unique<mpq_class>(std::move(q));
        }
    }
};

} // namespace operadkit
