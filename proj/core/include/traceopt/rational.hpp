#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "traceopt/errors.hpp"

namespace traceopt {

/// Exact rational scalar used for symbolic assembly and certificate checks.
using Rational = mpq_class;

inline double to_double(const Rational& q) { return q.get_d(); }

inline Rational rational_from_string(const std::string& s) {
    Rational q;
    if (q.set_str(s, 10) != 0) throw InputError("invalid rational literal: " + s);
    q.canonicalize();
    return q;
}

/// Nearest rational to `x` with denominator at most `max_den`,
/// via the continued-fraction convergent/semiconvergent construction.
Rational rationalize(double x, std::uint64_t max_den = 1000000);

/// Conversion from Rational into an evaluation field.
template <class K>
K from_rational(const Rational& q);

template <>
inline double from_rational<double>(const Rational& q) { return q.get_d(); }

template <>
inline Rational from_rational<Rational>(const Rational& q) { return q; }

/// Scalar equality helper: exact for exact fields, relative tolerance for double.
inline bool scalar_close(const Rational& a, const Rational& b, double) { return a == b; }
inline bool scalar_close(double a, double b, double tol) {
    double scale = 1.0 + std::abs(a) + std::abs(b);
    return std::abs(a - b) <= tol * scale;
}

/// Elements a + b*sqrt(D) of the real quadratic field Q(sqrt(D)), D a positive
/// non-square integer. Supports the exact evaluation of polynomials at matrix
/// tuples whose entries involve a single square root.
template <long long D>
struct QuadExt {
    static_assert(D > 1, "QuadExt requires a positive non-square radicand");
    Rational a; // rational part
    Rational b; // coefficient of sqrt(D)

    QuadExt() : a(0), b(0) {}
    QuadExt(const Rational& a_) : a(a_), b(0) {}
    QuadExt(const Rational& a_, const Rational& b_) : a(a_), b(b_) {}
    QuadExt(int v) : a(v), b(0) {}

    static QuadExt sqrt_d() { return QuadExt(Rational(0), Rational(1)); }

    friend QuadExt operator+(const QuadExt& x, const QuadExt& y) {
        return QuadExt(x.a + y.a, x.b + y.b);
    }
    friend QuadExt operator-(const QuadExt& x, const QuadExt& y) {
        return QuadExt(x.a - y.a, x.b - y.b);
    }
    friend QuadExt operator-(const QuadExt& x) { return QuadExt(-x.a, -x.b); }
    friend QuadExt operator*(const QuadExt& x, const QuadExt& y) {
        return QuadExt(x.a * y.a + Rational(static_cast<long>(D)) * x.b * y.b, x.a * y.b + x.b * y.a);
    }
    QuadExt& operator+=(const QuadExt& o) { a += o.a; b += o.b; return *this; }
    QuadExt& operator-=(const QuadExt& o) { a -= o.a; b -= o.b; return *this; }
    QuadExt& operator*=(const QuadExt& o) { *this = *this * o; return *this; }

    QuadExt inverse() const {
        Rational n = a * a - Rational(static_cast<long>(D)) * b * b;
        if (n == 0) throw NumericalError("QuadExt: division by zero");
        return QuadExt(a / n, -b / n);
    }
    friend QuadExt operator/(const QuadExt& x, const QuadExt& y) { return x * y.inverse(); }

    friend bool operator==(const QuadExt& x, const QuadExt& y) { return x.a == y.a && x.b == y.b; }
    friend bool operator!=(const QuadExt& x, const QuadExt& y) { return !(x == y); }

    double to_double_approx() const { return a.get_d() + b.get_d() * std::sqrt(double(D)); }
};

template <long long D>
inline bool scalar_close(const QuadExt<D>& x, const QuadExt<D>& y, double) { return x == y; }

template <class K>
K from_rational(const Rational& q) {
    // Fallback used by QuadExt instantiations (primary template definition).
    return K(q);
}

/// Minimal dense matrix over an arbitrary exact or floating scalar field.
/// Deliberately tiny: just what symbolic evaluation and exact factorizations need.
template <class K>
class DenseMat {
public:
    DenseMat() : r_(0), c_(0) {}
    DenseMat(int rows, int cols) : r_(rows), c_(cols), data_(std::size_t(rows) * cols, K(0)) {}

    static DenseMat identity(int n) {
        DenseMat m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = K(1);
        return m;
    }

    int rows() const { return r_; }
    int cols() const { return c_; }

    K& at(int i, int j) { return data_[std::size_t(i) * c_ + j]; }
    const K& at(int i, int j) const { return data_[std::size_t(i) * c_ + j]; }

    DenseMat transpose() const {
        DenseMat t(c_, r_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) t.at(j, i) = at(i, j);
        return t;
    }

    bool is_symmetric(double tol = 0.0) const {
        if (r_ != c_) return false;
        for (int i = 0; i < r_; ++i)
            for (int j = i + 1; j < c_; ++j)
                if (!scalar_close(at(i, j), at(j, i), tol)) return false;
        return true;
    }

    friend DenseMat operator*(const DenseMat& x, const DenseMat& y) {
        if (x.c_ != y.r_) throw InputError("DenseMat: dimension mismatch in product");
        DenseMat z(x.r_, y.c_);
        for (int i = 0; i < x.r_; ++i)
            for (int k = 0; k < x.c_; ++k) {
                const K& v = x.at(i, k);
                if (v == K(0)) continue;
                for (int j = 0; j < y.c_; ++j) z.at(i, j) += v * y.at(k, j);
            }
        return z;
    }
    friend DenseMat operator+(const DenseMat& x, const DenseMat& y) {
        if (x.r_ != y.r_ || x.c_ != y.c_) throw InputError("DenseMat: dimension mismatch in sum");
        DenseMat z(x.r_, x.c_);
        for (std::size_t i = 0; i < x.data_.size(); ++i) z.data_[i] = x.data_[i] + y.data_[i];
        return z;
    }
    friend DenseMat operator-(const DenseMat& x, const DenseMat& y) {
        if (x.r_ != y.r_ || x.c_ != y.c_) throw InputError("DenseMat: dimension mismatch in difference");
        DenseMat z(x.r_, x.c_);
        for (std::size_t i = 0; i < x.data_.size(); ++i) z.data_[i] = x.data_[i] - y.data_[i];
        return z;
    }
    DenseMat scaled(const K& s) const {
        DenseMat z(r_, c_);
        for (std::size_t i = 0; i < data_.size(); ++i) z.data_[i] = data_[i] * s;
        return z;
    }

    /// Normalized trace: (1/k) * sum of diagonal entries, so the identity has trace 1.
    K normalized_trace() const {
        if (r_ != c_) throw InputError("DenseMat: trace of a non-square matrix");
        K acc(0);
        for (int i = 0; i < r_; ++i) acc += at(i, i);
        return acc * from_rational<K>(Rational(1, r_));
    }

    friend bool operator==(const DenseMat& x, const DenseMat& y) {
        return x.r_ == y.r_ && x.c_ == y.c_ && x.data_ == y.data_;
    }

private:
    int r_, c_;
    std::vector<K> data_;
};

} // namespace traceopt
