#pragma once

// Double-double arithmetic (~31 significant digits) for the long-orbit
// cross-checks, plus a small complex wrapper that works for both double
// and dd scalars. Only the handful of operations the orbit code needs.

#include <cmath>
#include <complex>

namespace flowerlab {

struct dd {
    double hi = 0.0;
    double lo = 0.0;

    dd() = default;
    dd(double h) : hi(h), lo(0.0) {}
    dd(double h, double l) : hi(h), lo(l) {}

    explicit operator double() const { return hi + lo; }
};

namespace detail {

inline dd two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

inline dd quick_two_sum(double a, double b) {
    // requires |a| >= |b|
    double s = a + b;
    return {s, b - (s - a)};
}

inline dd two_prod(double a, double b) {
    double p = a * b;
    double err = std::fma(a, b, -p);
    return {p, err};
}

} // namespace detail

inline dd operator+(dd a, dd b) {
    dd s = detail::two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return detail::quick_two_sum(s.hi, s.lo);
}

inline dd operator-(dd a) { return {-a.hi, -a.lo}; }
inline dd operator-(dd a, dd b) { return a + (-b); }

inline dd operator*(dd a, dd b) {
    dd p = detail::two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return detail::quick_two_sum(p.hi, p.lo);
}

inline dd operator/(dd a, dd b) {
    double q1 = a.hi / b.hi;
    dd r = a - dd(q1) * b;
    double q2 = r.hi / b.hi;
    r = r - dd(q2) * b;
    double q3 = r.hi / b.hi;
    dd q = detail::quick_two_sum(q1, q2);
    return q + dd(q3);
}

inline dd& operator+=(dd& a, dd b) { a = a + b; return a; }
inline dd& operator-=(dd& a, dd b) { a = a - b; return a; }
inline dd& operator*=(dd& a, dd b) { a = a * b; return a; }
inline dd& operator/=(dd& a, dd b) { a = a / b; return a; }

inline bool operator<(dd a, dd b)  { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); }
inline bool operator>(dd a, dd b)  { return b < a; }
inline bool operator==(dd a, dd b) { return a.hi == b.hi && a.lo == b.lo; }

inline dd fabs(dd a) { return a.hi < 0.0 || (a.hi == 0.0 && a.lo < 0.0) ? -a : a; }

inline dd sqrt(dd a) {
    // one Newton step on top of the double seed doubles the digits
    if (a.hi == 0.0) return {0.0, 0.0};
    double s = std::sqrt(a.hi);
    dd y(s);
    y = (y + a / y) * dd(0.5);
    return y;
}

inline double to_double(dd a) { return a.hi + a.lo; }
inline double to_double(double a) { return a; }

// Minimal complex value over a generic real scalar. std::complex<T> is only
// specified for the builtin floating types, so the dd orbits use this instead.
template <class R>
struct cplx {
    R re{};
    R im{};

    cplx() = default;
    cplx(R r) : re(r) {}
    cplx(R r, R i) : re(r), im(i) {}
};

template <class R> cplx<R> operator+(cplx<R> a, cplx<R> b) { return {a.re + b.re, a.im + b.im}; }
template <class R> cplx<R> operator-(cplx<R> a, cplx<R> b) { return {a.re - b.re, a.im - b.im}; }
template <class R> cplx<R> operator*(cplx<R> a, cplx<R> b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <class R> cplx<R> operator*(R s, cplx<R> a) { return {s * a.re, s * a.im}; }
template <class R> cplx<R> operator/(cplx<R> a, cplx<R> b) {
    R den = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}
template <class R> R norm2(cplx<R> a) { return a.re * a.re + a.im * a.im; }
template <class R> R abs(cplx<R> a) { using std::sqrt; using flowerlab::sqrt; return sqrt(norm2(a)); }

inline cplx<dd> widen(std::complex<double> z) { return {dd(z.real()), dd(z.imag())}; }
inline std::complex<double> narrow(cplx<dd> z) { return {to_double(z.re), to_double(z.im)}; }

} // namespace flowerlab
