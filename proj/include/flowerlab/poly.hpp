#pragma once

// Dense-by-monomial truncated polynomials in n complex variables. Small n and
// low degrees only; everything is exact-as-written except the degree cap on
// products. Used for the higher-order terms of germs, for the coordinate
// substitution inside normalization, and for the inverse-germ series.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "flowerlab/dd.hpp"
#include "flowerlab/point.hpp"

namespace flowerlab {

using Expo = std::vector<std::int32_t>;

struct Poly {
    std::int32_t n = 0;
    // sorted by exponent vector (lexicographic); no duplicate keys, no zero coeffs
    std::vector<std::pair<Expo, Complex>> terms;

    static Poly zero(std::int32_t n) { return Poly{n, {}}; }

    bool empty() const { return terms.empty(); }

    std::int32_t degree() const {
        std::int32_t d = 0;
        for (const auto& [e, c] : terms) {
            std::int32_t s = 0;
            for (auto k : e) s += k;
            d = std::max(d, s);
        }
        return d;
    }
};

inline std::int32_t total_degree(const Expo& e) {
    std::int32_t s = 0;
    for (auto k : e) s += k;
    return s;
}

// Sort, merge duplicates, drop zeros.
inline Poly poly_normalize(std::int32_t n, std::vector<std::pair<Expo, Complex>> raw) {
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Poly p{n, {}};
    for (auto& [e, c] : raw) {
        if (!p.terms.empty() && p.terms.back().first == e) {
            p.terms.back().second += c;
        } else {
            p.terms.emplace_back(e, c);
        }
    }
    std::erase_if(p.terms, [](const auto& t) { return t.second == Complex(0.0); });
    return p;
}

inline Poly poly_add(const Poly& a, const Poly& b) {
    auto raw = a.terms;
    raw.insert(raw.end(), b.terms.begin(), b.terms.end());
    return poly_normalize(a.n, std::move(raw));
}

inline Poly poly_scale(const Poly& a, Complex s) {
    Poly p = a;
    for (auto& [e, c] : p.terms) c *= s;
    std::erase_if(p.terms, [](const auto& t) { return t.second == Complex(0.0); });
    return p;
}

// Product truncated to total degree <= maxdeg.
inline Poly poly_mul(const Poly& a, const Poly& b, std::int32_t maxdeg) {
    std::map<Expo, Complex> acc;
    for (const auto& [ea, ca] : a.terms) {
        std::int32_t da = total_degree(ea);
        for (const auto& [eb, cb] : b.terms) {
            if (da + total_degree(eb) > maxdeg) continue;
            Expo e(ea.size());
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            acc[e] += ca * cb;
        }
    }
    Poly p{a.n, {}};
    for (auto& [e, c] : acc)
        if (c != Complex(0.0)) p.terms.emplace_back(e, c);
    return p;
}

inline Poly poly_truncate(const Poly& a, std::int32_t maxdeg) {
    Poly p{a.n, {}};
    for (const auto& [e, c] : a.terms)
        if (total_degree(e) <= maxdeg) p.terms.emplace_back(e, c);
    return p;
}

// Substitute x_i -> alpha_i * x_i: coefficient c_E picks up alpha^E.
inline Poly poly_diagonal_scale(const Poly& a, const ComplexPoint& alpha) {
    Poly p = a;
    for (auto& [e, c] : p.terms) {
        for (std::size_t i = 0; i < e.size(); ++i) c *= int_power(alpha[i], e[i]);
    }
    std::erase_if(p.terms, [](const auto& t) { return t.second == Complex(0.0); });
    return p;
}

inline Poly poly_derivative(const Poly& a, std::int32_t var) {
    Poly p{a.n, {}};
    for (const auto& [e, c] : a.terms) {
        if (e[var] == 0) continue;
        Expo d = e;
        d[var] -= 1;
        p.terms.emplace_back(d, c * double(e[var]));
    }
    return poly_normalize(a.n, std::move(p.terms));
}

template <class R>
cplx<R> poly_eval(const Poly& a, const std::vector<cplx<R>>& x) {
    cplx<R> s{};
    for (const auto& [e, c] : a.terms) {
        cplx<R> t{R(c.real()), R(c.imag())};
        for (std::size_t i = 0; i < e.size(); ++i)
            for (std::int32_t k = 0; k < e[i]; ++k) t = t * x[i];
        s = s + t;
    }
    return s;
}

inline Complex poly_eval(const Poly& a, const ComplexPoint& x) {
    Complex s = 0.0;
    for (const auto& [e, c] : a.terms) {
        Complex t = c;
        for (std::size_t i = 0; i < e.size(); ++i) t *= int_power(x[i], e[i]);
        s += t;
    }
    return s;
}

// Evaluate with polynomial arguments (composition), truncated to maxdeg.
// args[i] substitutes for variable i.
inline Poly poly_compose(const Poly& a, const std::vector<Poly>& args, std::int32_t maxdeg) {
    std::int32_t n = args.empty() ? a.n : args[0].n;
    Poly s = Poly::zero(n);
    for (const auto& [e, c] : a.terms) {
        Poly t{n, {{Expo(std::size_t(n), 0), c}}};
        for (std::size_t i = 0; i < e.size(); ++i)
            for (std::int32_t k = 0; k < e[i]; ++k) t = poly_mul(t, args[i], maxdeg);
        s = poly_add(s, t);
    }
    return s;
}

} // namespace flowerlab
