#include "flowerlab/germ.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <sstream>

namespace flowerlab {

namespace {

std::string point_str(const ComplexPoint& x) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ", ";
        os << x[i].real() << (x[i].imag() < 0 ? "-" : "+") << std::abs(x[i].imag()) << "i";
    }
    os << ")";
    return os.str();
}

} // namespace

Germ make_germ(std::int32_t n, MultiIndex M, ComplexPoint a, std::vector<Poly> A,
               std::int32_t truncation_degree, double trusted_radius) {
    if (n < 1) throw DegenerateGerm("make_germ: n must be >= 1");
    if (M.size() != std::size_t(n) || a.size() != std::size_t(n) || A.size() != std::size_t(n))
        throw DegenerateGerm("make_germ: M, a, A must all have length n");
    bool any = false;
    for (auto e : M) {
        if (e < 0) throw DegenerateGerm("make_germ: M entries must be non-negative");
        if (e > 0) any = true;
    }
    if (!any) throw DegenerateGerm("make_germ: M must not be identically zero");
    for (const auto& ai : a)
        if (ai == Complex(0.0)) throw DegenerateGerm("make_germ: a_i must be nonzero");
    for (const auto& Ai : A) {
        if (Ai.n != n) throw DegenerateGerm("make_germ: A_i arity mismatch");
        for (const auto& [e, c] : Ai.terms)
            if (total_degree(e) == 0 && c != Complex(0.0))
                throw DegenerateGerm("make_germ: A_i must vanish at the origin");
        if (Ai.degree() > truncation_degree)
            throw DegenerateGerm("make_germ: A_i exceeds the stated truncation degree");
    }
    if (!(trusted_radius > 0.0))
        throw DegenerateGerm("make_germ: trusted_radius must be positive");
    return Germ{n, std::move(M), std::move(a), std::move(A), truncation_degree, trusted_radius};
}

NormalizeResult normalize(const Germ& g) {
    Complex s = pairing(g.a, g.M);
    if (s == Complex(0.0)) throw DegenerateGerm("normalize: <a,M> = 0 is non-normalizable");
    Complex factor = -1.0 / s;  // = alpha^M

    std::size_t k = 0;
    while (g.M[k] == 0) ++k;  // exists: M is not identically zero

    ComplexPoint alpha(std::size_t(g.n), Complex(1.0));
    alpha[k] = std::pow(factor, 1.0 / double(g.M[k]));  // principal root

    ComplexPoint a_new(g.a.size());
    for (std::size_t i = 0; i < g.a.size(); ++i) a_new[i] = g.a[i] * factor;

    // A_i(x) -> alpha^M * A_i(alpha * x): the same factor that rescales a_i.
    std::vector<Poly> A_new;
    A_new.reserve(g.A.size());
    for (const auto& Ai : g.A)
        A_new.push_back(poly_scale(poly_diagonal_scale(Ai, alpha), factor));

    Germ out = make_germ(g.n, g.M, std::move(a_new), std::move(A_new),
                         g.truncation_degree, g.trusted_radius);
    return {std::move(out), std::move(alpha)};
}

bool is_normalized(const Germ& g, double tol) {
    return std::abs(pairing(g.a, g.M) + 1.0) <= tol;
}

ComplexPoint evaluate(const Germ& g, const ComplexPoint& x) {
    ComplexPoint out(x.size());
    evaluate_into(g, x, out);
    return out;
}

void evaluate_into(const Germ& g, const ComplexPoint& x, ComplexPoint& out) {
    out.resize(x.size());
    Complex p = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) p *= int_power(x[i], g.M[i]);
    for (std::size_t i = 0; i < x.size(); ++i) {
        Complex c = g.a[i];
        if (!g.A[i].empty()) c += poly_eval(g.A[i], x);
        out[i] = x[i] * (1.0 + p * c);
    }
}

void evaluate_with_increments_into(const Germ& g, const ComplexPoint& x,
                                   std::vector<Complex>& h_out, ComplexPoint& out) {
    h_out.resize(x.size());
    out.resize(x.size());
    Complex p = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) p *= int_power(x[i], g.M[i]);
    for (std::size_t i = 0; i < x.size(); ++i) {
        Complex c = g.a[i];
        if (!g.A[i].empty()) c += poly_eval(g.A[i], x);
        h_out[i] = p * c;
        out[i] = x[i] * (1.0 + h_out[i]);
    }
}

ComplexPoint evaluate_with_increments(const Germ& g, const ComplexPoint& x,
                                      std::vector<Complex>& h_out) {
    ComplexPoint out;
    evaluate_with_increments_into(g, x, h_out, out);
    return out;
}

std::vector<cplx<dd>> evaluate_dd(const Germ& g, const std::vector<cplx<dd>>& x) {
    std::vector<cplx<dd>> out(x.size());
    cplx<dd> p{dd(1.0), dd(0.0)};
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::int64_t k = 0; k < g.M[i]; ++k) p = p * x[i];
    cplx<dd> one{dd(1.0), dd(0.0)};
    for (std::size_t i = 0; i < x.size(); ++i) {
        cplx<dd> c{dd(g.a[i].real()), dd(g.a[i].imag())};
        if (!g.A[i].empty()) c = c + poly_eval(g.A[i], x);
        out[i] = x[i] * (one + p * c);
    }
    return out;
}

namespace {

// d(x^M)/dx_j handling zero coordinates exactly.
Complex monomial_partial(const ComplexPoint& x, const MultiIndex& M, std::size_t j) {
    if (M[j] == 0) return 0.0;
    Complex p = double(M[j]);
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::int64_t e = (i == j) ? M[i] - 1 : M[i];
        p *= int_power(x[i], e);
    }
    return p;
}

Eigen::MatrixXcd jacobian(const Germ& g, const ComplexPoint& x) {
    const auto n = std::size_t(g.n);
    Eigen::MatrixXcd J(n, n);
    Complex p = 1.0;
    for (std::size_t i = 0; i < n; ++i) p *= int_power(x[i], g.M[i]);
    for (std::size_t i = 0; i < n; ++i) {
        Complex ci = g.a[i] + (g.A[i].empty() ? Complex(0.0) : poly_eval(g.A[i], x));
        for (std::size_t j = 0; j < n; ++j) {
            Complex v = (i == j) ? Complex(1.0) + p * ci : Complex(0.0);
            v += x[i] * monomial_partial(x, g.M, j) * ci;
            if (!g.A[i].empty())
                v += x[i] * p * poly_eval(poly_derivative(g.A[i], std::int32_t(j)), x);
            J(Eigen::Index(i), Eigen::Index(j)) = v;
        }
    }
    return J;
}

double residual_norm(const Germ& g, const ComplexPoint& x, const ComplexPoint& y,
                     ComplexPoint& fx) {
    evaluate_into(g, x, fx);
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r = std::max(r, std::abs(fx[i] - y[i]));
    return r;
}

} // namespace

ComplexPoint evaluate_inverse(const Germ& g, const ComplexPoint& y, double tol, int max_iter) {
    const auto n = std::size_t(g.n);
    ComplexPoint x = y, fx(n), cand(n);
    double res = residual_norm(g, x, y, fx);
    int it = 0;

    // Fixed point x_i <- y_i / (1 + x^M (a_i + A_i(x))): contraction rate O(|x^M|).
    for (; it < max_iter && res > tol; ++it) {
        Complex p = 1.0;
        for (std::size_t i = 0; i < n; ++i) p *= int_power(x[i], g.M[i]);
        bool bad = false;
        for (std::size_t i = 0; i < n; ++i) {
            Complex den = 1.0 + p * (g.a[i] + (g.A[i].empty() ? Complex(0.0)
                                                              : poly_eval(g.A[i], x)));
            if (std::abs(den) < 0.25) { bad = true; break; }
            cand[i] = y[i] / den;
        }
        if (bad) break;
        double new_res = residual_norm(g, cand, y, fx);
        if (!(new_res < res)) break;  // stalled; hand over to Newton
        x.swap(cand);
        res = new_res;
    }
    if (res <= tol) return x;

    // Newton with the analytic Jacobian, step-halving on non-decrease.
    for (; it < max_iter && res > tol; ++it) {
        evaluate_into(g, x, fx);
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(Eigen::Index(n));
        for (std::size_t i = 0; i < n; ++i) rhs(Eigen::Index(i)) = y[i] - fx[i];
        Eigen::VectorXcd step = jacobian(g, x).partialPivLu().solve(rhs);
        double damp = 1.0;
        bool accepted = false;
        for (int h = 0; h < 6; ++h) {
            for (std::size_t i = 0; i < n; ++i) cand[i] = x[i] + damp * step(Eigen::Index(i));
            double new_res = residual_norm(g, cand, y, fx);
            if (new_res < res) {
                x.swap(cand);
                res = new_res;
                accepted = true;
                break;
            }
            damp *= 0.5;
        }
        if (!accepted) break;
    }
    if (res <= tol) return x;
    throw NoConvergence("evaluate_inverse: no convergence at y = " + point_str(y), res);
}

Complex power_image(const Germ& g, const ComplexPoint& x, const MultiIndex& e) {
    return monomial(evaluate(g, x), e);
}

ComplexPoint infinitesimal_generator(const Germ& g, const ComplexPoint& x) {
    Complex p = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) p *= int_power(x[i], g.M[i]);
    ComplexPoint out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = p * g.a[i] * x[i];
    return out;
}

OrbitRecord orbit(const Germ& g, const ComplexPoint& start, std::int64_t j_max,
                  double escape_radius,
                  const std::function<bool(const ComplexPoint&)>& capture_test) {
    OrbitRecord rec;
    rec.points.reserve(std::size_t(std::min<std::int64_t>(j_max + 1, 1 << 20)));
    rec.points.push_back(start);
    ComplexPoint cur = start, next(start.size());
    for (std::int64_t j = 0; j <= j_max; ++j) {
        if (sup_norm(cur) > escape_radius) {
            rec.escape_index = j;
            break;
        }
        if (capture_test && !rec.capture_index && capture_test(cur)) rec.capture_index = j;
        if (j == j_max) break;
        evaluate_into(g, cur, next);
        cur.swap(next);
        rec.points.push_back(cur);
    }
    return rec;
}

ComplexPoint mirror_scaling(const Germ& g) {
    std::size_t k = 0;
    while (g.M[k] == 0) ++k;
    ComplexPoint v(std::size_t(g.n), Complex(1.0));
    v[k] = std::polar(1.0, std::numbers::pi / double(g.M[k]));
    return v;
}

Germ inverse_germ_series(const Germ& g, std::int32_t degree, double trusted_radius_factor) {
    const auto n = std::size_t(g.n);
    const std::int32_t q = [&] {
        std::int32_t s = 0;
        for (auto e : g.M) s += std::int32_t(e);
        return s;
    }();
    const std::int32_t D =
        degree >= 0 ? degree
                    : std::min<std::int32_t>(10, std::max(g.truncation_degree, 2 * q + 1));
    ComplexPoint v = mirror_scaling(g);

    Expo zero_e(n, 0);
    Poly one{std::int32_t(n), {{zero_e, Complex(1.0)}}};
    Poly xM{std::int32_t(n), {{[&] {
                                   Expo e(n, 0);
                                   for (std::size_t i = 0; i < n; ++i)
                                       e[i] = std::int32_t(g.M[i]);
                                   return e;
                               }(),
                               Complex(1.0)}}};

    // Unknowns: Ahat_i with h_i = x_i (1 + x^M (a_i + Ahat_i)). The condition
    // f(L h(x)) = L x reduces to Ahat_i = W_i * sum_k (x^M W_i)^k - a_i with
    //   W_i = (a_i + A_i(L h)) * prod_j (1 + x^M (a_j + Ahat_j))^{M_j},
    // where h^M = x^M * prod_j (...)^{M_j} was divided out exactly. Each pass
    // gains q degrees of accuracy, so ceil(D/q)+1 passes settle all of them.
    std::vector<Poly> Ahat(n, Poly::zero(std::int32_t(n)));
    const int passes = int(D / std::max(q, 1)) + 2;
    for (int pass = 0; pass < passes; ++pass) {
        // unit_j = 1 + x^M (a_j + Ahat_j), and the product of their M_j powers
        std::vector<Poly> unit(n);
        Poly prod_units = one;
        for (std::size_t j = 0; j < n; ++j) {
            Poly aj{std::int32_t(n), {{zero_e, g.a[j]}}};
            unit[j] = poly_add(one, poly_mul(xM, poly_add(aj, Ahat[j]), D + std::int32_t(q)));
            for (std::int64_t k = 0; k < g.M[j]; ++k)
                prod_units = poly_mul(prod_units, unit[j], D + std::int32_t(q));
        }
        // args for A_i composition: (L h)_j = v_j x_j unit_j
        std::vector<Poly> args(n);
        for (std::size_t j = 0; j < n; ++j) {
            Expo ej(n, 0);
            ej[j] = 1;
            Poly xj{std::int32_t(n), {{ej, v[j]}}};
            args[j] = poly_mul(xj, unit[j], D);
        }
        std::vector<Poly> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            Poly ai{std::int32_t(n), {{zero_e, g.a[i]}}};
            Poly Ai_comp = g.A[i].empty() ? Poly::zero(std::int32_t(n))
                                          : poly_compose(g.A[i], args, D);
            Poly W = poly_mul(poly_add(ai, Ai_comp), prod_units, D);
            // geometric tail: W * (1 + xM W + (xM W)^2 + ...)
            Poly xMW = poly_mul(xM, W, D);
            Poly geo = one, pw = one;
            for (std::int32_t k = q; k <= D; k += std::max(q, 1)) {
                pw = poly_mul(pw, xMW, D);
                geo = poly_add(geo, pw);
            }
            next[i] = poly_truncate(poly_add(poly_mul(W, geo, D), poly_scale(ai, -1.0)), D);
        }
        Ahat = std::move(next);
    }

    return make_germ(g.n, g.M, g.a, std::move(Ahat), std::max(D, g.truncation_degree),
                     g.trusted_radius * trusted_radius_factor);
}

} // namespace flowerlab
