#pragma once

// Germs tangent to the identity in the product form
//   f_i(x) = x_i * (1 + x^M * (a_i + A_i(x))),   x^M = prod_i x_i^{M_i},
// with a_i nonzero and A_i polynomial, A_i(0) = 0. The normalized form has
// <a,M> = -1; most of the library assumes it.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "flowerlab/dd.hpp"
#include "flowerlab/errors.hpp"
#include "flowerlab/point.hpp"
#include "flowerlab/poly.hpp"

namespace flowerlab {

struct Germ {
    std::int32_t n = 0;
    MultiIndex M;              // exponent vector, non-negative, not all zero
    ComplexPoint a;            // leading coefficients, all nonzero
    std::vector<Poly> A;       // higher-order terms, each with A_i(0) = 0
    std::int32_t truncation_degree = 0;
    double trusted_radius = 0.0;  // polydisc radius where the truncated A is trusted
};

// Validates the shape constraints and returns the germ. Throws DegenerateGerm.
Germ make_germ(std::int32_t n, MultiIndex M, ComplexPoint a, std::vector<Poly> A,
               std::int32_t truncation_degree, double trusted_radius);

inline Germ make_germ_plain(std::int32_t n, MultiIndex M, ComplexPoint a,
                            double trusted_radius = 1.0) {
    std::vector<Poly> A(std::size_t(n), Poly::zero(n));
    return make_germ(n, std::move(M), std::move(a), std::move(A), 0, trusted_radius);
}

inline Complex pairing(const ComplexPoint& a, const MultiIndex& e) {
    Complex s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) s += a[i] * double(e[i]);
    return s;
}

struct NormalizeResult {
    Germ germ;
    ComplexPoint alpha;  // diagonal linear change; alpha^M = -1/<a_old,M>
};

// Conjugate by x -> (alpha_1 x_1, ..., alpha_n x_n) so that <a,M> = -1.
// alpha is the identity except on the first coordinate carrying M_i >= 1,
// which gets the principal M_i-th root of -1/<a,M>.
NormalizeResult normalize(const Germ& g);

bool is_normalized(const Germ& g, double tol = 1e-12);

// One application of f. The generic-scalar version serves the double-double
// orbit cross-checks; the double version is the hot path.
ComplexPoint evaluate(const Germ& g, const ComplexPoint& x);
void evaluate_into(const Germ& g, const ComplexPoint& x, ComplexPoint& out);
std::vector<cplx<dd>> evaluate_dd(const Germ& g, const std::vector<cplx<dd>>& x);

// One f-step that also reports the relative increments h_i = x^M (a_i + A_i(x)),
// so orbit-product accumulations reuse the same evaluation instead of
// recomputing the monomial and the polynomials.
ComplexPoint evaluate_with_increments(const Germ& g, const ComplexPoint& x,
                                      std::vector<Complex>& h_out);

// Same, writing into caller storage so orbit loops stay allocation-free.
void evaluate_with_increments_into(const Germ& g, const ComplexPoint& x,
                                   std::vector<Complex>& h_out, ComplexPoint& out);

// Solve f(x) = y near y. Damped fixed-point iteration with a Newton fallback;
// the result satisfies |f(x) - y|_inf <= tol. Throws NoConvergence.
ComplexPoint evaluate_inverse(const Germ& g, const ComplexPoint& y, double tol = 1e-12,
                              int max_iter = 64);

// prod_i f_i(x)^{e_i} for an integer exponent vector (negative entries allowed).
Complex power_image(const Germ& g, const ComplexPoint& x, const MultiIndex& e);

// Components of the formal vector field X = x^M (a_1 x_1, ..., a_n x_n).
ComplexPoint infinitesimal_generator(const Germ& g, const ComplexPoint& x);

struct OrbitRecord {
    std::vector<ComplexPoint> points;              // points[0] is the start
    std::optional<std::int64_t> escape_index;      // first j with sup-norm > escape_radius
    std::optional<std::int64_t> capture_index;     // first j with capture_test true
};

// Iterate f up to j_max times, recording every point. Stops early when the
// sup-norm exceeds escape_radius. capture_test, when supplied, is evaluated
// until it first returns true; iteration continues afterwards.
OrbitRecord orbit(const Germ& g, const ComplexPoint& start, std::int64_t j_max,
                  double escape_radius,
                  const std::function<bool(const ComplexPoint&)>& capture_test = nullptr);

// Diagonal scaling L with L^M = -1: identity except exp(i*pi/M_k) on the first
// coordinate k carrying M_k >= 1. Conjugating the inverse map by L restores
// the normalized sign, which is how the backward petals reuse the machinery.
ComplexPoint mirror_scaling(const Germ& g);

// Truncated series for h = L^{-1} o f^{-1} o L, a germ with the same M and the
// same leading coefficients a. degree < 0 picks max(truncation_degree, 2|M|+1)
// capped at 10; trusted_radius_factor shrinks the trusted polydisc relative to
// g's. (A germ with A = 0 still has a nontrivial inverse series, hence the
// separate degree.)
Germ inverse_germ_series(const Germ& g, std::int32_t degree = -1,
                         double trusted_radius_factor = 0.5);

} // namespace flowerlab
