#pragma once

// Orbit-product invariants on a petal. For an integer vector I the weight
//   g_I(x) = x^I (x^m)^{lambda_I},   lambda_I = d <a,I>,
// is corrected by the convergent product
//   u_I(x) = prod_{j>=0} g_I(f^{o j+1} x) / g_I(f^{o j} x),
// giving psi_I = g_I u_I, which is invariant under f on the petal. The
// exponent lambda_I is chosen so the leading orders cancel factor by factor,
// which is what makes the product converge.

#include <cstdint>
#include <vector>

#include "flowerlab/domains.hpp"
#include "flowerlab/germ.hpp"
#include "flowerlab/lattice.hpp"

namespace flowerlab {

struct InvariantEval {
    Complex value;               // psi_I(x) = g_I(x) * u_value
    Complex u_value;             // the accumulated product
    std::int64_t terms_used = 0; // factors actually multiplied
    double tail_bound = 0.0;     // absolute bound on |value - limit|, incl. rounding floor
    MultiIndex I;
    int ell = 0;
};

// x^I * (x^m)^{lambda_I} on the ell-branch. x_i = 0 with I_i > 0 gives 0;
// a negative I_i at a zero coordinate throws ZeroCoordinate. Branch errors
// propagate from sector_power.
Complex g_I(const ComplexPoint& x, const MultiIndex& I, int ell, const Germ& g,
            const LatticeData& lat);

// Raw partial product with exactly J factors, accumulated as
// sum_j sum_i (I_i + lambda_I m_i) log(1 + h_i(f^{o j} x)). No membership
// check; exposed for convergence-rate measurements and cross-checks.
Complex u_partial(const Germ& g, const LatticeData& lat, const ComplexPoint& x,
                  const MultiIndex& I, std::int64_t J);

// Full evaluation: accumulates factors until the fitted tail bound (the term
// envelope K c (|x^m|^d / (1 + j |x^m|^d))^{1 + gamma/d}, K fitted from the
// recent terms with a 2x margin) drops below tol. The bound constant is
// always self-fitted; spec.constants.K holds the outer-chart deviation
// bound, which is a different quantity. The returned tail_bound is at the
// value level and includes a rounding floor, so it never reads exactly zero
// for a nonzero value. extrapolate applies a geometric limit estimate from the
// last three checkpoint sums to the returned value; the bound is unchanged.
// Throws OutsidePetal when x is not in U_ell, NoConvergence when max_terms
// factors do not reach tol.
InvariantEval psi_I(const ComplexPoint& x, const MultiIndex& I, int ell, const Germ& g,
                    const LatticeData& lat, const PetalSpec& spec, double tol,
                    bool extrapolate = false, std::int64_t max_terms = 20000000);

// psi for rows 2..n of the completion matrix, in row order (empty for n = 1).
std::vector<Complex> psi_basis(const ComplexPoint& x, int ell, const Germ& g,
                               const LatticeData& lat, const PetalSpec& spec, double tol);

// Smallest kappa with |u_I(x) - 1| <= kappa |x^m|^gamma over the sample, for
// one row I. Component 0 branch. Throws EmptySample on an empty sample.
double u_deviation_fit_row(const Germ& g, const LatticeData& lat, const PetalSpec& spec,
                           const std::vector<ComplexPoint>& sample, const MultiIndex& I);

// Max of u_deviation_fit_row over rows 2..n of the completion matrix (0 when
// n = 1); stores the result into spec.constants.kappa and returns it.
double u_deviation_fit(const Germ& g, const LatticeData& lat, PetalSpec& spec,
                       const std::vector<ComplexPoint>& sample);

} // namespace flowerlab
