#pragma once

// Chart-side machinery. The forward chart sends a petal point x to
//   (z, w) = (1/x^M, psi_2(x), ..., psi_n(x)),
// which conjugates f to (z,w) -> (z + 1 + htilde(z,w), w) on the outer domain
// V. The exact Fatou coordinate beta is the limit of
//   beta_j(z) = F^{o j}(z) - F^{o j}(p)
// for a star-center base point p of the w-slice of V, where F is the
// conjugated map in the z coordinate.

#include <cstdint>
#include <optional>
#include <vector>

#include "flowerlab/domains.hpp"
#include "flowerlab/germ.hpp"
#include "flowerlab/invariants.hpp"
#include "flowerlab/lattice.hpp"
#include "flowerlab/sampling.hpp"

namespace flowerlab {

struct ChartPoint {
    Complex z;
    ComplexPoint w;  // n-1 fibre coordinates
};

struct FatouChart {
    int ell = 0;
    ComplexPoint w;
    Complex base_point_z;      // star center p of the slice
    std::int64_t j_max = 0;    // shared orbit length for every beta evaluation
    double tol = 0.0;          // requested conjugacy-defect scale
    double beta_error = 0.0;   // measured bound on |beta - limit| over the slice
    Complex p_image;           // z-image of the base point after j_max steps
};

// (1/x^M, psi rows) with per-entry tail bounds <= tol. Errors propagate from
// the invariant evaluations (OutsidePetal and friends).
ChartPoint phi_forward(const ComplexPoint& x, int ell, const Germ& g,
                       const LatticeData& lat, const PetalSpec& spec, double tol);

// Closed-form inverse of the model chart (1/x^M, g_2, ..., g_n):
//   x_i = exp(a_i L) prod_{j>=2} w_j^{N_{i,j}},  L = Log z - 2 pi i ell.
// Inverts the model exactly because m N = e_1 and M N = Id. Throws
// BranchError at z = 0, ZeroCoordinate when a zero w_j meets a negative
// exponent. Angular validity is the caller's concern (no spec is passed).
ComplexPoint model_inverse(const ChartPoint& zw, const Germ& g, const LatticeData& lat,
                           int ell);

// Solves phi_forward(x) = (z, w) for x in U_ell. Seeded at model_inverse,
// which is within a bounded factor of the answer since psi/g stays near 1;
// then fixed-point correction of the fibre targets by the measured u values,
// with a finite-difference Newton fallback when the correction stalls.
// Residual (sup over fibre entries, relative to max(1, |w_k|)) <= tol; the
// z entry is matched exactly by construction. The inner invariant series
// carry a rounding floor near 1e-13, so tol below ~1e-10 saturates there.
// Throws OutsideV when (z,w) is not in V, NoConvergence (with the residual)
// past max_iter.
ComplexPoint phi_inverse(const ChartPoint& zw, const Germ& g, const LatticeData& lat,
                         const PetalSpec& spec, int ell, double tol, int max_iter = 60);

// First coordinate of the conjugated map: 1/f(phi_inverse(z,w))^M, which
// equals z + 1 + htilde(z,w) with htilde small on V.
Complex ftilde(const ChartPoint& zw, const Germ& g, const LatticeData& lat,
               const PetalSpec& spec, int ell, double tol);

// The deviation htilde(z, w) = ftilde(z, w) - z - 1 computed without the
// z-scale cancellation: with z = 1/x^M the deviation is
//   -expm1(sum_i M_i log1p(h_i)) / f(x)^M - 1,
// so its absolute error stays near machine epsilon even when |z| is large.
// All the fitting ops measure htilde through this.
Complex htilde(const ChartPoint& zw, const Germ& g, const LatticeData& lat,
               const PetalSpec& spec, int ell, double tol);

// Fits sup |htilde| |z|^{gamma/d} over the sample; stores constants.K.
double htilde_bound_fit(const Germ& g, const LatticeData& lat, PetalSpec& spec, int ell,
                        const std::vector<ChartPoint>& sample, double tol = 1e-10);

// Central finite-difference estimate of d htilde / dz with step step_rho |z|
// (shrunk when an endpoint leaves V); fits sup |d htilde/dz| |z|^{1 + gamma/d}
// over the sample and stores constants.K_prime.
double htilde_derivative_check(const Germ& g, const LatticeData& lat, PetalSpec& spec,
                               int ell, const std::vector<ChartPoint>& sample,
                               double step_rho = 0.02, double tol = 1e-10);

// Smallest |z| of the w-slice of V: the row thresholds (|w^{N_i}|/r)^{1/q_i}
// with q_i = -gamma/d - Re a_i, capped below by 1/epsilon. Throws EmptySlice
// when the thresholds are not finite (zero w against a negative exponent, or
// a non-positive q_i).
double slice_radius(const ComplexPoint& w, const Germ& g, const LatticeData& lat,
                    const PetalSpec& spec);

// Star center p = 2 R_w / cos theta on the positive real axis; every point
// of the slice sees p along a segment inside the slice.
Complex chart_base_point(const ComplexPoint& w, const Germ& g, const LatticeData& lat,
                         const PetalSpec& spec, int ell);

// Draw z in the w-slice of V: log-uniform modulus over the given decades
// above slice_radius, uniform argument strictly inside the aperture.
Complex sample_slice_z(const ComplexPoint& w, const Germ& g, const LatticeData& lat,
                       const PetalSpec& spec, Sampler& s, double decades = 2.0,
                       int max_tries = 200);

// Builds the chart for one w-slice: base point, then a rim probe orbit that
// runs until the measured |htilde| stays below 0.4 tol for a stretch, fixing
// j_max (with margin, capped by j_cap); beta_error combines the probe's end
// defect with its increment tail. Every beta evaluation then uses the same
// j_max, so pairs of evaluations stay consistent at the defect scale (the
// adaptive per-call rule is monitored during the probe instead of per call).
// base_override replaces the standard star center (it must lie in the slice);
// comparing charts with different centers bounds the base-point dependence.
// Throws NoConvergence when the probe never settles, EmptySlice when the
// slice is empty.
FatouChart build_chart(const ComplexPoint& w, const Germ& g, const LatticeData& lat,
                       const PetalSpec& spec, int ell, double tol,
                       std::int64_t j_cap = 20000000,
                       std::optional<Complex> base_override = std::nullopt);

// beta(z) = F^{o j_max}(z) - F^{o j_max}(p), computed by pulling z back to
// the petal once and iterating f there (the conjugacy makes the z-orbit a
// germ orbit read through 1/x^M). Throws OutsideV off the slice.
Complex fatou_beta(Complex z, const FatouChart& chart, const Germ& g,
                   const LatticeData& lat, const PetalSpec& spec);

struct TranslateWitness {
    Complex zeta;
    std::int64_t j = 0;
    Complex z;
    double residual = 0.0;
};

// For each target zeta finds j and z in the slice with beta(z) ~ zeta + j,
// by Newton from the seed z = zeta + j + p (beta is near a translation).
// Throws NotReached when a target cannot be witnessed.
std::vector<TranslateWitness> check_union_translates(const FatouChart& chart,
                                                     const std::vector<Complex>& targets,
                                                     const Germ& g, const LatticeData& lat,
                                                     const PetalSpec& spec,
                                                     double tol = 1e-8);

} // namespace flowerlab
