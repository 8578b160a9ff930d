#pragma once

#include <optional>

#include "flowerlab/germ.hpp"
#include "flowerlab/lattice.hpp"
#include "flowerlab/sampling.hpp"

namespace flowerlab {

// Truncated sector at the origin: |z| < epsilon, |arg z| < theta.
struct SectorSpec {
    double epsilon;
    double theta;
};

// Empirically fitted constants; unset until the corresponding fit has run.
struct FittedConstants {
    std::optional<double> eta;      // one-step decay rate of |x_i|/|x^m|^gamma
    std::optional<double> rho;      // per-step decay of |x_i| on D
    std::optional<double> K;        // sup of |htilde(z,w)| * |z|^{gamma/d}
    std::optional<double> K_prime;  // sup of |d htilde/dz| * |z|^{1+gamma/d}
    std::optional<double> c;        // shadow-orbit decay envelope factor
    std::optional<double> C_big;    // re-entry time factor j >= C/|z|^p
    std::optional<double> kappa;    // deviation |u - 1| <= kappa |x^m|^gamma
};

struct PetalSpec {
    SectorSpec sector;
    double gamma;
    double delta;
    double delta_prime;
    double r;
    FittedConstants constants;
};

// Wrap an angle into (-pi, pi].
double wrap_angle(double t);

// Sector membership; z = 0 is excluded (arg undefined at the vertex).
bool in_C(Complex z, const SectorSpec& s);
// Sector plus the two discs of radius eps/2 centred at (eps/2)e^{+-i theta}.
bool in_C_tilde(Complex z, const SectorSpec& s);

// Membership of z in S_a = {-a z^p in C}; on success returns which of the p
// components holds z, indexed by the nearest direction with -a v^p real > 0.
std::optional<int> in_S(Complex z, Complex a, int p, const SectorSpec& s);
std::optional<int> in_S_tilde(Complex z, Complex a, int p, const SectorSpec& s);

// log(x^m) with the branch of the petal component ell: the argument is taken
// in (2 pi ell / d - pi / d, 2 pi ell / d + pi / d]. Continuous along paths
// that stay inside the component.
Complex branch_log_xm(const ComplexPoint& x, int ell, const LatticeData& lat);

// (x^m)^lam = exp(lam * branch_log_xm(x, ell)).
Complex sector_power(const ComplexPoint& x, Complex lam, int ell, const LatticeData& lat);

// Petal membership: x^M in C(eps, theta) and |x_i| < |x^m|^gamma for all i.
// Returns the component index ell in [0, d) when inside.
std::optional<int> in_U(const ComplexPoint& x, const Germ& g, const PetalSpec& spec,
                        const LatticeData& lat);

// Polydisc-capped petal seed: x^m in the ell-component of S_{-1} (S-tilde
// when tilde is set) and all |x_i| below delta (delta_prime when tilde).
bool in_D(const ComplexPoint& x, const Germ& g, const PetalSpec& spec,
          const LatticeData& lat, bool tilde, int ell);

// Chart-side domain: |z| > 1/eps, |arg z| < theta, and for every row i of
// the inverse lattice matrix, |prod_{j>=2} w_j^{N_{i,j}}| < r |z|^{-gamma/d - Re a_i}.
bool in_V(Complex z, const ComplexPoint& w, const Germ& g, const PetalSpec& spec,
          const LatticeData& lat);

// Mirror-petal membership for the backward dynamics: same shape as in_U and
// in_D but with the angular windows centred at (2 ell + 1) pi / d, which is
// where x^m lands after the mirror scaling with v^M = -1.
std::optional<int> in_U_mirror(const ComplexPoint& x, const Germ& g, const PetalSpec& spec,
                               const LatticeData& lat);
bool in_D_mirror(const ComplexPoint& x, const Germ& g, const PetalSpec& spec,
                 const LatticeData& lat, bool tilde, int ell);

// Draw a point of U_ell: shadow modulus log-uniform below eps^{1/d}, shadow
// argument inside the component window, fibre moduli below the gamma-power
// bound; the first coordinate absorbs the shadow constraint. band shrinks
// every inequality by the given relative margin. Throws EmptySample when
// max_tries rejections pass without a hit.
ComplexPoint sample_U(const Germ& g, const LatticeData& lat, const PetalSpec& spec,
                      int ell, Sampler& s, int max_tries = 400, double band = 1e-3,
                      double shadow_decades = 1.5, double fiber_decades = 1.0);

// Rejection-sample the polydisc-capped seed domain D (or D-tilde).
ComplexPoint sample_D(const Germ& g, const LatticeData& lat, const PetalSpec& spec,
                      int ell, bool tilde, Sampler& s, int max_tries = 4000,
                      double decades = 1.0);

struct CalibrationConfig {
    double theta = M_PI / 4.0;
    double eps_start = 0.05;
    double eps_floor = 1e-7;
    double delta_override = 0.0;   // 0 means derive from eps and the germ
    int sample_size = 2000;
    int orbit_budget = 200000;
    std::uint64_t seed = 1;
};

// Effective petal parameters: gamma from the leading coefficients, eps by
// bisection until one f-step preserves membership and the modulus ratio
// contracts on a quasi-random net, then eta, rho and the shadow envelope c
// fitted from the same run.
PetalSpec calibrate_petal(const Germ& g, const LatticeData& lat,
                          const CalibrationConfig& cfg);

} // namespace flowerlab
