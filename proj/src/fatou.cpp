#include "flowerlab/fatou.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "flowerlab/errors.hpp"

namespace flowerlab {

namespace {

int mod_component(int ell, std::int64_t d) {
    const std::int64_t r = ((std::int64_t(ell) % d) + d) % d;
    return int(r);
}

// invariant-series tolerance for an outer target: a slice of the budget,
// clamped above the series' own rounding floor
double inner_tol(double tol) { return std::max(0.05 * tol, 1e-12); }

void check_fibre_arity(const ComplexPoint& w, const Germ& g, const char* who) {
    if (w.size() + 1 != std::size_t(g.n)) {
        std::ostringstream os;
        os << who << ": fibre has " << w.size() << " entries, germ needs " << (g.n - 1);
        throw PreconditionViolated(os.str());
    }
}

// htilde at the current point and one f-step, sharing the germ evaluation.
// h_scratch/next are caller-owned to keep orbit loops allocation-free.
Complex step_htilde(const Germ& g, ComplexPoint& x, std::vector<Complex>& h_scratch,
                    ComplexPoint& next) {
    evaluate_with_increments_into(g, x, h_scratch, next);
    Complex S = 0.0;
    for (std::size_t i = 0; i < std::size_t(g.n); ++i)
        if (g.M[i] != 0) S += double(g.M[i]) * log1p_c(h_scratch[i]);
    const Complex fxM = monomial(next, g.M);
    const Complex ht = -expm1_c(S) / fxM - Complex(1.0);
    x.swap(next);
    return ht;
}

} // namespace

ChartPoint phi_forward(const ComplexPoint& x, int ell, const Germ& g,
                       const LatticeData& lat, const PetalSpec& spec, double tol) {
    ChartPoint out;
    out.w = psi_basis(x, ell, g, lat, spec, tol);  // throws off the petal
    out.z = Complex(1.0) / monomial(x, g.M);
    return out;
}

ComplexPoint model_inverse(const ChartPoint& zw, const Germ& g, const LatticeData& lat,
                           int ell) {
    if (zw.z == Complex(0.0))
        throw BranchError("model_inverse: z = 0 is not in any chart image");
    check_fibre_arity(zw.w, g, "model_inverse");
    const std::size_t n = std::size_t(g.n);
    // branch of -log(x^M)/d matching the petal component: Im L in
    // (-2 pi ell - pi, -2 pi ell + pi]
    const Complex L = std::log(zw.z) - Complex(0.0, 2.0 * M_PI * double(ell));
    ComplexPoint x(n);
    for (std::size_t i = 0; i < n; ++i) {
        Complex v = std::exp(g.a[i] * L);
        for (std::size_t k = 1; k < n; ++k) {
            const std::int64_t e = lat.Nmat[i][k];
            if (e != 0) v *= int_power(zw.w[k - 1], e);
        }
        x[i] = v;
    }
    return x;
}

double slice_radius(const ComplexPoint& w, const Germ& g, const LatticeData& lat,
                    const PetalSpec& spec) {
    check_fibre_arity(w, g, "slice_radius");
    const std::size_t n = std::size_t(g.n);
    double R = 1.0 / spec.sector.epsilon;
    if (!std::isfinite(R) || R <= 0.0)
        throw EmptySlice("slice_radius: unusable sector radius");
    for (std::size_t i = 0; i < n; ++i) {
        double lw = 0.0;
        bool zero = false;
        for (std::size_t k = 1; k < n; ++k) {
            const std::int64_t e = lat.Nmat[i][k];
            if (e == 0) continue;
            if (w[k - 1] == Complex(0.0)) {
                if (e < 0)
                    throw EmptySlice(
                        "slice_radius: zero fibre coordinate under a negative exponent");
                zero = true;
            } else {
                lw += double(e) * std::log(std::abs(w[k - 1]));
            }
        }
        if (zero) continue;  // |w^{N_i}| = 0, the row bound holds for every z
        const double q = -spec.gamma / double(lat.d) - g.a[i].real();
        if (!(q > 0.0)) throw EmptySlice("slice_radius: non-positive radial exponent");
        const double thr = std::exp((lw - std::log(spec.r)) / q);
        if (!std::isfinite(thr)) throw EmptySlice("slice_radius: row threshold overflowed");
        R = std::max(R, thr);
    }
    return R;
}

Complex chart_base_point(const ComplexPoint& w, const Germ& g, const LatticeData& lat,
                         const PetalSpec& spec, int ell) {
    (void)ell;  // the star center does not depend on the component
    if (!(spec.sector.theta > 0.0 && spec.sector.theta < M_PI / 2.0))
        throw PreconditionViolated("chart_base_point: aperture must lie in (0, pi/2)");
    const double R = slice_radius(w, g, lat, spec);
    // every slice point sees 2R/cos(theta) on the axis along a segment
    // that stays outside the radius-R ball, hence inside the slice
    return Complex(2.0 * R / std::cos(spec.sector.theta), 0.0);
}

Complex sample_slice_z(const ComplexPoint& w, const Germ& g, const LatticeData& lat,
                       const PetalSpec& spec, Sampler& s, double decades, int max_tries) {
    if (s.dims() < 2)
        throw PreconditionViolated("sample_slice_z: sampler must have at least 2 dims");
    const double R = slice_radius(w, g, lat, spec);
    for (int t = 0; t < max_tries; ++t) {
        const std::vector<double>& u = s.next();
        const double rho = 1.01 * R * std::pow(10.0, decades * u[0]);
        const double phi = 0.95 * spec.sector.theta * (2.0 * u[1] - 1.0);
        const Complex z = std::polar(rho, phi);
        if (in_V(z, w, g, spec, lat)) return z;
    }
    throw NotReached("sample_slice_z: no admissible point within the try budget");
}

ComplexPoint phi_inverse(const ChartPoint& zw, const Germ& g, const LatticeData& lat,
                         const PetalSpec& spec, int ell, double tol, int max_iter) {
    check_fibre_arity(zw.w, g, "phi_inverse");
    if (!in_V(zw.z, zw.w, g, spec, lat))
        throw OutsideV("phi_inverse: chart point off the sector domain");
    const std::size_t n = std::size_t(g.n);
    const std::size_t fib = n - 1;
    const double inf = std::numeric_limits<double>::infinity();

    ComplexPoint x = model_inverse(zw, g, lat, ell);

    if (fib == 0) {
        // the chart is exactly the model chart; just confirm the component
        auto comp = in_U(x, g, spec, lat);
        if (!comp || *comp != mod_component(ell, lat.d))
            throw NoConvergence("phi_inverse: model preimage off the petal component", inf);
        return x;
    }

    const double psi_tol = inner_tol(tol);
    std::vector<double> scale(fib);
    for (std::size_t k = 0; k < fib; ++k)
        scale[k] = std::max(1.0, std::abs(zw.w[k]));

    std::vector<Complex> psi(fib), u(fib), wp(fib);
    auto eval_rows = [&](const ComplexPoint& xx) -> bool {
        try {
            for (std::size_t k = 0; k < fib; ++k) {
                InvariantEval ev = psi_I(xx, lat.Mmat[k + 1], ell, g, lat, spec, psi_tol);
                psi[k] = ev.value;
                u[k] = ev.u_value;
            }
            return true;
        } catch (const OutsidePetal&) {
            return false;
        } catch (const OutsidePetalBranch&) {
            return false;
        }
    };
    auto residual_of = [&]() {
        double r = 0.0;
        for (std::size_t k = 0; k < fib; ++k)
            r = std::max(r, std::abs(psi[k] - zw.w[k]) / scale[k]);
        return r;
    };

    double res_best = inf;
    ComplexPoint x_best = x;
    int no_halving = 0;
    bool use_newton = false;

    for (int it = 0; it <= max_iter; ++it) {
        if (!eval_rows(x)) {
            if (it == 0)
                throw NoConvergence("phi_inverse: model seed off the petal", inf);
            x = x_best;
            use_newton = true;
            if (!eval_rows(x))
                throw NoConvergence("phi_inverse: iterates left the petal", res_best);
        }
        const double res = residual_of();
        if (res <= tol) return x;
        if (res < 0.5 * res_best)
            no_halving = 0;
        else
            ++no_halving;
        if (res < res_best) {
            res_best = res;
            x_best = x;
        }
        if (it == max_iter) break;
        if (no_halving >= 3) use_newton = true;

        if (!use_newton) {
            // correct the model targets by the measured u and re-invert
            bool bad = false;
            for (std::size_t k = 0; k < fib; ++k) {
                if (u[k] == Complex(0.0)) {
                    bad = true;
                    break;
                }
                wp[k] = zw.w[k] / u[k];
            }
            if (bad) {
                use_newton = true;
            } else {
                ChartPoint corrected{zw.z, wp};
                x = model_inverse(corrected, g, lat, ell);
                continue;
            }
        }

        // Newton step on F = ((1/x^M - z)/|z|, (psi_k - w_k)/scale_k) with a
        // finite-difference Jacobian; real steps suffice for the complex
        // derivative since the chart is holomorphic
        const double zscale = std::max(1.0, std::abs(zw.z));
        Eigen::VectorXcd F(n);
        F(0) = (Complex(1.0) / monomial(x, g.M) - zw.z) / zscale;
        for (std::size_t k = 0; k < fib; ++k) F(k + 1) = (psi[k] - zw.w[k]) / scale[k];

        const double xref = sup_norm(x);
        Eigen::MatrixXcd J(n, n);
        bool fd_ok = true;
        for (std::size_t i = 0; i < n && fd_ok; ++i) {
            double delta = 1e-6 * std::max(std::abs(x[i]), 1e-3 * xref);
            for (int attempt = 0;; ++attempt) {
                ComplexPoint xp = x, xm_ = x;
                xp[i] += delta;
                xm_[i] -= delta;
                std::vector<Complex> psi_p(fib), psi_m(fib);
                bool ok = true;
                try {
                    for (std::size_t k = 0; k < fib; ++k) {
                        psi_p[k] = psi_I(xp, lat.Mmat[k + 1], ell, g, lat, spec, psi_tol).value;
                        psi_m[k] = psi_I(xm_, lat.Mmat[k + 1], ell, g, lat, spec, psi_tol).value;
                    }
                } catch (const OutsidePetal&) {
                    ok = false;
                } catch (const OutsidePetalBranch&) {
                    ok = false;
                }
                if (ok) {
                    const Complex inv2d = Complex(1.0) / (2.0 * delta);
                    J(0, Eigen::Index(i)) = (Complex(1.0) / monomial(xp, g.M) -
                                             Complex(1.0) / monomial(xm_, g.M)) *
                                            inv2d / zscale;
                    for (std::size_t k = 0; k < fib; ++k)
                        J(Eigen::Index(k + 1), Eigen::Index(i)) =
                            (psi_p[k] - psi_m[k]) * inv2d / scale[k];
                    break;
                }
                if (attempt >= 1) {
                    fd_ok = false;
                    break;
                }
                delta *= 0.25;
            }
        }
        if (!fd_ok)
            throw NoConvergence("phi_inverse: difference stencil left the petal", res_best);

        Eigen::VectorXcd dx = J.fullPivLu().solve(F);
        ComplexPoint x_new(n);
        bool stepped = false;
        double damp = 1.0;
        for (int attempt = 0; attempt < 6; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] - damp * dx(Eigen::Index(i));
            auto comp = in_U(x_new, g, spec, lat);
            if (comp && *comp == mod_component(ell, lat.d)) {
                stepped = true;
                break;
            }
            damp *= 0.5;
        }
        if (!stepped)
            throw NoConvergence("phi_inverse: damped steps kept leaving the petal", res_best);
        x = x_new;
    }
    std::ostringstream os;
    os << "phi_inverse: residual " << res_best << " after " << max_iter << " iterations";
    throw NoConvergence(os.str(), res_best);
}

Complex htilde(const ChartPoint& zw, const Germ& g, const LatticeData& lat,
               const PetalSpec& spec, int ell, double tol) {
    ComplexPoint x = phi_inverse(zw, g, lat, spec, ell, tol);
    std::vector<Complex> h;
    ComplexPoint next;
    return step_htilde(g, x, h, next);
}

Complex ftilde(const ChartPoint& zw, const Germ& g, const LatticeData& lat,
               const PetalSpec& spec, int ell, double tol) {
    return zw.z + (Complex(1.0) + htilde(zw, g, lat, spec, ell, tol));
}

double htilde_bound_fit(const Germ& g, const LatticeData& lat, PetalSpec& spec, int ell,
                        const std::vector<ChartPoint>& sample, double tol) {
    if (sample.empty()) throw EmptySample("htilde_bound_fit: empty sample");
    const double gd = spec.gamma / double(lat.d);
    double K = 0.0;
    for (const ChartPoint& zw : sample) {
        const Complex ht = htilde(zw, g, lat, spec, ell, tol);
        K = std::max(K, std::abs(ht) * std::pow(std::abs(zw.z), gd));
    }
    spec.constants.K = K;
    return K;
}

double htilde_derivative_check(const Germ& g, const LatticeData& lat, PetalSpec& spec,
                               int ell, const std::vector<ChartPoint>& sample,
                               double step_rho, double tol) {
    if (sample.empty()) throw EmptySample("htilde_derivative_check: empty sample");
    const double gd = spec.gamma / double(lat.d);
    double Kp = 0.0;
    std::size_t used = 0;
    for (const ChartPoint& zw : sample) {
        double delta = step_rho * std::abs(zw.z);
        bool usable = false;
        for (int attempt = 0; attempt < 4; ++attempt) {
            if (in_V(zw.z + delta, zw.w, g, spec, lat) &&
                in_V(zw.z - delta, zw.w, g, spec, lat)) {
                usable = true;
                break;
            }
            delta *= 0.5;
        }
        if (!usable) continue;  // stencil pokes out of V even after shrinking
        const Complex hp = htilde({zw.z + delta, zw.w}, g, lat, spec, ell, tol);
        const Complex hm = htilde({zw.z - delta, zw.w}, g, lat, spec, ell, tol);
        const Complex der = (hp - hm) / (2.0 * delta);
        Kp = std::max(Kp, std::abs(der) * std::pow(std::abs(zw.z), 1.0 + gd));
        ++used;
    }
    if (used == 0)
        throw EmptySample("htilde_derivative_check: every difference stencil left V");
    spec.constants.K_prime = Kp;
    return Kp;
}

FatouChart build_chart(const ComplexPoint& w, const Germ& g, const LatticeData& lat,
                       const PetalSpec& spec, int ell, double tol, std::int64_t j_cap,
                       std::optional<Complex> base_override) {
    if (!(tol > 0.0)) throw PreconditionViolated("build_chart: tol must be positive");
    if (j_cap < 64) throw PreconditionViolated("build_chart: orbit cap too small");
    const double R = slice_radius(w, g, lat, spec);
    const Complex p = base_override ? *base_override
                                    : chart_base_point(w, g, lat, spec, ell);
    if (!in_V(p, w, g, spec, lat))
        throw OutsideV("build_chart: base point off the slice");
    const Complex z0(1.001 * R, 0.0);

    const double tol_inv = inner_tol(tol);
    ComplexPoint probe = phi_inverse({z0, w}, g, lat, spec, ell, tol_inv);
    ComplexPoint base = phi_inverse({p, w}, g, lat, spec, ell, tol_inv);

    // lockstep orbits: the probe rides the rim where the deviation is
    // largest, the base orbit supplies the increment-difference decay
    std::vector<Complex> h;
    ComplexPoint scratch;
    constexpr int kWin = 16;
    double ring_h[kWin], ring_t[kWin];
    std::fill(ring_h, ring_h + kWin, 0.0);
    std::fill(ring_t, ring_t + kWin, 0.0);
    const double settle = 0.4 * tol;

    std::int64_t j = 0;
    std::int64_t j_stop = -1;
    std::int64_t j_max = j_cap;
    int run = 0;
    while (j < j_max) {
        const Complex hp = step_htilde(g, probe, h, scratch);
        const Complex hb = step_htilde(g, base, h, scratch);
        const double ah = std::max(std::abs(hp), std::abs(hb));
        ring_h[j % kWin] = ah;
        ring_t[j % kWin] = std::abs(hp - hb);
        ++j;
        if (j_stop < 0) {
            run = ah <= settle ? run + 1 : 0;
            if (run >= kWin) {
                j_stop = j;
                const double scaled = std::ceil(1.25 * double(j_stop));
                j_max = std::min(j_cap, std::int64_t(scaled));
            }
        }
    }
    if (j_stop < 0) {
        std::ostringstream os;
        os << "build_chart: deviation still " << ring_h[(j - 1) % kWin] << " after "
           << j_cap << " steps";
        throw NoConvergence(os.str(), ring_h[(j - 1) % kWin]);
    }

    double h_end = 0.0, t_end = 0.0;
    for (int i = 0; i < kWin; ++i) {
        h_end = std::max(h_end, ring_h[i]);
        t_end = std::max(t_end, ring_t[i]);
    }

    FatouChart chart;
    chart.ell = ell;
    chart.w = w;
    chart.base_point_z = p;
    chart.j_max = j_max;
    chart.tol = tol;
    // remaining increment differences decay at least like j^{-1-gamma/d},
    // so the tail past j_max is within (d/gamma) j_max t_end
    chart.beta_error =
        1.5 * (h_end + (double(lat.d) / spec.gamma) * double(j_max) * t_end);
    chart.p_image = Complex(1.0) / monomial(base, g.M);
    return chart;
}

Complex fatou_beta(Complex z, const FatouChart& chart, const Germ& g,
                   const LatticeData& lat, const PetalSpec& spec) {
    if (!in_V(z, chart.w, g, spec, lat))
        throw OutsideV("fatou_beta: point off the chart slice");
    ComplexPoint x =
        phi_inverse({z, chart.w}, g, lat, spec, chart.ell, inner_tol(chart.tol));
    ComplexPoint next(x.size());
    for (std::int64_t j = 0; j < chart.j_max; ++j) {
        evaluate_into(g, x, next);
        x.swap(next);
    }
    return Complex(1.0) / monomial(x, g.M) - chart.p_image;
}

std::vector<TranslateWitness> check_union_translates(const FatouChart& chart,
                                                     const std::vector<Complex>& targets,
                                                     const Germ& g, const LatticeData& lat,
                                                     const PetalSpec& spec, double tol) {
    const double R = slice_radius(chart.w, g, lat, spec);
    const Complex p = chart.base_point_z;
    std::vector<TranslateWitness> out;
    out.reserve(targets.size());
    for (const Complex& zeta : targets) {
        // smallest shift that puts the seed comfortably inside the slice
        const double want_re = std::max(1.05 * R, std::abs(zeta.imag()) /
                                                      std::tan(0.8 * spec.sector.theta));
        double j0 = std::ceil(std::max(0.0, want_re - (zeta + p).real()));
        bool witnessed = false;
        TranslateWitness wit;
        for (int retry = 0; retry < 6 && !witnessed; ++retry) {
            const std::int64_t jj = std::int64_t(j0) + retry * std::int64_t(R / 2 + 1);
            const Complex target = zeta + Complex(double(jj), 0.0);
            Complex z = target + p;
            try {
                for (int it = 0; it < 12; ++it) {
                    const Complex res = fatou_beta(z, chart, g, lat, spec) - target;
                    if (std::abs(res) <= tol) {
                        wit = TranslateWitness{zeta, jj, z, std::abs(res)};
                        witnessed = true;
                        break;
                    }
                    z -= res;  // beta is a near-translation, so beta' ~ 1
                }
            } catch (const OutsideV&) {
                // seed or an iterate fell off the slice; push deeper
            }
        }
        if (!witnessed) {
            std::ostringstream os;
            os << "check_union_translates: no witness for target (" << zeta.real() << ", "
               << zeta.imag() << ")";
            throw NotReached(os.str());
        }
        out.push_back(wit);
    }
    return out;
}

} // namespace flowerlab
