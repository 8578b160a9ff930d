#include "flowerlab/invariants.hpp"

#include <cmath>
#include <limits>

namespace flowerlab {

namespace {

// w_i = I_i + lambda_I m_i. Exact integer lambda (I = m gives -1) makes the
// weights exact zeros, which the fast paths below rely on.
std::vector<Complex> product_weights(const MultiIndex& I, const Germ& g,
                                     const LatticeData& lat, Complex& lambda_out) {
    Complex lam = lambda_of(I, g.a, lat.d);
    std::vector<Complex> w(I.size());
    for (std::size_t i = 0; i < I.size(); ++i)
        w[i] = double(I[i]) + lam * double(lat.m[i]);
    lambda_out = lam;
    return w;
}

Complex log_factor(const std::vector<Complex>& w, const std::vector<Complex>& h) {
    Complex lf = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] != Complex(0.0)) lf += w[i] * log1p_c(h[i]);
    return lf;
}

} // namespace

Complex g_I(const ComplexPoint& x, const MultiIndex& I, int ell, const Germ& g,
            const LatticeData& lat) {
    Complex lam = lambda_of(I, g.a, lat.d);
    Complex sp = sector_power(x, lam, ell, lat);  // validates the branch window
    return monomial(x, I) * sp;
}

Complex u_partial(const Germ& g, const LatticeData& lat, const ComplexPoint& x,
                  const MultiIndex& I, std::int64_t J) {
    Complex lam;
    auto w = product_weights(I, g, lat, lam);
    Complex S = 0.0;
    ComplexPoint cur = x;
    ComplexPoint next;
    std::vector<Complex> h;
    for (std::int64_t j = 0; j < J; ++j) {
        evaluate_with_increments_into(g, cur, h, next);
        S += log_factor(w, h);
        cur.swap(next);
    }
    return std::exp(S);
}

InvariantEval psi_I(const ComplexPoint& x, const MultiIndex& I, int ell, const Germ& g,
                    const LatticeData& lat, const PetalSpec& spec, double tol,
                    bool extrapolate, std::int64_t max_terms) {
    auto comp = in_U(x, g, spec, lat);
    if (!comp || *comp != ell)
        throw OutsidePetal("psi: point is not in the requested petal component");

    Complex lam;
    auto w = product_weights(I, g, lat, lam);
    Complex g0 = g_I(x, I, ell, g, lat);

    InvariantEval ev;
    ev.I = I;
    ev.ell = ell;

    const double eps_m = std::numeric_limits<double>::epsilon();

    bool all_zero = true;
    for (const auto& wi : w)
        if (wi != Complex(0.0)) all_zero = false;
    if (all_zero) {
        ev.value = g0;
        ev.u_value = 1.0;
        ev.terms_used = 0;
        ev.tail_bound = 64.0 * eps_m * std::abs(g0);
        return ev;
    }

    const double s = std::pow(std::abs(monomial(x, lat.m)), double(lat.d));
    const double gd = spec.gamma / double(lat.d);
    const double p = 1.0 + gd;
    const double c_eff = spec.constants.c.value_or(1.0);

    Complex S = 0.0;
    double S_abs = 0.0;
    ComplexPoint cur = x;
    std::vector<Complex> h;
    std::int64_t terms = 0;
    std::int64_t zeros_run = 0;
    double window_max = 0.0, prev_window_max = 0.0;
    std::int64_t next_check = 1;
    Complex ck_a = 0.0, ck_b = 0.0;  // sums at the two most recent checkpoints
    int n_ck = 0;
    double tail_value = std::numeric_limits<double>::infinity();

    ComplexPoint next;
    while (terms < max_terms) {
        evaluate_with_increments_into(g, cur, h, next);
        Complex lf = log_factor(w, h);
        double alf = std::abs(lf);
        S += lf;
        S_abs += alf;
        double t_j = s / (1.0 + double(terms) * s);
        window_max = std::max(window_max, alf / (c_eff * std::pow(t_j, p)));
        zeros_run = (alf == 0.0) ? zeros_run + 1 : 0;
        ++terms;
        cur.swap(next);

        if (terms == next_check || terms == max_terms) {
            // self-fitted from the recent terms; constants.K is the outer-chart
            // deviation bound, a different quantity, so it is never read here
            double K_fit = 2.0 * std::max(window_max, prev_window_max);
            double t_next = s / (1.0 + double(terms) * s);
            // remaining-sum envelope: first term plus the integral from here on
            double tail_log =
                K_fit * c_eff * (std::pow(t_next, p) + std::pow(t_next, gd) / gd);
            Complex u_now = std::exp(S);
            double scale = std::abs(g0) * std::abs(u_now);
            double floor_r = scale * eps_m * (64.0 + 8.0 * S_abs);
            tail_value = tail_log < 0.5
                             ? scale * std::expm1(tail_log) + floor_r
                             : std::numeric_limits<double>::infinity();
            bool warmed = terms >= 16 || (zeros_run == terms && terms >= 4);
            if (warmed && tail_value <= tol) {
                Complex u_used = u_now;
                if (extrapolate && n_ck >= 2) {
                    Complex e1 = ck_b - ck_a;
                    Complex e2 = S - ck_b;
                    if (e1 != Complex(0.0)) {
                        Complex r = e2 / e1;
                        if (std::abs(r) < 0.9) {
                            Complex S_ext = S + e2 * r / (1.0 - r);
                            u_used = std::exp(S_ext);
                            tail_value += std::abs(g0) * std::abs(u_used - u_now);
                        }
                    }
                }
                ev.u_value = u_used;
                ev.value = g0 * u_used;
                ev.terms_used = terms;
                ev.tail_bound = tail_value;
                return ev;
            }
            ck_a = ck_b;
            ck_b = S;
            ++n_ck;
            prev_window_max = window_max;
            window_max = 0.0;
            next_check = next_check < 4096 ? next_check * 2 : next_check + 4096;
        }
    }
    throw NoConvergence("psi: tail bound still above tol at the term budget", tail_value);
}

std::vector<Complex> psi_basis(const ComplexPoint& x, int ell, const Germ& g,
                               const LatticeData& lat, const PetalSpec& spec, double tol) {
    std::vector<Complex> out;
    for (std::size_t i = 1; i < lat.Mmat.size(); ++i)
        out.push_back(psi_I(x, lat.Mmat[i], ell, g, lat, spec, tol).value);
    return out;
}

double u_deviation_fit_row(const Germ& g, const LatticeData& lat, const PetalSpec& spec,
                           const std::vector<ComplexPoint>& sample, const MultiIndex& I) {
    if (sample.empty()) throw EmptySample("u deviation fit: empty sample");
    double kappa = 0.0;
    for (const auto& x : sample) {
        double am = std::abs(monomial(x, lat.m));
        double denom = std::pow(am, spec.gamma);
        // the measured deviation |u - 1| scales like |x^m|^gamma while psi's
        // tail budget is absolute on g_I*u, so the series tolerance needs the
        // |g_I| factor to keep the fit error a bounded fraction of the
        // measurement (a germ with nonzero A has a genuinely slow u-tail and
        // cannot afford a tighter target)
        double scale = std::abs(g_I(x, I, 0, g, lat));
        double tol = std::max(1e-13, 1e-2 * denom * scale);
        InvariantEval ev = psi_I(x, I, 0, g, lat, spec, tol, true);
        if (denom > 0.0) kappa = std::max(kappa, std::abs(ev.u_value - 1.0) / denom);
    }
    return kappa;
}

double u_deviation_fit(const Germ& g, const LatticeData& lat, PetalSpec& spec,
                       const std::vector<ComplexPoint>& sample) {
    if (sample.empty()) throw EmptySample("u deviation fit: empty sample");
    double kappa = 0.0;
    for (std::size_t i = 1; i < lat.Mmat.size(); ++i)
        kappa = std::max(kappa, u_deviation_fit_row(g, lat, spec, sample, lat.Mmat[i]));
    spec.constants.kappa = kappa;
    return kappa;
}

} // namespace flowerlab
