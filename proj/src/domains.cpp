#include "flowerlab/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "flowerlab/errors.hpp"

namespace flowerlab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::string point_brief(const ComplexPoint& x) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ", ";
        os << x[i].real() << (x[i].imag() < 0 ? "" : "+") << x[i].imag() << "i";
    }
    os << ")";
    return os.str();
}

// log|x^m| and the (unwrapped) argument sum; false when x^m = 0.
bool shadow_log(const ComplexPoint& x, const MultiIndex& m, double& lm, double& ph) {
    lm = 0.0;
    ph = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0) continue;
        if (x[i] == Complex(0.0)) return false;
        lm += double(m[i]) * std::log(std::abs(x[i]));
        ph += double(m[i]) * std::arg(x[i]);
    }
    return true;
}

int mod_index(long k, int d) { return int(((k % d) + d) % d); }

// Component of the shadow value y = x^m among the d petal directions. The
// centres sit at 2*pi*l/d (forward) or (2l+1)*pi/d (mirror); membership asks
// (-1)^mirror * y^d to land in the sector (tilde: with the boundary discs).
std::optional<int> shadow_component(Complex y, int d, const SectorSpec& s, bool tilde,
                                    bool mirror) {
    Complex u = int_power(y, d);
    if (mirror) u = -u;
    if (!(tilde ? in_C_tilde(u, s) : in_C(u, s))) return std::nullopt;
    double offset = mirror ? M_PI / double(d) : 0.0;
    long k = std::lround((std::arg(y) - offset) * double(d) / kTwoPi);
    return mod_index(k, d);
}

std::optional<int> in_U_impl(const ComplexPoint& x, const Germ&, const PetalSpec& spec,
                             const LatticeData& lat, bool mirror) {
    double lm, ph;
    if (!shadow_log(x, lat.m, lm, ph)) return std::nullopt;
    const int d = int(lat.d);
    // x^M in C (mirror: in -C), tested in log form to dodge under/overflow.
    if (!(double(d) * lm < std::log(spec.sector.epsilon))) return std::nullopt;
    double axM = wrap_angle(double(d) * ph - (mirror ? M_PI : 0.0));
    if (!(std::abs(axM) < spec.sector.theta)) return std::nullopt;
    const double fiber_cap = spec.gamma * lm;  // log of |x^m|^gamma
    for (const Complex& xi : x) {
        if (xi == Complex(0.0)) continue;
        if (!(std::log(std::abs(xi)) < fiber_cap)) return std::nullopt;
    }
    double offset = mirror ? M_PI / double(d) : 0.0;
    long k = std::lround((wrap_angle(ph) - offset) * double(d) / kTwoPi);
    return mod_index(k, d);
}

bool in_D_impl(const ComplexPoint& x, const PetalSpec& spec, const LatticeData& lat,
               bool tilde, int ell, bool mirror) {
    const double cap = tilde ? spec.delta_prime : spec.delta;
    for (const Complex& xi : x) {
        if (!(std::abs(xi) < cap)) return false;
    }
    Complex y = monomial(x, lat.m);
    std::optional<int> comp = shadow_component(y, int(lat.d), spec.sector, tilde, mirror);
    return comp && *comp == mod_index(ell, int(lat.d));
}

} // namespace

double wrap_angle(double t) {
    double w = std::remainder(t, kTwoPi);
    if (w <= -M_PI) w = M_PI;
    return w;
}

bool in_C(Complex z, const SectorSpec& s) {
    if (z == Complex(0.0)) return false;
    return std::abs(z) < s.epsilon && std::abs(std::arg(z)) < s.theta;
}

bool in_C_tilde(Complex z, const SectorSpec& s) {
    if (in_C(z, s)) return true;
    const double h = 0.5 * s.epsilon;
    return std::abs(z - std::polar(h, s.theta)) < h ||
           std::abs(z - std::polar(h, -s.theta)) < h;
}

std::optional<int> in_S(Complex z, Complex a, int p, const SectorSpec& s) {
    if (p < 1 || a == Complex(0.0)) throw PreconditionViolated("in_S: need p >= 1, a != 0");
    if (!in_C(-a * int_power(z, p), s)) return std::nullopt;
    long k = std::lround((double(p) * std::arg(z) + std::arg(-a)) / kTwoPi);
    return mod_index(k, p);
}

std::optional<int> in_S_tilde(Complex z, Complex a, int p, const SectorSpec& s) {
    if (p < 1 || a == Complex(0.0)) throw PreconditionViolated("in_S: need p >= 1, a != 0");
    if (!in_C_tilde(-a * int_power(z, p), s)) return std::nullopt;
    long k = std::lround((double(p) * std::arg(z) + std::arg(-a)) / kTwoPi);
    return mod_index(k, p);
}

Complex branch_log_xm(const ComplexPoint& x, int ell, const LatticeData& lat) {
    double lm, ph;
    if (!shadow_log(x, lat.m, lm, ph))
        throw OutsidePetalBranch("branch_log_xm: x^m = 0 at " + point_brief(x));
    const int d = int(lat.d);
    const double center = kTwoPi * double(mod_index(ell, d)) / double(d);
    const double delta = wrap_angle(ph - center);
    if (delta <= -M_PI / double(d) || delta > M_PI / double(d)) {
        std::ostringstream os;
        os << "branch_log_xm: arg(x^m) off the component window, offset " << delta
           << " at " << point_brief(x);
        throw OutsidePetalBranch(os.str());
    }
    return Complex(lm, center + delta);
}

Complex sector_power(const ComplexPoint& x, Complex lam, int ell, const LatticeData& lat) {
    if (lam == Complex(0.0)) return Complex(1.0);
    Complex lg = branch_log_xm(x, ell, lat);
    // exp(log(.)) loses ~|log| ulps; small integer powers are exact directly
    if (lam.imag() == 0.0 && lam.real() == std::nearbyint(lam.real()) &&
        std::abs(lam.real()) <= 8.0)
        return int_power(monomial(x, lat.m), std::int64_t(lam.real()));
    return std::exp(lam * lg);
}

std::optional<int> in_U(const ComplexPoint& x, const Germ& g, const PetalSpec& spec,
                        const LatticeData& lat) {
    return in_U_impl(x, g, spec, lat, false);
}

std::optional<int> in_U_mirror(const ComplexPoint& x, const Germ& g, const PetalSpec& spec,
                               const LatticeData& lat) {
    return in_U_impl(x, g, spec, lat, true);
}

bool in_D(const ComplexPoint& x, const Germ& g, const PetalSpec& spec,
          const LatticeData& lat, bool tilde, int ell) {
    (void)g;
    return in_D_impl(x, spec, lat, tilde, ell, false);
}

bool in_D_mirror(const ComplexPoint& x, const Germ& g, const PetalSpec& spec,
                 const LatticeData& lat, bool tilde, int ell) {
    (void)g;
    return in_D_impl(x, spec, lat, tilde, ell, true);
}

bool in_V(Complex z, const ComplexPoint& w, const Germ& g, const PetalSpec& spec,
          const LatticeData& lat) {
    const double az = std::abs(z);
    if (!(az > 1.0 / spec.sector.epsilon)) return false;
    if (!(std::abs(std::arg(z)) < spec.sector.theta)) return false;
    const double lz = std::log(az);
    const double lr = std::log(spec.r);
    const std::size_t n = std::size_t(g.n);
    for (std::size_t i = 0; i < n; ++i) {
        double lw = 0.0;
        bool zero = false;
        for (std::size_t j = 1; j < n; ++j) {
            const std::int64_t e = lat.Nmat[i][j];
            if (e == 0) continue;
            if (w[j - 1] == Complex(0.0)) {
                if (e < 0)
                    throw ZeroCoordinate("in_V: zero w-coordinate under a negative exponent");
                zero = true;
            } else {
                lw += double(e) * std::log(std::abs(w[j - 1]));
            }
        }
        if (zero) continue;  // |w^{N_i}| = 0, bound holds
        double cap = lr + (-spec.gamma / double(lat.d) - g.a[i].real()) * lz;
        if (!(lw < cap)) return false;
    }
    return true;
}

ComplexPoint sample_U(const Germ& g, const LatticeData& lat, const PetalSpec& spec,
                      int ell, Sampler& s, int max_tries, double band,
                      double shadow_decades, double fiber_decades) {
    const std::size_t n = std::size_t(g.n);
    if (s.dims() < 2 * n + 2) throw PreconditionViolated("sample_U: sampler dims < 2n+2");
    if (lat.m[0] == 0) throw PreconditionViolated("sample_U: m[0] must be positive");
    const int d = int(lat.d);
    const double shrink = std::log1p(-band);
    const double gamma = spec.gamma;
    for (int tries = 0; tries < max_tries; ++tries) {
        const std::vector<double>& t = s.next();
        // shadow modulus below eps^{1/d} and argument inside the window
        double L = std::log(spec.sector.epsilon) / double(d) + shrink -
                   t[0] * shadow_decades * std::log(10.0);
        double phi = kTwoPi * double(mod_index(ell, d)) / double(d) +
                     (2.0 * t[1] - 1.0) * (1.0 - band) * spec.sector.theta / double(d);
        // fibre moduli and arguments, the first coordinate solving the product
        double b0 = L, psi0 = phi;
        ComplexPoint x(n);
        for (std::size_t i = 1; i < n; ++i) {
            double bi =
                gamma * L + shrink - t[2 * i + 2] * fiber_decades * std::log(10.0);
            double psi = (2.0 * t[2 * i + 3] - 1.0) * M_PI;
            b0 -= double(lat.m[i]) * bi;
            psi0 -= double(lat.m[i]) * psi;
            x[i] = std::polar(std::exp(bi), psi);
        }
        b0 /= double(lat.m[0]);
        if (!(b0 <= gamma * L + shrink)) continue;  // pivot hit its fibre cap
        long root = long(t[2] * double(lat.m[0]));
        psi0 = (psi0 + kTwoPi * double(root)) / double(lat.m[0]);
        x[0] = std::polar(std::exp(b0), wrap_angle(psi0));
        if (!all_finite(x)) continue;
        std::optional<int> got = in_U(x, g, spec, lat);
        if (got && *got == mod_index(ell, d)) return x;
    }
    throw EmptySample("sample_U: rejection budget exhausted");
}

ComplexPoint sample_D(const Germ& g, const LatticeData& lat, const PetalSpec& spec,
                      int ell, bool tilde, Sampler& s, int max_tries, double decades) {
    const double cap = tilde ? spec.delta_prime : spec.delta;
    for (int tries = 0; tries < max_tries; ++tries) {
        ComplexPoint x = sample_polydisc(cap * (1.0 - 1e-9), decades, s);
        if (in_D(x, g, spec, lat, tilde, ell)) return x;
    }
    throw EmptySample("sample_D: rejection budget exhausted");
}

PetalSpec calibrate_petal(const Germ& g, const LatticeData& lat,
                          const CalibrationConfig& cfg) {
    const std::size_t n = std::size_t(g.n);
    double worst = -std::numeric_limits<double>::infinity();
    for (const Complex& ai : g.a) worst = std::max(worst, ai.real());
    if (worst >= 0.0)
        throw PreconditionViolated("calibrate_petal: needs Re a_i < 0 for every i");
    const int d = int(lat.d);
    double min_neg = std::numeric_limits<double>::infinity();
    for (const Complex& ai : g.a) min_neg = std::min(min_neg, -ai.real());
    const double gamma = 0.5 * double(d) * min_neg;

    PetalSpec spec;
    spec.sector.theta = cfg.theta;
    spec.gamma = gamma;
    spec.r = 0.25;

    std::uint64_t st = cfg.seed;
    ComplexPoint fx;

    for (double eps = cfg.eps_start; eps >= cfg.eps_floor; eps *= 0.5) {
        spec.sector.epsilon = eps;
        Sampler s(splitmix64(st), 2 * n + 2);
        double min_eta = std::numeric_limits<double>::infinity();
        bool good = true;
        ComplexPoint witness;
        for (int k = 0; k < cfg.sample_size && good; ++k) {
            const int ell = k % d;
            ComplexPoint x;
            try {
                x = sample_U(g, lat, spec, ell, s);
            } catch (const EmptySample&) {
                good = false;
                break;
            }
            fx = evaluate(g, x);
            std::optional<int> got = in_U(fx, g, spec, lat);
            if (!got || *got != ell) {
                good = false;
                witness = x;
                break;
            }
            // modulus-ratio contraction rate of this step
            double lmx, phx, lmf, phf;
            shadow_log(x, lat.m, lmx, phx);
            shadow_log(fx, lat.m, lmf, phf);
            double axM = std::exp(double(d) * lmx);
            for (std::size_t i = 0; i < n; ++i) {
                if (x[i] == Complex(0.0)) continue;
                double before = std::log(std::abs(x[i])) - gamma * lmx;
                double after = std::log(std::abs(fx[i])) - gamma * lmf;
                double eta_k = -std::expm1(after - before) / axM;
                min_eta = std::min(min_eta, eta_k);
            }
        }
        if (!good) {
            if (eps * 0.5 < cfg.eps_floor)
                throw CalibrationFailed("calibrate_petal: eps floor reached", point_brief(witness));
            continue;
        }
        if (!(min_eta > 0.0)) continue;
        spec.constants.eta = 0.5 * min_eta;  // headroom for fresh nets

        // polydisc cap: small enough that |x_i| < delta forces |x^M| < eps
        std::int64_t q = 0;
        for (auto mi : lat.m) q += mi;
        double delta = cfg.delta_override > 0.0
                           ? cfg.delta_override
                           : std::min(0.9 * g.trusted_radius,
                                      std::pow(0.9 * eps, 1.0 / double(q * d)));
        spec.delta = delta;
        spec.delta_prime = 0.5 * delta;

        // per-step modulus decay on D, fitted on the same kind of net the
        // tests draw (log-uniform, one decade)
        Sampler sd(splitmix64(st), 2 * n);
        double min_rho = std::numeric_limits<double>::infinity();
        for (int k = 0; k < cfg.sample_size; ++k) {
            ComplexPoint x;
            try {
                x = sample_D(g, lat, spec, k % d, false, sd);
            } catch (const EmptySample&) {
                min_rho = -1.0;
                break;
            }
            fx = evaluate(g, x);
            double am = std::abs(monomial(x, lat.m));
            for (std::size_t i = 0; i < n; ++i) {
                if (x[i] == Complex(0.0)) continue;
                double ratio = std::abs(fx[i]) / std::abs(x[i]);
                min_rho = std::min(min_rho, (1.0 - ratio) / am);
            }
        }
        if (!(min_rho > 0.0)) {
            spec.delta *= 0.5;
            spec.delta_prime *= 0.5;
            // one retry at half delta; petals exist, the cap was just loose
            Sampler sd2(splitmix64(st), 2 * n);
            min_rho = std::numeric_limits<double>::infinity();
            try {
                for (int k = 0; k < cfg.sample_size; ++k) {
                    ComplexPoint x = sample_D(g, lat, spec, k % d, false, sd2);
                    fx = evaluate(g, x);
                    double am = std::abs(monomial(x, lat.m));
                    for (std::size_t i = 0; i < n; ++i) {
                        if (x[i] == Complex(0.0)) continue;
                        double ratio = std::abs(fx[i]) / std::abs(x[i]);
                        min_rho = std::min(min_rho, (1.0 - ratio) / am);
                    }
                }
            } catch (const EmptySample&) {
                min_rho = -1.0;
            }
            if (!(min_rho > 0.0))
                throw CalibrationFailed("calibrate_petal: no modulus decay on D", point_brief(fx));
        }
        spec.constants.rho = 0.5 * min_rho;

        // shadow-orbit envelope: |y_j|^d (1 + j |y_0|^d / d) <= c |y_0|^d
        Sampler so(splitmix64(st), 2 * n + 2);
        double c_fit = 1.0;
        const int orbits = std::min(cfg.sample_size, 100);
        for (int k = 0; k < orbits; ++k) {
            ComplexPoint x = sample_U(g, lat, spec, k % d, so);
            double lm0, ph0;
            shadow_log(x, lat.m, lm0, ph0);
            const double y0 = std::exp(double(d) * lm0);
            const int steps = std::min(cfg.orbit_budget, 2000);
            for (int j = 1; j <= steps; ++j) {
                x = evaluate(g, x);
                double lmj, phj;
                if (!shadow_log(x, lat.m, lmj, phj)) break;
                double yj = std::exp(double(d) * lmj);
                c_fit = std::max(c_fit, yj * (1.0 + double(j) * y0 / double(d)) / y0);
            }
        }
        spec.constants.c = c_fit * (1.0 + 1e-3);

        // delta_prime: seeds in the capped tilde-domain must reach U without
        // quitting the trusted polydisc
        const double guard = std::max(spec.delta, 0.95 * g.trusted_radius);
        for (; spec.delta_prime > 1e-6 * spec.delta; spec.delta_prime *= 0.5) {
            Sampler sp(splitmix64(st), 2 * n);
            bool all_captured = true;
            for (int k = 0; k < std::min(cfg.sample_size, 200) && all_captured; ++k) {
                const int ell = k % d;
                ComplexPoint x;
                try {
                    x = sample_D(g, lat, spec, ell, true, sp);
                } catch (const EmptySample&) {
                    all_captured = false;
                    break;
                }
                bool captured = false;
                for (int j = 0; j < cfg.orbit_budget; ++j) {
                    std::optional<int> got = in_U(x, g, spec, lat);
                    if (got && *got == ell) {
                        captured = true;
                        break;
                    }
                    if (sup_norm(x) > guard) break;
                    x = evaluate(g, x);
                }
                all_captured = captured;
            }
            if (all_captured) return spec;
        }
        throw CalibrationFailed("calibrate_petal: no workable delta_prime", point_brief(fx));
    }
    throw CalibrationFailed("calibrate_petal: eps floor reached");
}

} // namespace flowerlab
