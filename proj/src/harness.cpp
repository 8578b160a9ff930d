#include "flowerlab/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "flowerlab/fatou.hpp"
#include "flowerlab/invariants.hpp"
#include "flowerlab/sampling.hpp"

namespace flowerlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t sub_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t st = base + salt * 0x9e3779b97f4a7c15ull;
    return splitmix64(st);
}

double escape_radius_for(const ExperimentConfig& cfg, const Germ& g) {
    if (cfg.escape_radius > 0.0) return std::min(cfg.escape_radius, g.trusted_radius);
    return g.trusted_radius;
}

Json cplx_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json spec_json(const PetalSpec& s) {
    Json j = Json::object();
    j["epsilon"] = s.sector.epsilon;
    j["theta"] = s.sector.theta;
    j["gamma"] = s.gamma;
    j["delta"] = s.delta;
    j["delta_prime"] = s.delta_prime;
    j["r"] = s.r;
    Json c = Json::object();
    if (s.constants.eta) c["eta"] = *s.constants.eta;
    if (s.constants.rho) c["rho"] = *s.constants.rho;
    if (s.constants.K) c["K"] = *s.constants.K;
    if (s.constants.K_prime) c["K_prime"] = *s.constants.K_prime;
    if (s.constants.c) c["c"] = *s.constants.c;
    if (s.constants.C_big) c["C"] = *s.constants.C_big;
    if (s.constants.kappa) c["kappa"] = *s.constants.kappa;
    j["constants"] = c;
    return j;
}

Json germ_json(const Germ& g) {
    Json j = Json::object();
    j["n"] = g.n;
    j["M"] = g.M;
    Json a = Json::array();
    for (const Complex& ai : g.a) a.push_back(cplx_json(ai));
    j["a"] = a;
    Json terms = Json::array();
    for (const Poly& p : g.A) terms.push_back(p.terms.size());
    j["A_terms"] = terms;
    j["truncation_degree"] = g.truncation_degree;
    j["trusted_radius"] = g.trusted_radius;
    return j;
}

// ---- config parsing -------------------------------------------------------

void check_keys(const Json& j, const char* where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + it.key() + "'");
    }
}

const Json* find_field(const Json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double get_double(const Json& j, const char* where) {
    if (!j.is_number()) throw ConfigError(std::string(where) + ": expected a number");
    return j.get<double>();
}

std::int64_t get_int(const Json& j, const char* where) {
    if (!j.is_number_integer()) throw ConfigError(std::string(where) + ": expected an integer");
    return j.get<std::int64_t>();
}

Complex get_complex(const Json& j, const char* where) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return Complex(j[0].get<double>(), j[1].get<double>());
    throw ConfigError(std::string(where) + ": expected a number or an [re, im] pair");
}

Germ parse_germ(const Json& jg) {
    check_keys(jg, "germ",
               {"n", "M", "a", "A", "truncation_degree", "trusted_radius", "normalize"});
    const Json* jn = find_field(jg, "n");
    if (!jn) throw ConfigError("germ: missing key 'n'");
    std::int64_t n = get_int(*jn, "germ.n");
    if (n < 1 || n > 16) throw ConfigError("germ.n: must be in [1, 16]");

    const Json* jM = find_field(jg, "M");
    if (!jM || !jM->is_array() || std::int64_t(jM->size()) != n)
        throw ConfigError("germ.M: expected an array of n integers");
    MultiIndex M;
    for (const Json& e : *jM) {
        std::int64_t v = get_int(e, "germ.M entry");
        if (v < 0) throw ConfigError("germ.M entry: must be >= 0");
        M.push_back(v);
    }

    const Json* ja = find_field(jg, "a");
    if (!ja || !ja->is_array() || std::int64_t(ja->size()) != n)
        throw ConfigError("germ.a: expected an array of n entries");
    ComplexPoint a;
    for (const Json& e : *ja) a.push_back(get_complex(e, "germ.a entry"));

    std::vector<Poly> A(std::size_t(n), Poly::zero(std::int32_t(n)));
    std::int32_t max_deg = 0;
    if (const Json* jA = find_field(jg, "A")) {
        if (!jA->is_array() || std::int64_t(jA->size()) != n)
            throw ConfigError("germ.A: expected an array of n monomial lists");
        for (std::int64_t i = 0; i < n; ++i) {
            const Json& lst = (*jA)[std::size_t(i)];
            if (!lst.is_array()) throw ConfigError("germ.A[i]: expected a list of monomials");
            std::vector<std::pair<Expo, Complex>> raw;
            for (const Json& mono : lst) {
                if (!mono.is_array() || mono.size() < 2 || mono.size() > 3 ||
                    !mono[0].is_array())
                    throw ConfigError("germ.A monomial: expected [[e_1..e_n], re] or "
                                      "[[e_1..e_n], re, im]");
                const Json& je = mono[0];
                if (std::int64_t(je.size()) != n)
                    throw ConfigError("germ.A monomial: exponent vector length != n");
                Expo e;
                std::int32_t deg = 0;
                for (const Json& ek : je) {
                    std::int64_t v = get_int(ek, "germ.A exponent");
                    if (v < 0 || v > 64) throw ConfigError("germ.A exponent: must be in [0, 64]");
                    e.push_back(std::int32_t(v));
                    deg += std::int32_t(v);
                }
                if (deg == 0) throw ConfigError("germ.A monomial: constant term not allowed");
                max_deg = std::max(max_deg, deg);
                double re = get_double(mono[1], "germ.A coefficient");
                double im = mono.size() == 3 ? get_double(mono[2], "germ.A coefficient") : 0.0;
                raw.emplace_back(std::move(e), Complex(re, im));
            }
            A[std::size_t(i)] = poly_normalize(std::int32_t(n), std::move(raw));
        }
    }

    std::int64_t trunc = max_deg;
    if (const Json* jt = find_field(jg, "truncation_degree")) {
        trunc = get_int(*jt, "germ.truncation_degree");
        if (trunc < max_deg) throw ConfigError("germ.truncation_degree: below the degree of A");
    }
    const Json* jr = find_field(jg, "trusted_radius");
    if (!jr) throw ConfigError("germ: missing key 'trusted_radius'");
    double radius = get_double(*jr, "germ.trusted_radius");
    if (!(radius > 0.0)) throw ConfigError("germ.trusted_radius: must be > 0");

    Germ g = make_germ(std::int32_t(n), std::move(M), std::move(a), std::move(A),
                       std::int32_t(trunc), radius);
    if (const Json* jz = find_field(jg, "normalize")) {
        if (!jz->is_boolean()) throw ConfigError("germ.normalize: expected a boolean");
        if (jz->get<bool>()) g = normalize(g).germ;
    }
    return g;
}

std::optional<double> parse_override(const Json& jp, const char* key, double lo, double hi) {
    const Json* j = find_field(jp, key);
    if (!j) return std::nullopt;
    double v = get_double(*j, (std::string("petal.") + key).c_str());
    if (!(v > lo && v < hi))
        throw ConfigError(std::string("petal.") + key + ": out of range");
    return v;
}

std::int64_t parse_count(const Json& doc, const char* key, std::int64_t dflt) {
    const Json* j = find_field(doc, key);
    if (!j) return dflt;
    std::int64_t v = get_int(*j, key);
    if (v < 1) throw ConfigError(std::string(key) + ": sample sizes and budgets must be >= 1");
    return v;
}

double parse_tol(const Json& doc, const char* key, double dflt) {
    const Json* j = find_field(doc, key);
    if (!j) return dflt;
    double v = get_double(*j, key);
    if (!(v > 0.0)) throw ConfigError(std::string(key) + ": tolerances must be > 0");
    return v;
}

// ---- csv ------------------------------------------------------------------

std::string fmt_cell(double v) { return format_double(v); }

std::vector<std::string> coord_header(int n, std::vector<std::string> pre,
                                      std::vector<std::string> post) {
    std::vector<std::string> h = std::move(pre);
    for (int i = 1; i <= n; ++i) {
        h.push_back("re_x" + std::to_string(i));
        h.push_back("im_x" + std::to_string(i));
    }
    for (std::string& s : post) h.push_back(std::move(s));
    return h;
}

void push_coords(std::vector<std::string>& row, const ComplexPoint& x) {
    for (const Complex& xi : x) {
        row.push_back(fmt_cell(xi.real()));
        row.push_back(fmt_cell(xi.imag()));
    }
}

// ---- sampling -------------------------------------------------------------

ComplexPoint draw_polydisc_uniform(double radius, std::size_t n, Sampler& s) {
    const std::vector<double>& t = s.next();
    ComplexPoint x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::polar(radius * std::sqrt(t[2 * i]), kTwoPi * t[2 * i + 1] - M_PI);
    return x;
}

// Uniform polydisc point staying a relative band away from the polydisc rim
// and from the coordinate hyperplanes that carry the fixed set.
ComplexPoint draw_covering_point(double radius, double band, const Germ& g, Sampler& s,
                                 int max_tries = 400) {
    const std::size_t n = std::size_t(g.n);
    for (int k = 0; k < max_tries; ++k) {
        ComplexPoint x = draw_polydisc_uniform(radius * (1.0 - band), n, s);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i)
            if (g.M[i] > 0 && std::abs(x[i]) < band * radius) ok = false;
        if (ok) return x;
    }
    throw EmptySample("draw_covering_point: rejection budget exhausted");
}

PetalSpec calibrate_forward(const ExperimentConfig& cfg, const Germ& g,
                            const LatticeData& lat) {
    CalibrationConfig cc;
    cc.sample_size = int(std::min<std::int64_t>(cfg.calib_samples, 100000));
    cc.seed = sub_seed(cfg.seed, 0xca11);
    if (cfg.theta) cc.theta = *cfg.theta;
    if (cfg.delta) cc.delta_override = *cfg.delta;
    PetalSpec spec = calibrate_petal(g, lat, cc);
    if (cfg.epsilon) spec.sector.epsilon = *cfg.epsilon;
    if (cfg.theta) spec.sector.theta = *cfg.theta;
    if (cfg.gamma) spec.gamma = *cfg.gamma;
    if (cfg.delta) spec.delta = *cfg.delta;
    if (cfg.delta_prime) spec.delta_prime = *cfg.delta_prime;
    if (cfg.r) spec.r = *cfg.r;
    return spec;
}

} // namespace

// ---- public helpers -------------------------------------------------------

std::string csv_escape(const std::string& field) {
    bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

const char* label_name(LabelKind k) {
    switch (k) {
        case LabelKind::FixedSet: return "FixedSet";
        case LabelKind::OmegaPlus: return "OmegaPlus";
        case LabelKind::OmegaMinus: return "OmegaMinus";
        case LabelKind::Escaped: return "Escaped";
        case LabelKind::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

ExperimentConfig parse_config(const Json& doc) {
    check_keys(doc, "config",
               {"germ", "petal", "samples", "pair_samples", "net_per_component",
                "orbit_budget", "flower_budget", "calib_samples", "seed", "tolerance",
                "conjugacy_tol", "check_tolerance", "escape_radius", "out_dir"});
    const Json* jg = find_field(doc, "germ");
    if (!jg) throw ConfigError("config: missing key 'germ'");
    ExperimentConfig cfg;
    cfg.germ = parse_germ(*jg);

    if (const Json* jp = find_field(doc, "petal")) {
        check_keys(*jp, "petal", {"epsilon", "theta", "gamma", "delta", "delta_prime", "r"});
        cfg.epsilon = parse_override(*jp, "epsilon", 0.0, 1.0);
        cfg.theta = parse_override(*jp, "theta", 0.0, M_PI / 2.0);
        cfg.gamma = parse_override(*jp, "gamma", 0.0, 64.0);
        cfg.delta = parse_override(*jp, "delta", 0.0, 1e6);
        cfg.delta_prime = parse_override(*jp, "delta_prime", 0.0, 1e6);
        cfg.r = parse_override(*jp, "r", 0.0, 1.0);
    }

    cfg.samples = parse_count(doc, "samples", cfg.samples);
    cfg.pair_samples = parse_count(doc, "pair_samples", cfg.pair_samples);
    cfg.net_per_component = parse_count(doc, "net_per_component", cfg.net_per_component);
    cfg.orbit_budget = parse_count(doc, "orbit_budget", cfg.orbit_budget);
    cfg.flower_budget = parse_count(doc, "flower_budget", cfg.flower_budget);
    cfg.calib_samples = parse_count(doc, "calib_samples", cfg.calib_samples);

    if (const Json* js = find_field(doc, "seed")) {
        if (!js->is_number_integer() && !js->is_number_unsigned())
            throw ConfigError("seed: expected an integer");
        cfg.seed = js->get<std::uint64_t>();
    }

    cfg.tolerance = parse_tol(doc, "tolerance", cfg.tolerance);
    cfg.conjugacy_tol = parse_tol(doc, "conjugacy_tol", cfg.conjugacy_tol);
    cfg.check_tolerance = parse_tol(doc, "check_tolerance", cfg.check_tolerance);
    if (const Json* je = find_field(doc, "escape_radius")) {
        cfg.escape_radius = get_double(*je, "escape_radius");
        if (cfg.escape_radius < 0.0) throw ConfigError("escape_radius: must be >= 0");
    }
    if (const Json* jo = find_field(doc, "out_dir")) {
        if (!jo->is_string()) throw ConfigError("out_dir: expected a string");
        cfg.out_dir = jo->get<std::string>();
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("config: cannot open " + path);
    Json doc;
    try {
        doc = Json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse: " + std::string(e.what()));
    }
    return parse_config(doc);
}

// ---- classification -------------------------------------------------------

PetalPair calibrate_pair(const ExperimentConfig& cfg, const Germ& g,
                         const LatticeData& lat) {
    PetalPair pair;
    pair.forward = calibrate_forward(cfg, g, lat);
    CalibrationConfig cc;
    cc.sample_size = int(std::min<std::int64_t>(cfg.calib_samples, 100000));
    cc.seed = sub_seed(cfg.seed, 0xca12);
    if (cfg.theta) cc.theta = *cfg.theta;
    pair.backward = calibrate_petal(inverse_germ_series(g), lat, cc);
    return pair;
}

ClassificationLabel classify_point(const ComplexPoint& x0, const Germ& g,
                                   const LatticeData& lat, const PetalPair& specs,
                                   const ClassifyBudgets& budgets) {
    const std::size_t n = std::size_t(g.n);
    for (std::size_t i = 0; i < n; ++i)
        if (g.M[i] > 0 && x0[i] == Complex(0.0))
            return {LabelKind::FixedSet, -1, 0};

    const double eps_f = specs.forward.sector.epsilon;
    const double eps_b = specs.backward.sector.epsilon;
    const double esc = budgets.escape_radius;

    if (std::abs(monomial(x0, g.M)) < eps_f)
        if (std::optional<int> ell = in_U(x0, g, specs.forward, lat))
            return {LabelKind::OmegaPlus, *ell, 0};

    bool fwd_escaped = false;
    {
        ComplexPoint x = x0, next(n);
        for (std::int64_t j = 1; j <= budgets.forward; ++j) {
            evaluate_into(g, x, next);
            x.swap(next);
            if (!all_finite(x)) {
                fwd_escaped = true;
                break;
            }
            if (std::abs(monomial(x, g.M)) < eps_f)
                if (std::optional<int> ell = in_U(x, g, specs.forward, lat))
                    return {LabelKind::OmegaPlus, *ell, j};
            if (sup_norm(x) > esc) {
                fwd_escaped = true;
                break;
            }
        }
    }

    if (std::abs(monomial(x0, g.M)) < eps_b)
        if (std::optional<int> ell = in_U_mirror(x0, g, specs.backward, lat))
            return {LabelKind::OmegaMinus, *ell, 0};

    bool bwd_escaped = false;
    {
        ComplexPoint x = x0;
        for (std::int64_t j = 1; j <= budgets.backward; ++j) {
            try {
                x = evaluate_inverse(g, x, budgets.inverse_tol);
            } catch (const NoConvergence&) {
                break;
            }
            if (!all_finite(x)) {
                bwd_escaped = true;
                break;
            }
            if (std::abs(monomial(x, g.M)) < eps_b)
                if (std::optional<int> ell = in_U_mirror(x, g, specs.backward, lat))
                    return {LabelKind::OmegaMinus, *ell, j};
            if (sup_norm(x) > esc) {
                bwd_escaped = true;
                break;
            }
        }
    }

    if (fwd_escaped && bwd_escaped) return {LabelKind::Escaped, -1, 0};
    return {LabelKind::Undetermined, -1, 0};
}

// ---- export ---------------------------------------------------------------

void export_datasets(const RunOutput& run, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("export: cannot create " + out_dir + ": " + ec.message());

    auto write_file = [&](const std::string& name, const std::string& body) {
        fs::path p = fs::path(out_dir) / name;
        std::ofstream os(p, std::ios::binary);
        if (!os) throw Error("export: cannot open " + p.string());
        os << body;
        os.flush();
        if (!os.good()) throw Error("export: write failed: " + p.string());
    };

    write_file("report.json", run.report.dump(2) + "\n");
    for (const CsvTable& t : run.tables) {
        std::string body;
        auto append_row = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) body += ',';
                body += csv_escape(cells[i]);
            }
            body += "\r\n";
        };
        append_row(t.header);
        for (const auto& row : t.rows) append_row(row);
        write_file(t.name, body);
    }
}

// ---- 1-d flower suite -----------------------------------------------------

RunOutput verify_flower_1d(const ExperimentConfig& cfg) {
    const Germ& g = cfg.germ;
    if (g.n != 1) throw PreconditionViolated("verify_flower_1d: needs a 1-d germ");
    const int p = int(g.M[0]);
    // the shadow variable w = z^p evolves as w(1 + a w + ...) with
    // a = p * (leading coefficient); the sector, the envelope bound and the
    // limit j w_j -> -1/a all live on that scale
    const Complex a = double(p) * g.a[0];
    const SectorSpec sec{cfg.epsilon.value_or(0.05), cfg.theta.value_or(M_PI / 4.0)};
    const std::int64_t budget = cfg.flower_budget;
    const std::int64_t quota = cfg.net_per_component;

    // net the tilde-sector, bucketed by component; keep the shadow scale
    // |a z^p| large enough that the budget reaches the limit regime (the
    // residual of j z_j^p decays like 1/(s j), so s >= 400/budget leaves
    // a factor ~4 under the default 1e-2 check)
    const double s_max = sec.epsilon * (1.0 - 1e-9);
    double s_min = std::max(400.0 / double(budget), sec.epsilon * 1e-2);
    if (s_min > 0.5 * s_max) s_min = 0.5 * s_max;
    Sampler smp(sub_seed(cfg.seed, 0xf1), 2);
    auto net = std::vector<std::vector<Complex>>(std::size_t(p));
    {
        std::int64_t filled = 0;
        const std::int64_t want = quota * p;
        for (std::int64_t tries = 0; tries < 2000 * want && filled < want; ++tries) {
            const std::vector<double>& t = smp.next();
            double s = s_min * std::pow(s_max / s_min, t[0]);
            double rho = std::pow(s / std::abs(a), 1.0 / double(p));
            Complex z = std::polar(rho, kTwoPi * t[1] - M_PI);
            std::optional<int> comp = in_S_tilde(z, a, p, sec);
            if (!comp) continue;
            auto& bucket = net[std::size_t(*comp)];
            if (std::int64_t(bucket.size()) < quota) {
                bucket.push_back(z);
                ++filled;
            }
        }
    }

    int components_detected = 0;
    for (const auto& b : net)
        if (!b.empty()) ++components_detected;

    struct PointStats {
        int comp = 0;
        Complex z0;
        std::int64_t invariance_violations = 0;
        double max_ratio = 0.0;
        double max_ratio_even = 0.0;  // even steps only, the fit half
        double limit_residual = 0.0;
        bool limit_finite = false;
        bool grew_first = false;
        std::int64_t reentry_j = 0;  // 0: not applicable or not found
    };
    std::vector<PointStats> stats;

    CsvTable points{"flower_points.csv",
                    {"component", "re_z0", "im_z0", "invariance_violations", "max_ratio",
                     "limit_residual", "reentry_j"},
                    {}};
    CsvTable trace{"flower_orbits.csv", {"component", "j", "re(z)", "im(z)", "|z|^p*j"}, {}};

    ComplexPoint x(1), nx(1);
    for (int comp = 0; comp < p; ++comp) {
        for (std::size_t k = 0; k < net[std::size_t(comp)].size(); ++k) {
            const Complex z0 = net[std::size_t(comp)][k];
            PointStats st;
            st.comp = comp;
            st.z0 = z0;
            const double z0p = std::pow(std::abs(z0), p);
            const bool tracing = (k == 0);
            std::int64_t next_cp = 17;
            x[0] = z0;
            Complex z = z0;
            for (std::int64_t j = 1; j <= budget; ++j) {
                evaluate_into(g, x, nx);
                x.swap(nx);
                z = x[0];
                if (z == Complex(0.0) || !all_finite(x)) {
                    ++st.invariance_violations;
                    break;
                }
                std::optional<int> cj = in_S_tilde(z, a, p, sec);
                if (!cj || *cj != comp) ++st.invariance_violations;
                double zp = std::pow(std::abs(z), p);
                double ratio = zp * (1.0 + std::abs(a) * double(j) * z0p) / z0p;
                st.max_ratio = std::max(st.max_ratio, ratio);
                if ((j & 1) == 0) st.max_ratio_even = std::max(st.max_ratio_even, ratio);
                if (j == 1) st.grew_first = std::abs(z) > std::abs(z0);
                if (st.grew_first && st.reentry_j == 0 && std::abs(z) < std::abs(z0))
                    st.reentry_j = j;
                if (tracing && (j <= 16 || j == next_cp || j == budget)) {
                    if (j == next_cp) next_cp = std::int64_t(std::ceil(1.25 * double(next_cp)));
                    trace.rows.push_back({std::to_string(comp), std::to_string(j),
                                          fmt_cell(z.real()), fmt_cell(z.imag()),
                                          fmt_cell(zp * double(j))});
                }
                if (j == budget) {
                    Complex lim = double(j) * int_power(z, p);
                    double res = std::abs(a * lim + Complex(1.0));
                    if (std::isfinite(res)) {
                        st.limit_residual = res;
                        st.limit_finite = true;
                    }
                }
            }
            points.rows.push_back({std::to_string(comp), fmt_cell(z0.real()),
                                   fmt_cell(z0.imag()),
                                   std::to_string(st.invariance_violations),
                                   fmt_cell(st.max_ratio), fmt_cell(st.limit_residual),
                                   std::to_string(st.reentry_j)});
            stats.push_back(st);
        }
    }

    // envelope constant fitted on the even steps of every orbit, then swept
    // over all steps; adjacent steps differ by a (1 + O(|z|)) factor, well
    // inside the margin
    double c_fit = 0.0;
    for (const PointStats& st : stats) c_fit = std::max(c_fit, st.max_ratio_even);
    const double c_used = 1.25 * c_fit;
    std::int64_t bound_violations = 0, invariance_total = 0, limit_failures = 0;
    std::int64_t reentry_tracked = 0, reentry_missing = 0;
    double reentry_C = std::numeric_limits<double>::infinity();
    double limit_max = 0.0, limit_sum = 0.0;
    for (const PointStats& st : stats) {
        invariance_total += st.invariance_violations;
        if (st.max_ratio > c_used) ++bound_violations;
        if (!st.limit_finite || st.limit_residual > cfg.check_tolerance) ++limit_failures;
        if (st.limit_finite) {
            limit_max = std::max(limit_max, st.limit_residual);
            limit_sum += st.limit_residual;
        }
        if (st.grew_first) {
            ++reentry_tracked;
            if (st.reentry_j == 0)
                ++reentry_missing;
            else
                reentry_C = std::min(reentry_C, double(st.reentry_j) *
                                                    std::pow(std::abs(st.z0), p));
        }
    }
    if (!std::isfinite(reentry_C)) reentry_C = 0.0;

    const bool passed = components_detected == p && invariance_total == 0 &&
                        bound_violations == 0 && limit_failures == 0 &&
                        reentry_missing == 0 && !stats.empty();

    RunOutput out;
    out.tables.push_back(std::move(points));
    out.tables.push_back(std::move(trace));
    Json rep = Json::object();
    rep["suite"] = "flower1d";
    rep["germ"] = germ_json(g);
    rep["seed"] = cfg.seed;
    rep["p"] = p;
    rep["shadow_coefficient"] = cplx_json(a);
    rep["sector"] = Json{{"epsilon", sec.epsilon}, {"theta", sec.theta}};
    rep["orbit_budget"] = budget;
    rep["samples_per_component"] = quota;
    rep["components_detected"] = components_detected;
    rep["invariance_violations"] = invariance_total;
    rep["bound"] = Json{{"c_fit", c_fit}, {"margin", 1.25}, {"violations", bound_violations}};
    rep["limit"] = Json{{"tolerance", cfg.check_tolerance},
                        {"max_residual", limit_max},
                        {"mean_residual", stats.empty() ? 0.0 : limit_sum / double(stats.size())},
                        {"failures", limit_failures}};
    rep["reentry"] = Json{{"C_fit", reentry_C},
                          {"points_tracked", reentry_tracked},
                          {"missing", reentry_missing}};
    rep["passed"] = passed;
    out.report = std::move(rep);
    out.passed = passed;
    return out;
}

// ---- covering + conjugacy suite -------------------------------------------

namespace {

struct CoverTally {
    std::array<std::int64_t, 5> counts{};
    std::set<int> fwd_components, bwd_components;
    std::vector<std::pair<ComplexPoint, ClassificationLabel>> plus_subsample;
};

void classify_sample(const Germ& g, const LatticeData& lat, const PetalPair& pair,
                     const ClassifyBudgets& budgets, std::int64_t N, double radius,
                     double band, Sampler& s, CsvTable& table, CoverTally& tally) {
    for (std::int64_t k = 0; k < N; ++k) {
        ComplexPoint x = draw_covering_point(radius, band, g, s);
        ClassificationLabel lab = classify_point(x, g, lat, pair, budgets);
        ++tally.counts[std::size_t(lab.kind)];
        if (lab.kind == LabelKind::OmegaPlus) {
            tally.fwd_components.insert(lab.ell);
            if (tally.plus_subsample.size() < 200 && lab.steps <= 100000)
                tally.plus_subsample.emplace_back(x, lab);
        }
        if (lab.kind == LabelKind::OmegaMinus) tally.bwd_components.insert(lab.ell);
        std::vector<std::string> row{std::to_string(k)};
        push_coords(row, x);
        row.push_back(label_name(lab.kind));
        row.push_back(std::to_string(lab.ell));
        row.push_back(std::to_string(lab.steps));
        table.rows.push_back(std::move(row));
    }
}

// After capture the orbit must stay in the same component; a change would be
// a contradictory second capture.
std::int64_t capture_consistency_violations(const Germ& g, const LatticeData& lat,
                                            const PetalSpec& spec,
                                            const CoverTally& tally) {
    std::int64_t bad = 0;
    ComplexPoint x, next(std::size_t(g.n));
    for (const auto& [start, lab] : tally.plus_subsample) {
        x = start;
        for (std::int64_t j = 0; j < lab.steps; ++j) {
            evaluate_into(g, x, next);
            x.swap(next);
        }
        bool ok = true;
        for (int j = 0; j < 64 && ok; ++j) {
            std::optional<int> ell = in_U(x, g, spec, lat);
            if (!ell || *ell != lab.ell) ok = false;
            evaluate_into(g, x, next);
            x.swap(next);
        }
        if (!ok) ++bad;
    }
    return bad;
}

} // namespace

RunOutput verify_theorem_A(const ExperimentConfig& cfg) {
    const Germ& g = cfg.germ;
    if (!is_normalized(g))
        throw PreconditionViolated("verify_theorem_A: germ is not normalized");
    for (const Complex& ai : g.a)
        if (!(ai.real() < 0.0))
            throw PreconditionViolated("verify_theorem_A: needs Re a_i < 0 for every i");
    LatticeData lat = lattice_for(g.M);
    const int d = int(lat.d);
    const std::size_t n = std::size_t(g.n);
    PetalPair pair = calibrate_pair(cfg, g, lat);

    RunOutput out;
    Json rep = Json::object();
    rep["suite"] = "thmA";
    rep["germ"] = germ_json(g);
    rep["seed"] = cfg.seed;
    rep["d"] = d;
    rep["calibration"] =
        Json{{"forward", spec_json(pair.forward)}, {"backward", spec_json(pair.backward)}};

    // (1) petal invariance and orbit decay
    const std::int64_t n_inv = std::clamp<std::int64_t>(cfg.samples / 10, 1, 500);
    const std::int64_t T = 400;
    std::int64_t inv_violations = 0, conv_failures = 0, sample_shortfall = 0;
    CsvTable cloud{"petal_cloud.csv", coord_header(g.n, {"ell"}, {}), {}};
    {
        Sampler su(sub_seed(cfg.seed, 1), 2 * n + 2);
        ComplexPoint cur, next(n);
        for (int ell = 0; ell < d; ++ell) {
            for (std::int64_t k = 0; k < n_inv; ++k) {
                ComplexPoint x;
                try {
                    x = sample_U(g, lat, pair.forward, ell, su);
                } catch (const EmptySample&) {
                    ++sample_shortfall;
                    continue;
                }
                std::vector<std::string> row{std::to_string(ell)};
                push_coords(row, x);
                cloud.rows.push_back(std::move(row));
                const double y0 = std::abs(monomial(x, g.M));
                const double s0 = sup_norm(x);
                cur = x;
                bool bad = false;
                for (std::int64_t j = 0; j < T; ++j) {
                    evaluate_into(g, cur, next);
                    cur.swap(next);
                    std::optional<int> got = in_U(cur, g, pair.forward, lat);
                    if (!got || *got != ell) {
                        ++inv_violations;
                        bad = true;
                        break;
                    }
                }
                if (!bad) {
                    const double yT = std::abs(monomial(cur, g.M));
                    if (!(yT <= y0 / (1.0 + 0.25 * double(T) * y0) && sup_norm(cur) <= s0))
                        ++conv_failures;
                }
            }
        }
    }
    const bool invariance_pass = inv_violations == 0 && conv_failures == 0 &&
                                 sample_shortfall == 0;
    rep["invariance"] = Json{{"samples_per_component", n_inv},
                             {"orbit_steps", T},
                             {"violations", inv_violations},
                             {"convergence_failures", conv_failures},
                             {"sample_shortfall", sample_shortfall},
                             {"passed", invariance_pass}};

    // (2) covering of the punctured polydisc at the calibrated seed radius
    const double radius = pair.forward.delta_prime;
    const double band = 1e-3;
    ClassifyBudgets budgets;
    budgets.forward = budgets.backward = cfg.orbit_budget;
    budgets.escape_radius = escape_radius_for(cfg, g);
    CoverTally tally;
    CsvTable covering{"covering.csv", coord_header(g.n, {"k"}, {"label", "ell", "steps"}), {}};
    {
        Sampler sc(sub_seed(cfg.seed, 2), 2 * n);
        classify_sample(g, lat, pair, budgets, cfg.samples, radius, band, sc, covering, tally);
    }
    const std::int64_t covered = tally.counts[std::size_t(LabelKind::OmegaPlus)] +
                                 tally.counts[std::size_t(LabelKind::OmegaMinus)];
    const double fraction = double(covered) / double(cfg.samples);
    const std::int64_t double_capture =
        capture_consistency_violations(g, lat, pair.forward, tally);
    const bool covering_pass = fraction >= 0.999 && double_capture == 0 &&
                               int(tally.fwd_components.size()) == d &&
                               int(tally.bwd_components.size()) == d;
    rep["covering"] =
        Json{{"radius", radius},
             {"band", band},
             {"samples", cfg.samples},
             {"fixed", tally.counts[std::size_t(LabelKind::FixedSet)]},
             {"omega_plus", tally.counts[std::size_t(LabelKind::OmegaPlus)]},
             {"omega_minus", tally.counts[std::size_t(LabelKind::OmegaMinus)]},
             {"escaped", tally.counts[std::size_t(LabelKind::Escaped)]},
             {"undetermined", tally.counts[std::size_t(LabelKind::Undetermined)]},
             {"fraction", fraction},
             {"double_capture", double_capture},
             {"forward_components",
              std::vector<int>(tally.fwd_components.begin(), tally.fwd_components.end())},
             {"backward_components",
              std::vector<int>(tally.bwd_components.begin(), tally.bwd_components.end())},
             {"passed", covering_pass}};

    // (3) conjugacy defect on one chart per component
    bool conjugacy_pass = true;
    Json conj = Json::array();
    CsvTable conjcsv{"conjugacy.csv", {"ell", "re_z", "im_z", "defect"}, {}};
    {
        Sampler sw(sub_seed(cfg.seed, 3), 2 * n + 2);
        Sampler sz(sub_seed(cfg.seed, 4), 2);
        const std::int64_t n_conj = std::clamp<std::int64_t>(cfg.samples / 100, 8, 64);
        const double series_tol = std::min(cfg.tolerance, 1e-8);
        for (int ell = 0; ell < d; ++ell) {
            Json entry = Json::object();
            entry["ell"] = ell;
            try {
                ComplexPoint w;
                if (g.n > 1) {
                    ComplexPoint x0 = sample_U(g, lat, pair.forward, ell, sw, 400, 1e-3,
                                               1.5, 2.5);
                    w = phi_forward(x0, ell, g, lat, pair.forward, series_tol).w;
                }
                FatouChart chart =
                    build_chart(w, g, lat, pair.forward, ell, cfg.conjugacy_tol);
                double max_defect = 0.0;
                for (std::int64_t k = 0; k < n_conj; ++k) {
                    Complex z = sample_slice_z(w, g, lat, pair.forward, sz);
                    Complex fz = ftilde({z, w}, g, lat, pair.forward, ell, series_tol);
                    Complex defect = fatou_beta(fz, chart, g, lat, pair.forward) -
                                     fatou_beta(z, chart, g, lat, pair.forward) -
                                     Complex(1.0);
                    max_defect = std::max(max_defect, std::abs(defect));
                    conjcsv.rows.push_back({std::to_string(ell), fmt_cell(z.real()),
                                            fmt_cell(z.imag()), fmt_cell(std::abs(defect))});
                }
                Json wj = Json::array();
                for (const Complex& wk : w) wj.push_back(cplx_json(wk));
                entry["w"] = wj;
                entry["slice_radius"] = slice_radius(w, g, lat, pair.forward);
                entry["j_max"] = chart.j_max;
                entry["beta_error"] = chart.beta_error;
                entry["samples"] = n_conj;
                entry["max_defect"] = max_defect;
                entry["tolerance"] = cfg.conjugacy_tol;
                entry["passed"] = max_defect <= cfg.conjugacy_tol;
                if (max_defect > cfg.conjugacy_tol) conjugacy_pass = false;
            } catch (const Error& e) {
                entry["error"] = e.what();
                entry["passed"] = false;
                conjugacy_pass = false;
            }
            conj.push_back(std::move(entry));
        }
    }
    rep["conjugacy"] = std::move(conj);

    const bool passed = invariance_pass && covering_pass && conjugacy_pass;
    rep["passed"] = passed;
    out.report = std::move(rep);
    out.tables.push_back(std::move(cloud));
    out.tables.push_back(std::move(covering));
    out.tables.push_back(std::move(conjcsv));
    out.passed = passed;
    return out;
}

// ---- divergence suite -----------------------------------------------------

RunOutput verify_theorem_B(const ExperimentConfig& cfg) {
    const Germ& g = cfg.germ;
    if (!is_normalized(g))
        throw PreconditionViolated("verify_theorem_B: germ is not normalized");
    bool has_pos = false;
    for (const Complex& ai : g.a) has_pos = has_pos || ai.real() > 0.0;
    if (!has_pos)
        throw PreconditionViolated(
            "verify_theorem_B: needs some Re a_i > 0 (impossible for n = 1)");
    const double delta = cfg.delta.value_or(0.5 * g.trusted_radius);
    if (delta > g.trusted_radius)
        throw PreconditionViolated("verify_theorem_B: delta beyond the trusted radius");
    const std::size_t n = std::size_t(g.n);
    const std::int64_t budget = cfg.orbit_budget;

    CsvTable table{"escape_times.csv", coord_header(g.n, {"k"}, {"forward_j", "backward_j"}),
                   {}};
    Sampler s(sub_seed(cfg.seed, 5), 2 * n);
    std::int64_t fwd_failures = 0, bwd_failures = 0, solver_failures = 0;
    std::int64_t fwd_max = 0, bwd_max = 0;
    double fwd_sum = 0.0, bwd_sum = 0.0;
    // Non-escape horizons diverge at the fixed set: for M=(1,1) the forward
    // escape takes about delta/(|x1||x2|^2) steps (measured within 2% on slow
    // draws), so a clearance band b keeps the worst draw near 1/(b^3 delta^2).
    // b = 0.1 puts that at 1e5 for delta = 0.1, an order under the default
    // budget; thinner bands admit tail draws beyond any fixed budget.
    const double band = 0.1;
    ComplexPoint cur, next(n);
    for (std::int64_t k = 0; k < cfg.samples; ++k) {
        ComplexPoint x = draw_covering_point(delta, band, g, s);
        std::int64_t jf = 0, jb = 0;
        cur = x;
        for (std::int64_t j = 1; j <= budget; ++j) {
            evaluate_into(g, cur, next);
            cur.swap(next);
            if (!all_finite(cur) || sup_norm(cur) >= delta) {
                jf = j;
                break;
            }
        }
        cur = x;
        bool solver_ok = true;
        for (std::int64_t j = 1; j <= budget; ++j) {
            try {
                cur = evaluate_inverse(g, cur, 1e-11);
            } catch (const NoConvergence&) {
                solver_ok = false;
                break;
            }
            if (!all_finite(cur) || sup_norm(cur) >= delta) {
                jb = j;
                break;
            }
        }
        if (jf == 0) ++fwd_failures;
        if (!solver_ok) ++solver_failures;
        if (jb == 0 && solver_ok) ++bwd_failures;
        fwd_max = std::max(fwd_max, jf);
        bwd_max = std::max(bwd_max, jb);
        fwd_sum += double(jf);
        bwd_sum += double(jb);
        std::vector<std::string> row{std::to_string(k)};
        push_coords(row, x);
        row.push_back(std::to_string(jf));
        row.push_back(std::to_string(jb));
        table.rows.push_back(std::move(row));
    }

    const bool passed = fwd_failures == 0 && bwd_failures == 0 && solver_failures == 0;
    RunOutput out;
    Json rep = Json::object();
    rep["suite"] = "thmB";
    rep["germ"] = germ_json(g);
    rep["seed"] = cfg.seed;
    rep["delta"] = delta;
    rep["fixed_set_band"] = band;
    rep["samples"] = cfg.samples;
    rep["orbit_budget"] = budget;
    rep["forward"] = Json{{"max_steps", fwd_max},
                          {"mean_steps", fwd_sum / double(cfg.samples)},
                          {"failures", fwd_failures}};
    rep["backward"] = Json{{"max_steps", bwd_max},
                           {"mean_steps", bwd_sum / double(cfg.samples)},
                           {"failures", bwd_failures},
                           {"solver_failures", solver_failures}};
    rep["passed"] = passed;
    out.report = std::move(rep);
    out.tables.push_back(std::move(table));
    out.passed = passed;
    return out;
}

// ---- dataset producers ----------------------------------------------------

RunOutput run_calibrate(const ExperimentConfig& cfg) {
    const Germ& g = cfg.germ;
    if (!is_normalized(g)) throw PreconditionViolated("calibrate: germ is not normalized");
    LatticeData lat = lattice_for(g.M);
    const int d = int(lat.d);
    const std::size_t n = std::size_t(g.n);
    PetalPair pair = calibrate_pair(cfg, g, lat);

    const std::int64_t per = std::min<std::int64_t>(cfg.samples, 500);
    CsvTable cloud{"petal_cloud.csv", coord_header(g.n, {"ell"}, {}), {}};
    CsvTable mirror{"mirror_cloud.csv", coord_header(g.n, {"ell"}, {}), {}};
    Sampler su(sub_seed(cfg.seed, 6), 2 * n + 2);
    Sampler sm(sub_seed(cfg.seed, 7), 2 * n + 2);
    const Germ h = inverse_germ_series(g);
    const ComplexPoint L = mirror_scaling(g);
    for (int ell = 0; ell < d; ++ell) {
        for (std::int64_t k = 0; k < per; ++k) {
            ComplexPoint x = sample_U(g, lat, pair.forward, ell, su);
            std::vector<std::string> row{std::to_string(ell)};
            push_coords(row, x);
            cloud.rows.push_back(std::move(row));

            ComplexPoint u = sample_U(h, lat, pair.backward, ell, sm);
            for (std::size_t i = 0; i < n; ++i) u[i] *= L[i];
            std::vector<std::string> mrow{std::to_string(ell)};
            push_coords(mrow, u);
            mirror.rows.push_back(std::move(mrow));
        }
    }

    RunOutput out;
    Json rep = Json::object();
    rep["suite"] = "calibrate";
    rep["germ"] = germ_json(g);
    rep["seed"] = cfg.seed;
    rep["d"] = d;
    rep["forward"] = spec_json(pair.forward);
    rep["backward"] = spec_json(pair.backward);
    rep["cloud_points_per_component"] = per;
    rep["passed"] = true;
    out.report = std::move(rep);
    out.tables.push_back(std::move(cloud));
    out.tables.push_back(std::move(mirror));
    return out;
}

RunOutput run_invariants(const ExperimentConfig& cfg) {
    const Germ& g = cfg.germ;
    if (!is_normalized(g)) throw PreconditionViolated("invariants: germ is not normalized");
    for (const Complex& ai : g.a)
        if (!(ai.real() < 0.0))
            throw PreconditionViolated("invariants: needs Re a_i < 0 for every i");
    LatticeData lat = lattice_for(g.M);
    const int d = int(lat.d);
    const std::size_t n = std::size_t(g.n);
    PetalSpec spec = calibrate_forward(cfg, g, lat);
    const double tol = cfg.tolerance;

    Sampler su(sub_seed(cfg.seed, 8), 2 * n + 2);
    double kappa = 0.0;
    {
        std::vector<ComplexPoint> fit;
        const std::int64_t n_fit = std::min<std::int64_t>(cfg.samples, 200);
        for (std::int64_t k = 0; k < n_fit; ++k)
            fit.push_back(sample_U(g, lat, spec, 0, su));
        kappa = u_deviation_fit(g, lat, spec, fit);
    }

    // psi's series tolerance is absolute on g_I*u while the draws spread the
    // magnitude of g_I over decades, so each call gets the config tolerance
    // scaled by the local magnitude; the defect checks below compare against
    // the returned tail bounds and stay valid under any scaling
    auto psi_at = [&](const ComplexPoint& pt, const MultiIndex& I, int ell) {
        const double sc = 1.0 + std::abs(g_I(pt, I, ell, g, lat));
        return psi_I(pt, I, ell, g, lat, spec, tol * sc);
    };

    CsvTable inv{"psi_invariance.csv",
                 {"k", "row", "re_psi", "im_psi", "defect", "bound"},
                 {}};
    std::int64_t inv_violations = 0;
    double inv_max = 0.0;
    for (std::int64_t k = 0; k < cfg.samples; ++k) {
        const int ell = int(k % d);
        ComplexPoint x = sample_U(g, lat, spec, ell, su);
        ComplexPoint fx = evaluate(g, x);
        for (std::size_t ri = 1; ri < n; ++ri) {
            MultiIndex I(lat.Mmat[ri].begin(), lat.Mmat[ri].end());
            InvariantEval ex = psi_at(x, I, ell);
            InvariantEval ef = psi_at(fx, I, ell);
            const double defect = std::abs(ef.value - ex.value);
            const double bound = 2.0 * (ex.tail_bound + ef.tail_bound);
            if (defect > bound) ++inv_violations;
            inv_max = std::max(inv_max, defect);
            inv.rows.push_back({std::to_string(k), std::to_string(ri + 1),
                                fmt_cell(ex.value.real()), fmt_cell(ex.value.imag()),
                                fmt_cell(defect), fmt_cell(bound)});
        }
    }

    CsvTable pairs{"psi_pairs.csv", {"k", "I", "J", "defect", "bound"}, {}};
    std::int64_t pair_violations = 0;
    double pair_max = 0.0;
    {
        Sampler si(sub_seed(cfg.seed, 9), 2 * n);
        auto draw_index = [&](const std::vector<double>& t, std::size_t off) {
            MultiIndex I(n, 0);
            for (std::size_t i = 0; i < n; ++i)
                I[i] = std::int64_t(t[off + i] * 4.0);  // entries in {0..3}
            return I;
        };
        auto nonzero = [](const MultiIndex& I) {
            for (auto v : I)
                if (v != 0) return true;
            return false;
        };
        auto index_str = [](const MultiIndex& I) {
            std::string s;
            for (std::size_t i = 0; i < I.size(); ++i) {
                if (i) s += ' ';
                s += std::to_string(I[i]);
            }
            return s;
        };
        for (std::int64_t k = 0; k < cfg.pair_samples; ++k) {
            MultiIndex I, J;
            do {
                const std::vector<double>& t = si.next();
                I = draw_index(t, 0);
                J = draw_index(t, n);
            } while (!nonzero(I) || !nonzero(J));
            MultiIndex IJ(n, 0);
            for (std::size_t i = 0; i < n; ++i) IJ[i] = I[i] + J[i];
            ComplexPoint x = sample_U(g, lat, spec, 0, su);
            InvariantEval eI = psi_at(x, I, 0);
            InvariantEval eJ = psi_at(x, J, 0);
            InvariantEval eIJ = psi_at(x, IJ, 0);
            const double defect = std::abs(eI.value * eJ.value - eIJ.value);
            const double bound =
                2.0 * (eIJ.tail_bound + std::abs(eI.value) * eJ.tail_bound +
                       std::abs(eJ.value) * eI.tail_bound + eI.tail_bound * eJ.tail_bound +
                       1e-14);
            if (defect > bound) ++pair_violations;
            pair_max = std::max(pair_max, defect);
            pairs.rows.push_back({std::to_string(k), index_str(I), index_str(J),
                                  fmt_cell(defect), fmt_cell(bound)});
        }
    }

    const bool passed = inv_violations == 0 && pair_violations == 0;
    RunOutput out;
    Json rep = Json::object();
    rep["suite"] = "invariants";
    rep["germ"] = germ_json(g);
    rep["seed"] = cfg.seed;
    rep["calibration"] = spec_json(spec);
    rep["kappa"] = kappa;
    rep["tolerance"] = tol;
    rep["invariance"] = Json{{"samples", cfg.samples},
                             {"rows", std::int64_t(n) - 1},
                             {"violations", inv_violations},
                             {"max_defect", inv_max}};
    rep["multiplicativity"] = Json{{"pairs", cfg.pair_samples},
                                   {"violations", pair_violations},
                                   {"max_defect", pair_max}};
    rep["passed"] = passed;
    out.report = std::move(rep);
    out.tables.push_back(std::move(inv));
    out.tables.push_back(std::move(pairs));
    out.passed = passed;
    return out;
}

RunOutput run_fatou(const ExperimentConfig& cfg) {
    const Germ& g = cfg.germ;
    if (!is_normalized(g)) throw PreconditionViolated("fatou: germ is not normalized");
    for (const Complex& ai : g.a)
        if (!(ai.real() < 0.0))
            throw PreconditionViolated("fatou: needs Re a_i < 0 for every i");
    LatticeData lat = lattice_for(g.M);
    const int d = int(lat.d);
    const std::size_t n = std::size_t(g.n);
    PetalSpec base = calibrate_forward(cfg, g, lat);
    const double series_tol = std::min(cfg.tolerance, 1e-8);
    const std::int64_t n_pts = std::clamp<std::int64_t>(cfg.samples, 8, 64);

    std::vector<std::string> chead{"ell"};
    for (std::size_t i = 1; i < n; ++i) {
        chead.push_back("re_w" + std::to_string(i));
        chead.push_back("im_w" + std::to_string(i));
    }
    for (const char* c : {"slice_radius", "base_point", "j_max", "beta_error", "K",
                          "K_prime", "max_defect"})
        chead.push_back(c);
    CsvTable charts{"charts.csv", std::move(chead), {}};
    CsvTable beta_tab{"beta.csv", {"ell", "re_z", "im_z", "re_beta", "im_beta"}, {}};
    CsvTable conjcsv{"conjugacy.csv", {"ell", "re_z", "im_z", "defect"}, {}};

    Sampler sw(sub_seed(cfg.seed, 10), 2 * n + 2);
    Sampler sz(sub_seed(cfg.seed, 11), 2);
    Json chj = Json::array();
    bool passed = true;
    for (int ell = 0; ell < d; ++ell) {
        PetalSpec spec = base;  // per-component copy carrying its own fits
        ComplexPoint w;
        if (g.n > 1) {
            ComplexPoint x0 = sample_U(g, lat, spec, ell, sw, 400, 1e-3, 1.5, 2.5);
            w = phi_forward(x0, ell, g, lat, spec, series_tol).w;
        }
        const double R = slice_radius(w, g, lat, spec);
        FatouChart chart = build_chart(w, g, lat, spec, ell, cfg.conjugacy_tol);

        std::vector<ChartPoint> cs;
        for (std::int64_t k = 0; k < n_pts; ++k)
            cs.push_back({sample_slice_z(w, g, lat, spec, sz), w});
        const double K = htilde_bound_fit(g, lat, spec, ell, cs);
        const double Kp = htilde_derivative_check(g, lat, spec, ell, cs);

        double max_defect = 0.0;
        for (std::int64_t k = 0; k < n_pts; ++k) {
            const Complex z = cs[std::size_t(k)].z;
            Complex b = fatou_beta(z, chart, g, lat, spec);
            Complex fz = ftilde(cs[std::size_t(k)], g, lat, spec, ell, series_tol);
            Complex defect = fatou_beta(fz, chart, g, lat, spec) - b - Complex(1.0);
            max_defect = std::max(max_defect, std::abs(defect));
            if (k < 32)
                beta_tab.rows.push_back({std::to_string(ell), fmt_cell(z.real()),
                                         fmt_cell(z.imag()), fmt_cell(b.real()),
                                         fmt_cell(b.imag())});
            conjcsv.rows.push_back({std::to_string(ell), fmt_cell(z.real()),
                                    fmt_cell(z.imag()), fmt_cell(std::abs(defect))});
        }
        if (max_defect > cfg.conjugacy_tol) passed = false;

        std::vector<std::string> row{std::to_string(ell)};
        push_coords(row, w);
        row.push_back(fmt_cell(R));
        row.push_back(fmt_cell(chart.base_point_z.real()));
        row.push_back(std::to_string(chart.j_max));
        row.push_back(fmt_cell(chart.beta_error));
        row.push_back(fmt_cell(K));
        row.push_back(fmt_cell(Kp));
        row.push_back(fmt_cell(max_defect));
        charts.rows.push_back(std::move(row));

        Json entry = Json::object();
        entry["ell"] = ell;
        Json wj = Json::array();
        for (const Complex& wk : w) wj.push_back(cplx_json(wk));
        entry["w"] = wj;
        entry["slice_radius"] = R;
        entry["base_point"] = chart.base_point_z.real();
        entry["j_max"] = chart.j_max;
        entry["beta_error"] = chart.beta_error;
        entry["K"] = K;
        entry["K_prime"] = Kp;
        entry["samples"] = n_pts;
        entry["max_defect"] = max_defect;
        chj.push_back(std::move(entry));
    }

    RunOutput out;
    Json rep = Json::object();
    rep["suite"] = "fatou";
    rep["germ"] = germ_json(g);
    rep["seed"] = cfg.seed;
    rep["calibration"] = spec_json(base);
    rep["conjugacy_tol"] = cfg.conjugacy_tol;
    rep["charts"] = std::move(chj);
    rep["passed"] = passed;
    out.report = std::move(rep);
    out.tables.push_back(std::move(charts));
    out.tables.push_back(std::move(beta_tab));
    out.tables.push_back(std::move(conjcsv));
    out.passed = passed;
    return out;
}

RunOutput run_classify(const ExperimentConfig& cfg) {
    const Germ& g = cfg.germ;
    if (!is_normalized(g)) throw PreconditionViolated("classify: germ is not normalized");
    for (const Complex& ai : g.a)
        if (!(ai.real() < 0.0))
            throw PreconditionViolated("classify: needs Re a_i < 0 for every i");
    LatticeData lat = lattice_for(g.M);
    const std::size_t n = std::size_t(g.n);
    PetalPair pair = calibrate_pair(cfg, g, lat);

    const double radius = pair.forward.delta_prime;
    const double band = 1e-3;
    ClassifyBudgets budgets;
    budgets.forward = budgets.backward = cfg.orbit_budget;
    budgets.escape_radius = escape_radius_for(cfg, g);

    CoverTally tally;
    CsvTable labels{"labels.csv", coord_header(g.n, {"k"}, {"label", "ell", "steps"}), {}};
    Sampler sc(sub_seed(cfg.seed, 12), 2 * n);
    classify_sample(g, lat, pair, budgets, cfg.samples, radius, band, sc, labels, tally);

    RunOutput out;
    Json rep = Json::object();
    rep["suite"] = "classify";
    rep["germ"] = germ_json(g);
    rep["seed"] = cfg.seed;
    rep["radius"] = radius;
    rep["band"] = band;
    rep["samples"] = cfg.samples;
    rep["fixed"] = tally.counts[std::size_t(LabelKind::FixedSet)];
    rep["omega_plus"] = tally.counts[std::size_t(LabelKind::OmegaPlus)];
    rep["omega_minus"] = tally.counts[std::size_t(LabelKind::OmegaMinus)];
    rep["escaped"] = tally.counts[std::size_t(LabelKind::Escaped)];
    rep["undetermined"] = tally.counts[std::size_t(LabelKind::Undetermined)];
    rep["forward_components"] =
        std::vector<int>(tally.fwd_components.begin(), tally.fwd_components.end());
    rep["backward_components"] =
        std::vector<int>(tally.bwd_components.begin(), tally.bwd_components.end());
    rep["passed"] = true;
    out.report = std::move(rep);
    out.tables.push_back(std::move(labels));
    return out;
}

} // namespace flowerlab
