#pragma once

// Experiment driver: config parsing, point classification against the forward
// and mirror petals, the verification suites (1-d flower, covering plus
// conjugacy, divergence), and dataset export. Everything is deterministic for
// a fixed config and seed: the sampling is quasi-random with seed-derived
// shifts, aggregation is sequential, and reports carry no timestamps, so a
// repeated run reproduces the output files byte for byte.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowerlab/domains.hpp"
#include "flowerlab/germ.hpp"
#include "flowerlab/lattice.hpp"

namespace flowerlab {

using Json = nlohmann::ordered_json;

struct ExperimentConfig {
    Germ germ;

    // petal overrides, force-set on the calibrated spec when present
    std::optional<double> epsilon;
    std::optional<double> theta;
    std::optional<double> gamma;
    std::optional<double> delta;
    std::optional<double> delta_prime;
    std::optional<double> r;

    std::int64_t samples = 1000;          // main sample count
    std::int64_t pair_samples = 100;      // multiplicativity pairs
    std::int64_t net_per_component = 50;  // 1-d flower net size per component
    std::int64_t orbit_budget = 1000000;  // forward/backward iteration cap
    std::int64_t flower_budget = 100000;  // 1-d orbit length
    std::int64_t calib_samples = 2000;
    std::uint64_t seed = 1;

    double tolerance = 1e-8;        // series tolerance (invariants, inversion)
    double conjugacy_tol = 1e-3;    // chart defect scale passed to build_chart
    double check_tolerance = 1e-2;  // pass threshold for limit residuals
    double escape_radius = 0.0;     // 0 means the germ's trusted radius

    std::string out_dir = "out";
};

// Parse and validate the JSON config document. Germ schema: n, M, a (re/im
// pairs, or plain numbers for real entries), A per component as a list of
// [[e_1..e_n], re, im] monomials, truncation_degree, trusted_radius, and an
// optional normalize flag that rescales to <a,M> = -1 on load. Unknown keys,
// shape mismatches, sample sizes < 1 and tolerances <= 0 throw ConfigError.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

enum class LabelKind { FixedSet, OmegaPlus, OmegaMinus, Escaped, Undetermined };

const char* label_name(LabelKind k);

struct ClassificationLabel {
    LabelKind kind = LabelKind::Undetermined;
    int ell = -1;             // petal component, only for OmegaPlus/OmegaMinus
    std::int64_t steps = 0;   // capture index (forward or backward)
};

// Forward petal spec for the germ itself plus a spec calibrated on the
// inverse-series germ, whose mirror windows classify the backward dynamics.
struct PetalPair {
    PetalSpec forward;
    PetalSpec backward;
};

struct ClassifyBudgets {
    std::int64_t forward = 1000000;
    std::int64_t backward = 1000000;
    double escape_radius = 0.5;
    double inverse_tol = 1e-11;
};

// Label one point. Exact zeros of x^M are FixedSet. A forward orbit entering
// some U_ell (tested from the start point on) is OmegaPlus(ell). Otherwise a
// backward orbit, stepped with the exact inverse, entering a mirror petal is
// OmegaMinus(ell). Otherwise Escaped when both orbits blew past
// escape_radius, Undetermined when a budget ran out first.
ClassificationLabel classify_point(const ComplexPoint& x, const Germ& g,
                                   const LatticeData& lat, const PetalPair& specs,
                                   const ClassifyBudgets& budgets);

// Calibrate the forward petal, apply the config overrides to it, then
// calibrate the inverse-series germ for the backward side (its own numbers,
// no overrides, since overrides tuned for f rarely fit f^{-1}).
PetalPair calibrate_pair(const ExperimentConfig& cfg, const Germ& g,
                         const LatticeData& lat);

struct CsvTable {
    std::string name;  // file name under the output directory
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct RunOutput {
    Json report;  // written as report.json; field order is fixed by insertion
    std::vector<CsvTable> tables;
    bool passed = true;
};

// RFC-4180: quote when the field holds a comma, a quote or a line break.
std::string csv_escape(const std::string& field);
// Shortest round-trip decimal for the table cells; deterministic.
std::string format_double(double v);

// 1-d flower suite: nets every component of the tilde-sector, runs the orbit
// to the budget, and reports component invariance, the fitted decay envelope
// c, the limit of j (f^oj)^p, and the re-entry constant. Failures are rows in
// the report, not exceptions; requires n = 1.
RunOutput verify_flower_1d(const ExperimentConfig& cfg);

// Covering and conjugacy suite: calibrates both petal sides, checks petal
// invariance and orbit decay, classifies a polydisc sample (radius = the
// calibrated delta_prime, boundary band excluded), and measures the Fatou
// conjugacy defect on one chart per component. Needs every Re a_i < 0.
RunOutput verify_theorem_A(const ExperimentConfig& cfg);

// Divergence suite: every sampled point of the delta-polydisc off the fixed
// set must leave it both forward and backward within the budget. Needs some
// Re a_i > 0 (impossible for n = 1 after normalization, so 1-d configs are
// rejected by the same test).
RunOutput verify_theorem_B(const ExperimentConfig& cfg);

// Dataset producers behind the remaining CLI subcommands.
RunOutput run_calibrate(const ExperimentConfig& cfg);
RunOutput run_invariants(const ExperimentConfig& cfg);
RunOutput run_fatou(const ExperimentConfig& cfg);
RunOutput run_classify(const ExperimentConfig& cfg);

// Write report.json and every table under out_dir, creating it if needed.
// An empty run still writes the headers. I/O failures surface as Error with
// the system message.
void export_datasets(const RunOutput& run, const std::string& out_dir);

} // namespace flowerlab
