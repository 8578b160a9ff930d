#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowerlab/harness.hpp"

using namespace flowerlab;

namespace {

Germ worked2d() {
    return make_germ_plain(2, {1, 1}, {Complex(-0.5), Complex(-0.5)}, 0.5);
}

Germ flower1() { return make_germ_plain(1, {1}, {Complex(-1.0)}, 0.9); }

ExperimentConfig small_cfg(Germ g) {
    ExperimentConfig cfg;
    cfg.germ = std::move(g);
    cfg.samples = 200;
    cfg.pair_samples = 10;
    cfg.net_per_component = 6;
    cfg.orbit_budget = 200000;
    cfg.flower_budget = 20000;
    cfg.calib_samples = 400;
    cfg.seed = 11;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("csv escaping") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("has,comma") == "\"has,comma\"");
    CHECK(csv_escape("has\"quote") == "\"has\"\"quote\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
    CHECK(csv_escape("") == "");
}

TEST_CASE("double formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, M_PI, 1e-300, -2.5e17, 0.0, 123456789.123456789}) {
        std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("config parsing") {
    Json doc = Json::parse(R"json({
      "germ": {"n": 2, "M": [1, 1], "a": [[-0.5, 0.0], [-0.5, 0.0]],
               "A": [[[[2, 0], 0.25]], []], "trusted_radius": 0.5},
      "samples": 64, "seed": 7,
      "petal": {"epsilon": 0.03},
      "out_dir": "somewhere"
    })json");
    ExperimentConfig cfg = parse_config(doc);
    CHECK(cfg.germ.n == 2);
    CHECK(cfg.germ.A[0].terms.size() == 1);
    CHECK(cfg.germ.A[1].terms.empty());
    CHECK(cfg.germ.truncation_degree == 2);
    CHECK(cfg.samples == 64);
    CHECK(cfg.seed == 7);
    CHECK(cfg.epsilon == 0.03);
    CHECK_FALSE(cfg.theta.has_value());
    CHECK(cfg.out_dir == "somewhere");

    SUBCASE("unknown keys are rejected") {
        doc["bogus"] = 1;
        CHECK_THROWS_AS(parse_config(doc), ConfigError);
    }
    SUBCASE("unknown petal keys are rejected") {
        doc["petal"]["slack"] = 0.1;
        CHECK_THROWS_AS(parse_config(doc), ConfigError);
    }
    SUBCASE("sample sizes below one are rejected") {
        doc["samples"] = 0;
        CHECK_THROWS_AS(parse_config(doc), ConfigError);
    }
    SUBCASE("non-positive tolerances are rejected") {
        doc["tolerance"] = -1.0;
        CHECK_THROWS_AS(parse_config(doc), ConfigError);
    }
    SUBCASE("germ shape mismatches are rejected") {
        doc["germ"]["M"] = Json::array({1});
        CHECK_THROWS_AS(parse_config(doc), ConfigError);
    }
    SUBCASE("constant terms in A are rejected") {
        doc["germ"]["A"][0] = Json::parse(R"([[[0, 0], 0.25]])");
        CHECK_THROWS_AS(parse_config(doc), ConfigError);
    }
}

TEST_CASE("config accepts scalar coefficients and the normalize flag") {
    Json doc = Json::parse(R"json({
      "germ": {"n": 1, "M": [1], "a": [-2.0], "trusted_radius": 0.9, "normalize": true}
    })json");
    ExperimentConfig cfg = parse_config(doc);
    CHECK(is_normalized(cfg.germ));
    CHECK(cfg.samples == 1000);
}

TEST_CASE("config loading from disk") {
    namespace fs = std::filesystem;
    fs::path dir = fs::path("test_harness_out");
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "cfg.json", std::ios::binary);
        os << R"({"germ": {"n": 1, "M": [1], "a": [-1.0], "trusted_radius": 0.9}, "seed": 3})";
    }
    ExperimentConfig cfg = load_config((dir / "cfg.json").string());
    CHECK(cfg.germ.n == 1);
    CHECK(cfg.seed == 3);
    {
        std::ofstream os(dir / "bad.json", std::ios::binary);
        os << "{ not json";
    }
    CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("classification of 1-d flower points") {
    ExperimentConfig cfg = small_cfg(flower1());
    LatticeData lat = lattice_for(cfg.germ.M);
    PetalPair pair = calibrate_pair(cfg, cfg.germ, lat);
    ClassifyBudgets budgets;
    budgets.escape_radius = cfg.germ.trusted_radius;

    ClassificationLabel plus = classify_point({Complex(0.01)}, cfg.germ, lat, pair, budgets);
    CHECK(plus.kind == LabelKind::OmegaPlus);
    CHECK(plus.ell == 0);

    ClassificationLabel minus = classify_point({Complex(-0.01)}, cfg.germ, lat, pair, budgets);
    CHECK(minus.kind == LabelKind::OmegaMinus);
    CHECK(minus.ell == 0);

    // on the imaginary axis neither sector holds at the start; the forward
    // orbit drifts into the attracting sector after ~1/|z| steps
    ClassificationLabel drift =
        classify_point({Complex(0.0, 0.01)}, cfg.germ, lat, pair, budgets);
    CHECK(drift.kind == LabelKind::OmegaPlus);
    CHECK(drift.ell == 0);
    CHECK(drift.steps > 0);

    ClassificationLabel fixed = classify_point({Complex(0.0)}, cfg.germ, lat, pair, budgets);
    CHECK(fixed.kind == LabelKind::FixedSet);

    CHECK(std::string(label_name(LabelKind::OmegaPlus)) == "OmegaPlus");
    CHECK(std::string(label_name(LabelKind::Undetermined)) == "Undetermined");
}

TEST_CASE("classification of a worked 2-d point against a brute-force orbit") {
    ExperimentConfig cfg = small_cfg(worked2d());
    const Germ& g = cfg.germ;
    LatticeData lat = lattice_for(g.M);
    PetalPair pair = calibrate_pair(cfg, g, lat);
    ClassifyBudgets budgets;
    budgets.escape_radius = g.trusted_radius;

    ComplexPoint x0{Complex(0.0, 0.01), Complex(0.01, 0.0)};
    ClassificationLabel lab = classify_point(x0, g, lat, pair, budgets);
    CHECK(lab.kind == LabelKind::OmegaPlus);
    CHECK(lab.ell == 0);

    // brute force: iterate until the forward petal test first fires and
    // compare the capture time and component
    ComplexPoint x = x0, next(2);
    std::int64_t j = 0;
    std::optional<int> ell = in_U(x, g, pair.forward, lat);
    while (!ell && j < budgets.forward) {
        evaluate_into(g, x, next);
        x.swap(next);
        ++j;
        ell = in_U(x, g, pair.forward, lat);
    }
    REQUIRE(ell.has_value());
    CHECK(*ell == lab.ell);
    CHECK(j == lab.steps);
}

TEST_CASE("calibrate_pair applies overrides to the forward spec only") {
    ExperimentConfig cfg = small_cfg(worked2d());
    cfg.epsilon = 0.02;
    cfg.r = 0.125;
    LatticeData lat = lattice_for(cfg.germ.M);
    PetalPair pair = calibrate_pair(cfg, cfg.germ, lat);
    CHECK(pair.forward.sector.epsilon == 0.02);
    CHECK(pair.forward.r == 0.125);
    CHECK(pair.backward.sector.epsilon > 0.0);
    CHECK(pair.backward.r == 0.25);
}

TEST_CASE("1-d flower suite on z - z^2") {
    ExperimentConfig cfg = small_cfg(flower1());
    RunOutput run = verify_flower_1d(cfg);
    CHECK(run.passed);
    CHECK(run.report["components_detected"] == 1);
    CHECK(run.report["invariance_violations"] == 0);
    CHECK(run.report["limit"]["max_residual"].get<double>() < 1e-2);
    bool found_points = false, found_orbits = false;
    for (const CsvTable& t : run.tables) {
        if (t.name == "flower_points.csv") {
            found_points = true;
            CHECK(t.rows.size() == 6);
        }
        if (t.name == "flower_orbits.csv") {
            found_orbits = true;
            CHECK(t.rows.size() > 10);
        }
    }
    CHECK(found_points);
    CHECK(found_orbits);
}

TEST_CASE("1-d flower suite detects three components for p = 3") {
    Germ g = make_germ_plain(1, {3}, {Complex(1.0 / 3.0)}, 0.8);
    ExperimentConfig cfg = small_cfg(std::move(g));
    RunOutput run = verify_flower_1d(cfg);
    CHECK(run.report["components_detected"] == 3);
    CHECK(run.passed);
}

TEST_CASE("flower suite rejects higher dimensions and thmB rejects 1-d germs") {
    ExperimentConfig cfg1 = small_cfg(worked2d());
    CHECK_THROWS_AS(verify_flower_1d(cfg1), PreconditionViolated);
    ExperimentConfig cfg2 = small_cfg(flower1());
    CHECK_THROWS_AS(verify_theorem_B(cfg2), PreconditionViolated);
    ExperimentConfig cfg3 = small_cfg(worked2d());
    CHECK_THROWS_AS(verify_theorem_B(cfg3), PreconditionViolated);
}

TEST_CASE("covering suite on the 1-d flower") {
    ExperimentConfig cfg = small_cfg(flower1());
    cfg.samples = 300;
    RunOutput run = verify_theorem_A(cfg);
    CHECK(run.passed);
    CHECK(run.report["covering"]["fraction"].get<double>() >= 0.999);
    CHECK(run.report["covering"]["double_capture"] == 0);
    CHECK(run.report["covering"]["forward_components"] == std::vector<int>{0});
    CHECK(run.report["covering"]["backward_components"] == std::vector<int>{0});
    CHECK(run.report["invariance"]["violations"] == 0);
    for (const Json& entry : run.report["conjugacy"])
        CHECK(entry["passed"] == true);
}

TEST_CASE("classification run produces labels and tallies") {
    ExperimentConfig cfg = small_cfg(flower1());
    cfg.samples = 60;
    RunOutput run = run_classify(cfg);
    CHECK(run.passed);
    std::int64_t tallied = run.report["omega_plus"].get<std::int64_t>() +
                           run.report["omega_minus"].get<std::int64_t>() +
                           run.report["escaped"].get<std::int64_t>() +
                           run.report["undetermined"].get<std::int64_t>() +
                           run.report["fixed"].get<std::int64_t>();
    CHECK(tallied == 60);
    REQUIRE(run.tables.size() == 1);
    CHECK(run.tables[0].rows.size() == 60);
}

TEST_CASE("determinism: repeated runs give byte-identical outputs") {
    namespace fs = std::filesystem;
    ExperimentConfig cfg = small_cfg(flower1());
    RunOutput a = verify_flower_1d(cfg);
    RunOutput b = verify_flower_1d(cfg);
    CHECK(a.report.dump() == b.report.dump());

    fs::path da = "test_harness_out/det_a";
    fs::path db = "test_harness_out/det_b";
    fs::remove_all(da);
    fs::remove_all(db);
    export_datasets(a, da.string());
    export_datasets(b, db.string());
    CHECK(slurp(da / "report.json") == slurp(db / "report.json"));
    CHECK(slurp(da / "flower_points.csv") == slurp(db / "flower_points.csv"));
    CHECK(slurp(da / "flower_orbits.csv") == slurp(db / "flower_orbits.csv"));

    // a different seed must actually change the sampled data
    cfg.seed = 12;
    RunOutput c = verify_flower_1d(cfg);
    CHECK(c.report.dump() != a.report.dump());
}

TEST_CASE("export writes headers-only files for an empty run") {
    namespace fs = std::filesystem;
    RunOutput run;
    run.report = Json::object();
    run.report["suite"] = "empty";
    run.tables.push_back(CsvTable{"t.csv", {"a", "b"}, {}});
    fs::path dir = "test_harness_out/empty";
    fs::remove_all(dir);
    export_datasets(run, dir.string());
    CHECK(slurp(dir / "t.csv") == "a,b\r\n");
    CHECK(slurp(dir / "report.json").find("\"suite\": \"empty\"") != std::string::npos);
}
