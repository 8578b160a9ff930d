// Command-line front end: each subcommand loads a JSON config, runs one
// suite, and writes report.json plus the CSV datasets into the output
// directory. Exit code 0 when the suite passed, 2 when it ran but failed its
// checks, 1 on any error (bad config, precondition, I/O).

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "flowerlab/harness.hpp"

using namespace flowerlab;

int main(int argc, char** argv) {
    CLI::App app{"petal-domain laboratory"};
    app.require_subcommand(1);

    struct Common {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> out;
    };

    struct Cmd {
        const char* name;
        const char* blurb;
        RunOutput (*run)(const ExperimentConfig&);
        Common opts;
    };
    Cmd cmds[] = {
        {"flower1d", "1-d sector decomposition and orbit asymptotics", verify_flower_1d, {}},
        {"calibrate", "petal calibration report and point clouds", run_calibrate, {}},
        {"invariants", "sectorial invariant checks", run_invariants, {}},
        {"fatou", "Fatou chart construction and conjugacy defects", run_fatou, {}},
        {"classify", "orbit classification over the seed polydisc", run_classify, {}},
        {"thmA", "petal covering and conjugacy suite", verify_theorem_A, {}},
        {"thmB", "divergence suite for mixed-sign germs", verify_theorem_B, {}},
    };

    for (Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.blurb);
        sub->add_option("--config", c.opts.config, "JSON experiment config")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", c.opts.seed, "override the config seed");
        sub->add_option("--out", c.opts.out, "override the output directory");
    }

    CLI11_PARSE(app, argc, argv);

    for (Cmd& c : cmds) {
        if (!app.get_subcommand(c.name)->parsed()) continue;
        try {
            ExperimentConfig cfg = load_config(c.opts.config);
            if (c.opts.seed) cfg.seed = *c.opts.seed;
            if (c.opts.out) cfg.out_dir = *c.opts.out;
            RunOutput run = c.run(cfg);
            export_datasets(run, cfg.out_dir);
            std::printf("%s: %s (report in %s)\n", c.name,
                        run.passed ? "passed" : "FAILED", cfg.out_dir.c_str());
            return run.passed ? 0 : 2;
        } catch (const Error& e) {
            std::fprintf(stderr, "%s: error: %s\n", c.name, e.what());
            return 1;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "%s: error: %s\n", c.name, e.what());
            return 1;
        }
    }
    return 1;
}
