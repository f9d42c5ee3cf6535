// Command-line front end. Precedence: built-in defaults, then the --config
// file, then explicit flags.

#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ccrisk/ccrisk.hpp"

namespace {

// Routes a flag value through the same parser the config file uses, so both
// sources accept identical syntax (including a/b ratios for probabilities).
void add_kv_option(CLI::App* sub, ccrisk::RunConfig& cfg, const std::string& flag,
                   const std::string& key, const std::string& desc,
                   const std::string& type = "VALUE") {
    sub->add_option(
           flag,
           [&cfg, key](const CLI::results_t& r) {
               ccrisk::apply_config_kv(cfg, key, r.at(0));
               return true;
           },
           desc)
        ->type_name(type);
}

void add_common(CLI::App* sub, ccrisk::RunConfig& cfg) {
    add_kv_option(sub, cfg, "--input", "input", "input study, delimited text", "FILE");
    sub->add_option("--config", "key=value config file, applied before flags")
        ->type_name("FILE");  // consumed in the pre-scan
    add_kv_option(sub, cfg, "--out", "out", "output directory (created if missing)", "DIR");
    add_kv_option(sub, cfg, "--label-column", "label-column",
                  "label column name (default: group)", "NAME");
    add_kv_option(sub, cfg, "--seed", "seed", "random seed (default: 1)", "UINT");
}

void add_analysis(CLI::App* sub, ccrisk::RunConfig& cfg) {
    add_kv_option(sub, cfg, "--folds", "folds", "cross-validation folds (default: 12)", "INT");
    add_kv_option(sub, cfg, "--l0", "l0", "loss of sending an elective patient to surgery "
                                          "(default: 1)");
    add_kv_option(sub, cfg, "--l1", "l1", "loss of missing an emergent patient (default: 7.72)");
    add_kv_option(sub, cfg, "--p1", "p1",
                  "population prevalence of emergencies; accepts a/b (default: 84/733)");
    add_kv_option(sub, cfg, "--pipelines", "pipelines",
                  "comma list among Sparse,SparseL,PC,AIC,BIC,AICPC (default: all)", "LIST");
    add_kv_option(sub, cfg, "--cutoff", "cutoff", "cutoff policy: tuned or bayes (default: tuned)",
                  "POLICY");
    add_kv_option(sub, cfg, "--bootstrap", "bootstrap",
                  "bootstrap replicates, 0 disables (default: 2000)", "INT");
    sub->add_flag_callback(
        "--bootstrap-refit", [&cfg] { cfg.bootstrap_refit = true; },
        "refit the whole cross-validated pipeline in every bootstrap replicate");
    add_kv_option(sub, cfg, "--level", "level", "confidence level (default: 0.90)");
    sub->add_flag_callback(
        "--stratified", [&cfg] { cfg.stratified = true; },
        "stratify the cross-validation folds by class");
    add_kv_option(sub, cfg, "--pca-k", "pca-k", "components for the PCA pipelines (default: 5)",
                  "INT");
    add_kv_option(sub, cfg, "--lambda-points", "lambda-points",
                  "penalty grid size (default: 50)", "INT");
    add_kv_option(sub, cfg, "--lambda-decades", "lambda-decades",
                  "decades the penalty grid spans (default: 4)");
    add_kv_option(sub, cfg, "--lambda-folds", "lambda-folds",
                  "inner folds for penalty selection (default: 10)", "INT");
}

}  // namespace

int main(int argc, char** argv) {
    ccrisk::RunConfig cfg;

    // Pre-scan for --config so the file's values sit between the defaults and
    // the explicit flags.
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string a = argv[i];
            if (a == "--config" && i + 1 < argc)
                ccrisk::load_config_file(cfg, argv[i + 1]);
            else if (a.rfind("--config=", 0) == 0)
                ccrisk::load_config_file(cfg, a.substr(9));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    CLI::App app{"Cost-sensitive rupture-risk classification under case-control sampling"};
    app.require_subcommand(1);

    std::function<int(const ccrisk::RunConfig&)> run;

    CLI::App* screen = app.add_subcommand(
        "screen", "Univariate screening: Mann-Whitney tests, violin data, top-feature scatter.\n"
                  "Writes screening.csv, screening.json, violin_<feature>.csv (one per "
                  "covariate),\nviolins.svg, scatter_top.csv, scatter_matrix.svg into --out.");
    add_common(screen, cfg);
    add_kv_option(screen, cfg, "--top", "top",
                  "features in the scatter export and figures (default: 16)", "INT");
    add_kv_option(screen, cfg, "--grid-points", "grid-points",
                  "density grid resolution (default: 101)", "INT");
    screen->callback([&] { run = ccrisk::cmd_screen; });

    CLI::App* evaluate = app.add_subcommand(
        "evaluate",
        "Cross-validated risk per pipeline with cutoff selection and bootstrap intervals.\n"
        "Writes summary.csv, evaluate.json, risk_curve_<pipeline>.csv, roc_<pipeline>.csv,\n"
        "intervals.csv, risk_curves.svg, roc_curves.svg, intervals.svg into --out.");
    add_common(evaluate, cfg);
    add_analysis(evaluate, cfg);
    evaluate->callback([&] { run = ccrisk::cmd_evaluate; });

    CLI::App* overlap = app.add_subcommand(
        "overlap", "Per-observation misclassification overlap across pipelines plus a 2-means "
                   "reference row.\nWrites overlap.csv, overlap.json, overlap.svg into --out.");
    add_common(overlap, cfg);
    add_analysis(overlap, cfg);
    overlap->callback([&] { run = ccrisk::cmd_overlap; });

    CLI::App* synth = app.add_subcommand(
        "synth", "Generate a known logistic population, draw a case-control study, and report\n"
                 "corrected vs uncorrected posterior error against the oracle.\nWrites "
                 "population_summary.json, synthetic_study.csv, synth_report.json into --out.");
    add_common(synth, cfg);
    add_kv_option(synth, cfg, "--l0", "l0", "loss for the reported Bayes cutoff (default: 1)");
    add_kv_option(synth, cfg, "--l1", "l1", "loss for the reported Bayes cutoff (default: 7.72)");
    add_kv_option(synth, cfg, "--synth-intercept", "synth-intercept",
                  "population intercept (default: -2.651)");
    add_kv_option(synth, cfg, "--synth-coef", "synth-coef",
                  "population slopes, comma list (default: 0.8,-0.6,0.4)", "LIST");
    add_kv_option(synth, cfg, "--synth-n0", "synth-n0", "class-0 quota (default: 500)", "INT");
    add_kv_option(synth, cfg, "--synth-n1", "synth-n1", "class-1 quota (default: 500)", "INT");
    add_kv_option(synth, cfg, "--synth-population", "synth-population",
                  "draws behind the realized-prevalence estimate (default: 100000)", "INT");
    add_kv_option(synth, cfg, "--synth-eval", "synth-eval",
                  "fresh draws behind the oracle comparison (default: 10000)", "INT");
    synth->callback([&] { run = ccrisk::cmd_synth; });

    CLI::App* importance = app.add_subcommand(
        "importance", "Full-data variable importance: Mann-Whitney panel plus SparseL, AIC and "
                      "BIC coefficients.\nWrites importance.csv, importance.json, importance.svg "
                      "into --out.");
    add_common(importance, cfg);
    add_analysis(importance, cfg);
    importance->callback([&] { run = ccrisk::cmd_importance; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        ccrisk::validate_config(cfg);
        const bool needs_input = !synth->parsed();
        if (needs_input && cfg.input.empty())
            throw ccrisk::DataError("no input file; pass --input or set input= in the config");
        return run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
