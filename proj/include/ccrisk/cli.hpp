#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccrisk/csv.hpp"
#include "ccrisk/dataset.hpp"
#include "ccrisk/errors.hpp"
#include "ccrisk/eval.hpp"
#include "ccrisk/models.hpp"
#include "ccrisk/pipeline.hpp"
#include "ccrisk/rng.hpp"
#include "ccrisk/shift.hpp"
#include "ccrisk/stats.hpp"
#include "ccrisk/svg.hpp"
#include "ccrisk/synth.hpp"

// Batch commands behind the command-line tool. Every command is a pure
// function of (input files, config, seed); data outputs are byte-identical
// across reruns. Figures are conveniences — the numbers land in delimited
// text and JSON alongside every plot.

namespace ccrisk {

struct RunConfig {
    std::string input;
    std::string out = ".";
    std::string label_column = "group";
    std::uint64_t seed = 1;
    int folds = 12;
    CostSpec cost;    // (1, 7.72)
    PriorSpec prior;  // 84/733
    std::vector<std::string> pipelines = {"Sparse", "SparseL", "PC", "AIC", "BIC", "AICPC"};
    std::string cutoff = "tuned";  // tuned | bayes
    int bootstrap = 2000;
    bool bootstrap_refit = false;
    double level = 0.90;
    bool stratified = false;
    int pca_k = 5;
    double lambda_decades = 4.0;
    int lambda_points = 50;
    int lambda_folds = 10;
    int top = 16;        // screen: scatter-export feature count
    int grid_points = 101;
    // synth population
    double synth_intercept = -2.651;
    std::vector<double> synth_coef = {0.8, -0.6, 0.4};
    int synth_n0 = 500;
    int synth_n1 = 500;
    int synth_population = 100000;  // draws behind the realized-prevalence estimate
    int synth_eval = 10000;         // fresh draws behind the oracle comparison
};

namespace cfgdetail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DataError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

inline long parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        long out = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        unsigned long long out = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "': expected a non-negative integer, got '" + v +
                        "'");
    }
}

// Accepts plain decimals and a/b ratios, so exact count-based priors like
// 84/733 survive the config file.
inline double parse_ratio(const std::string& v, const std::string& key) {
    const auto slash = v.find('/');
    if (slash == std::string::npos) return parse_double(v, "config key '" + key + "'");
    const double num = parse_double(v.substr(0, slash), "config key '" + key + "' numerator");
    const double den = parse_double(v.substr(slash + 1), "config key '" + key + "' denominator");
    if (den == 0.0) throw DataError("config key '" + key + "': zero denominator");
    return num / den;
}

inline std::vector<std::string> parse_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace cfgdetail

// One key=value assignment; keys match the long command-line flags.
inline void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    using namespace cfgdetail;
    if (key == "input") cfg.input = value;
    else if (key == "out") cfg.out = value;
    else if (key == "label-column") cfg.label_column = value;
    else if (key == "seed") cfg.seed = parse_u64(value, key);
    else if (key == "folds") cfg.folds = static_cast<int>(parse_int(value, key));
    else if (key == "l0") cfg.cost.l0 = parse_ratio(value, key);
    else if (key == "l1") cfg.cost.l1 = parse_ratio(value, key);
    else if (key == "p1") cfg.prior.p1 = parse_ratio(value, key);
    else if (key == "pipelines") cfg.pipelines = parse_list(value);
    else if (key == "cutoff") cfg.cutoff = value;
    else if (key == "bootstrap") cfg.bootstrap = static_cast<int>(parse_int(value, key));
    else if (key == "bootstrap-refit") cfg.bootstrap_refit = parse_bool(value, key);
    else if (key == "level") cfg.level = parse_ratio(value, key);
    else if (key == "stratified") cfg.stratified = parse_bool(value, key);
    else if (key == "pca-k") cfg.pca_k = static_cast<int>(parse_int(value, key));
    else if (key == "lambda-decades") cfg.lambda_decades = parse_ratio(value, key);
    else if (key == "lambda-points") cfg.lambda_points = static_cast<int>(parse_int(value, key));
    else if (key == "lambda-folds") cfg.lambda_folds = static_cast<int>(parse_int(value, key));
    else if (key == "top") cfg.top = static_cast<int>(parse_int(value, key));
    else if (key == "grid-points") cfg.grid_points = static_cast<int>(parse_int(value, key));
    else if (key == "synth-intercept") cfg.synth_intercept = parse_ratio(value, key);
    else if (key == "synth-coef") {
        cfg.synth_coef.clear();
        for (const std::string& t : parse_list(value))
            cfg.synth_coef.push_back(parse_double(t, "config key 'synth-coef'"));
    } else if (key == "synth-n0") cfg.synth_n0 = static_cast<int>(parse_int(value, key));
    else if (key == "synth-n1") cfg.synth_n1 = static_cast<int>(parse_int(value, key));
    else if (key == "synth-population") cfg.synth_population = static_cast<int>(parse_int(value, key));
    else if (key == "synth-eval") cfg.synth_eval = static_cast<int>(parse_int(value, key));
    else throw DataError("unknown config key '" + key + "'");
}

// Plain-text config: key=value per line, '#' starts a comment, blanks ignored.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected key=value, got '" + line + "'");
        try {
            apply_config_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void validate_config(const RunConfig& cfg) {
    validate_cost(cfg.cost);
    validate_prior(cfg.prior);
    if (cfg.folds < 2) throw DataError("folds must be at least 2");
    if (cfg.cutoff != "tuned" && cfg.cutoff != "bayes")
        throw DataError("cutoff policy must be 'tuned' or 'bayes', got '" + cfg.cutoff + "'");
    if (cfg.bootstrap < 0) throw DataError("bootstrap replicate count must be non-negative");
    if (!(cfg.level >= 0.0 && cfg.level < 1.0)) throw DataError("level must lie in [0,1)");
    if (cfg.pipelines.empty()) throw DataError("pipeline list is empty");
    for (const std::string& name : cfg.pipelines) pipeline_from_name(name);  // throws on typos
    if (cfg.pca_k < 1) throw DataError("pca-k must be positive");
    if (cfg.lambda_points < 2) throw DataError("lambda-points must be at least 2");
    if (cfg.lambda_folds < 2) throw DataError("lambda-folds must be at least 2");
    if (cfg.top < 1) throw DataError("top must be positive");
    if (cfg.grid_points < 2) throw DataError("grid-points must be at least 2");
}

inline PipelineSpec pipeline_spec(const RunConfig& cfg, PipelineKind kind) {
    PipelineSpec spec;
    spec.kind = kind;
    spec.pca_k = cfg.pca_k;
    spec.lambda_decades = cfg.lambda_decades;
    spec.lambda_points = cfg.lambda_points;
    spec.lambda_folds = cfg.lambda_folds;
    return spec;
}

namespace cfgdetail {

inline std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

inline void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw DataError("failed writing '" + path + "'");
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline nlohmann::json config_echo(const RunConfig& cfg) {
    return {{"seed", cfg.seed},         {"folds", cfg.folds},
            {"l0", cfg.cost.l0},        {"l1", cfg.cost.l1},
            {"p1", cfg.prior.p1},       {"cutoff", cfg.cutoff},
            {"bootstrap", cfg.bootstrap},
            {"bootstrap_refit", cfg.bootstrap_refit},
            {"level", cfg.level},       {"stratified", cfg.stratified},
            {"pca_k", cfg.pca_k},       {"lambda_points", cfg.lambda_points},
            {"lambda_decades", cfg.lambda_decades},
            {"lambda_folds", cfg.lambda_folds}};
}

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return colors;
}

constexpr const char* kElectiveColor = "#1f77b4";
constexpr const char* kEmergentColor = "#d62728";

}  // namespace cfgdetail

// ---------------------------------------------------------------------------
// screen: univariate rank tests, violin data, top-feature scatter export.

inline int cmd_screen(const RunConfig& cfg) {
    using namespace cfgdetail;
    ensure_out_dir(cfg.out);
    Study study = load_study(cfg.input, cfg.label_column);
    std::vector<ScreenRow> rows = screen_features(study);

    TextTable table;
    table.columns = {"rank", "feature", "U", "p", "method", "median_elective", "median_emergent"};
    nlohmann::json jrows = nlohmann::json::array();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const ScreenRow& row = rows[r];
        table.rows.push_back({std::to_string(r + 1), row.name, format_double(row.test.u1),
                              format_double(row.test.p), row.test.exact ? "exact" : "approx",
                              format_double(row.median0), format_double(row.median1)});
        jrows.push_back({{"rank", r + 1},
                         {"feature", row.name},
                         {"index", row.index},
                         {"U", row.test.u1},
                         {"p", row.test.p},
                         {"exact", row.test.exact},
                         {"median_elective", row.median0},
                         {"median_emergent", row.median1}});
    }
    write_delimited(table, join_path(cfg.out, "screening.csv"));
    write_json(join_path(cfg.out, "screening.json"),
               {{"input", cfg.input}, {"rows", jrows}});

    // Per-feature KDE exports, one file per covariate.
    for (int j = 0; j < study.p(); ++j) {
        ViolinPair v = violin_data(study, j, cfg.grid_points);
        TextTable vt;
        vt.columns = {"group", "value", "density"};
        for (std::size_t g = 0; g < v.elective.grid.size(); ++g)
            vt.rows.push_back({"elective", format_double(v.elective.grid[g]),
                               format_double(v.elective.density[g])});
        for (std::size_t g = 0; g < v.emergent.grid.size(); ++g)
            vt.rows.push_back({"emergent", format_double(v.emergent.grid[g]),
                               format_double(v.emergent.density[g])});
        write_delimited(vt, join_path(cfg.out, "violin_" + study.feature_names[j] + ".csv"));
    }

    const int top = std::min<int>(cfg.top, study.p());

    // Violin figure for the `top` most significant covariates.
    {
        const int cols = 4;
        const int nrows = (top + cols - 1) / cols;
        const double pw = 240, ph = 170;
        SvgWriter svg(cols * pw, nrows * ph + 30);
        svg.text(10, 20, "Per-covariate density by group (most significant first)", 14);
        for (int t = 0; t < top; ++t) {
            const ScreenRow& row = rows[t];
            ViolinPair v = violin_data(study, row.index, cfg.grid_points);
            const double x0 = (t % cols) * pw, y0 = 30 + (t / cols) * ph;
            const double cx = x0 + pw / 2;
            double dmax = 0.0;
            for (double d : v.elective.density) dmax = std::max(dmax, d);
            for (double d : v.emergent.density) dmax = std::max(dmax, d);
            const double lo = std::min(v.elective.grid.front(), v.emergent.grid.front());
            const double hi = std::max(v.elective.grid.back(), v.emergent.grid.back());
            LinearScale yscale{lo, hi, y0 + ph - 30, y0 + 24};
            const double wmax = pw * 0.42;
            auto half = [&](const ViolinHalf& h, int side, const std::string& color) {
                std::vector<std::pair<double, double>> pts;
                for (std::size_t g = 0; g < h.grid.size(); ++g)
                    pts.push_back({cx + side * (h.density[g] / dmax) * wmax, yscale(h.grid[g])});
                pts.push_back({cx, yscale(h.grid.back())});
                pts.push_back({cx, yscale(h.grid.front())});
                svg.polygon(pts, color);
                for (double q : {h.q1, h.q2, h.q3})
                    svg.line(cx + side * 2, yscale(q), cx + side * wmax * 0.5, yscale(q), "#333",
                             q == h.q2 ? 1.5 : 0.7);
            };
            half(v.elective, -1, "#aec7e8");
            half(v.emergent, +1, "#ff9896");
            svg.line(cx, yscale(lo), cx, yscale(hi), "#888", 0.5);
            svg.text(cx, y0 + 14, row.name + "  (p=" + format_fixed(row.test.p, 4) + ")", 11,
                     "middle");
        }
        svg.save(join_path(cfg.out, "violins.svg"));
    }

    // Scatter export and matrix for the `top` features.
    {
        TextTable st;
        st.columns = {cfg.label_column};
        for (int t = 0; t < top; ++t) st.columns.push_back(rows[t].name);
        for (int i = 0; i < study.n(); ++i) {
            std::vector<std::string> r = {study.labels[i] == 1 ? "emergent" : "elective"};
            for (int t = 0; t < top; ++t)
                r.push_back(format_double(study.features(i, rows[t].index)));
            st.rows.push_back(std::move(r));
        }
        write_delimited(st, join_path(cfg.out, "scatter_top.csv"));

        const double cell = top <= 8 ? 110.0 : 62.0;
        const double m = 6.0;
        SvgWriter svg(top * cell + 2 * m, top * cell + 2 * m);
        for (int a = 0; a < top; ++a) {
            for (int b = 0; b < top; ++b) {
                const double x0 = m + b * cell, y0 = m + a * cell;
                svg.rect(x0, y0, cell - 2, cell - 2, "none", "#ccc");
                if (a == b) {
                    svg.text(x0 + cell / 2, y0 + cell / 2 + 3, rows[a].name,
                             std::min(11.0, cell / 6.0), "middle");
                    continue;
                }
                const int fa = rows[a].index, fb = rows[b].index;
                double bxlo = study.features.col(fb).minCoeff(), bxhi = study.features.col(fb).maxCoeff();
                double aylo = study.features.col(fa).minCoeff(), ayhi = study.features.col(fa).maxCoeff();
                if (bxhi == bxlo) bxhi = bxlo + 1;
                if (ayhi == aylo) ayhi = aylo + 1;
                LinearScale xs{bxlo, bxhi, x0 + 3, x0 + cell - 5};
                LinearScale ys{aylo, ayhi, y0 + cell - 5, y0 + 3};
                for (int i = 0; i < study.n(); ++i)
                    svg.circle(xs(study.features(i, fb)), ys(study.features(i, fa)), 1.2,
                               study.labels[i] == 1 ? kEmergentColor : kElectiveColor);
            }
        }
        svg.save(join_path(cfg.out, "scatter_matrix.svg"));
    }

    std::cout << "screen: " << study.n() << " observations, " << study.p()
              << " covariates; most significant: " << rows.front().name
              << " (p=" << format_double(rows.front().test.p) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate: cross-validated risk per pipeline, cutoff handling, bootstrap.

struct PipelineOutcome {
    std::string name;
    bool ok = false;
    EvalReport report;
    std::string error;
};

inline PipelineOutcome evaluate_pipeline(const Study& study, const RunConfig& cfg,
                                         const std::string& name) {
    PipelineOutcome out;
    out.name = name;
    try {
        const PipelineSpec spec = pipeline_spec(cfg, pipeline_from_name(name));
        const std::uint64_t seed_p = derive_seed(cfg.seed, name);
        EvalReport& rep = out.report;
        rep.pipeline = name;
        rep.cutoff_policy = cfg.cutoff;
        rep.cv = cv_pipeline_scores(study, spec, cfg.cost, cfg.prior, cfg.folds, seed_p,
                                    cfg.stratified);
        CutoffScan scan = tune_cutoff(rep.cv.scores, study.labels, cfg.cost, cfg.prior);
        rep.bayes_reference = scan.bayes_reference;
        rep.risk_curve = scan.curve;
        rep.cutoff = cfg.cutoff == "bayes" ? scan.bayes_reference : scan.best_cutoff;
        std::tie(rep.c0, rep.c1) = conditional_errors(rep.cv.scores, study.labels, rep.cutoff);
        rep.risk = empirical_risk(rep.c0, rep.c1, cfg.cost, cfg.prior);
        rep.roc = roc_curve(rep.cv.scores, study.labels);
        if (cfg.bootstrap > 0) {
            rep.ci = cfg.bootstrap_refit
                         ? bootstrap_ci_refit(study, spec, cfg.cost, cfg.prior, cfg.folds,
                                              cfg.cutoff, cfg.bootstrap, cfg.level, seed_p,
                                              cfg.stratified)
                         : bootstrap_ci(rep.cv.scores, study.labels, rep.cutoff, cfg.cost,
                                        cfg.prior, cfg.bootstrap, cfg.level, seed_p);
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

inline int cmd_evaluate(const RunConfig& cfg) {
    using namespace cfgdetail;
    ensure_out_dir(cfg.out);
    Study study = load_study(cfg.input, cfg.label_column);

    // Pipelines are independent given their derived seeds, so they can run
    // concurrently without affecting any output.
    std::vector<std::future<PipelineOutcome>> futures;
    for (const std::string& name : cfg.pipelines)
        futures.push_back(std::async(std::launch::async, evaluate_pipeline, std::cref(study),
                                     std::cref(cfg), name));
    std::vector<PipelineOutcome> outcomes;
    for (auto& f : futures) outcomes.push_back(f.get());

    TextTable summary;
    summary.columns = {"model", "error_elective", "error_emergent", "expected_cost"};
    TextTable intervals;
    intervals.columns = {"model", "statistic", "estimate", "lo", "hi"};
    nlohmann::json jp = nlohmann::json::object();
    int failures = 0;
    for (const PipelineOutcome& o : outcomes) {
        if (!o.ok) {
            ++failures;
            std::cerr << "evaluate: pipeline " << o.name << " failed: " << o.error << "\n";
            jp[o.name] = {{"error", o.error}};
            continue;
        }
        const EvalReport& r = o.report;
        summary.rows.push_back({o.name, format_fixed(r.c0, 3), format_fixed(r.c1, 3),
                                format_fixed(r.risk.balanced, 3)});
        jp[o.name] = report_to_json(r, study.labels);
        TextTable curve;
        curve.columns = {"cutoff", "error_elective", "error_emergent", "risk", "expected_cost"};
        for (const CutoffPoint& pt : r.risk_curve)
            curve.rows.push_back({format_double(pt.cutoff), format_double(pt.c0),
                                  format_double(pt.c1), format_double(pt.risk),
                                  format_double(pt.balanced)});
        write_delimited(curve, join_path(cfg.out, "risk_curve_" + o.name + ".csv"));
        TextTable roc;
        roc.columns = {"fpr", "tpr"};
        for (const RocPoint& pt : r.roc.points)
            roc.rows.push_back({format_double(pt.fpr), format_double(pt.tpr)});
        write_delimited(roc, join_path(cfg.out, "roc_" + o.name + ".csv"));
        if (r.ci) {
            auto put = [&](const char* stat, double est, const Interval& iv) {
                intervals.rows.push_back({o.name, stat, format_double(est),
                                          format_double(iv.lo), format_double(iv.hi)});
            };
            put("error_elective", r.c0, r.ci->c0);
            put("error_emergent", r.c1, r.ci->c1);
            put("risk", r.risk.risk, r.ci->risk);
        }
    }
    write_delimited(summary, join_path(cfg.out, "summary.csv"));
    if (!intervals.rows.empty())
        write_delimited(intervals, join_path(cfg.out, "intervals.csv"));

    double bayes_ref = 0.0;
    for (const PipelineOutcome& o : outcomes)
        if (o.ok) bayes_ref = o.report.bayes_reference;
    nlohmann::json top = {{"config", config_echo(cfg)},
                          {"input", cfg.input},
                          {"bayes_reference", bayes_ref},
                          {"pipelines", jp}};
    write_json(join_path(cfg.out, "evaluate.json"), top);

    // Risk-vs-cutoff figure with the Bayes-rule cutoff as a vertical reference.
    {
        SvgWriter svg(640, 420);
        const double mx = 55, my = 35, w = 640 - mx - 30, h = 420 - my - 55;
        double rmax = 0.0;
        for (const PipelineOutcome& o : outcomes)
            if (o.ok)
                for (const CutoffPoint& pt : o.report.risk_curve) rmax = std::max(rmax, pt.risk);
        if (rmax == 0.0) rmax = 1.0;
        LinearScale xs{0, 1, mx, mx + w}, ys{0, rmax * 1.05, my + h, my};
        svg.rect(mx, my, w, h, "none", "#999");
        for (int t = 0; t <= 5; ++t) {
            const double v = t / 5.0;
            svg.line(xs(v), my + h, xs(v), my + h + 4, "#999");
            svg.text(xs(v), my + h + 16, format_fixed(v, 1), 10, "middle");
            const double rv = rmax * 1.05 * t / 5.0;
            svg.line(mx - 4, ys(rv), mx, ys(rv), "#999");
            svg.text(mx - 6, ys(rv) + 3, format_fixed(rv, 2), 10, "end");
        }
        svg.text(mx + w / 2, my + h + 34, "cutoff", 12, "middle");
        svg.text(14, my - 12, "estimated risk", 12);
        if (bayes_ref > 0.0) {
            svg.line(xs(bayes_ref), my, xs(bayes_ref), my + h, "#444", 1.0);
            svg.text(xs(bayes_ref) + 4, my + 12, "Bayes cutoff " + format_fixed(bayes_ref, 4), 10);
        }
        int ci = 0;
        for (const PipelineOutcome& o : outcomes) {
            if (!o.ok) continue;
            const std::string color = palette()[ci % palette().size()];
            std::vector<std::pair<double, double>> pts;
            for (const CutoffPoint& pt : o.report.risk_curve)
                pts.push_back({xs(std::min(1.0, pt.cutoff)), ys(pt.risk)});
            svg.polyline(pts, color, 1.4);
            svg.circle(xs(o.report.cutoff), ys(o.report.risk.risk), 3.0, color);
            svg.text(mx + w - 130, my + 16 + 14 * ci, o.name, 11, "start", color);
            ++ci;
        }
        svg.save(join_path(cfg.out, "risk_curves.svg"));
    }

    // ROC figure.
    {
        SvgWriter svg(480, 480);
        const double mx = 55, my = 35, w = 480 - mx - 30, h = 480 - my - 55;
        LinearScale xs{0, 1, mx, mx + w}, ys{0, 1, my + h, my};
        svg.rect(mx, my, w, h, "none", "#999");
        svg.line(xs(0), ys(0), xs(1), ys(1), "#bbb", 0.8);
        for (int t = 0; t <= 5; ++t) {
            const double v = t / 5.0;
            svg.text(xs(v), my + h + 16, format_fixed(v, 1), 10, "middle");
            svg.text(mx - 6, ys(v) + 3, format_fixed(v, 1), 10, "end");
        }
        svg.text(mx + w / 2, my + h + 34, "false positive rate", 12, "middle");
        svg.text(14, my - 12, "true positive rate", 12);
        int ci = 0;
        for (const PipelineOutcome& o : outcomes) {
            if (!o.ok) continue;
            const std::string color = palette()[ci % palette().size()];
            std::vector<std::pair<double, double>> pts;
            for (const RocPoint& pt : o.report.roc.points) pts.push_back({xs(pt.fpr), ys(pt.tpr)});
            svg.polyline(pts, color, 1.4);
            svg.text(mx + w - 150, my + h - 16 - 14 * ci,
                     o.name + " (AUC " + format_fixed(o.report.roc.auc, 3) + ")", 11, "start",
                     color);
            ++ci;
        }
        svg.save(join_path(cfg.out, "roc_curves.svg"));
    }

    // Bootstrap interval figure: conditional error rates per pipeline.
    if (!intervals.rows.empty()) {
        SvgWriter svg(640, 360);
        const double mx = 55, my = 35, w = 640 - mx - 30, h = 360 - my - 70;
        LinearScale ys{0, 1, my + h, my};
        svg.rect(mx, my, w, h, "none", "#999");
        for (int t = 0; t <= 5; ++t) {
            const double v = t / 5.0;
            svg.line(mx - 4, ys(v), mx, ys(v), "#999");
            svg.text(mx - 6, ys(v) + 3, format_fixed(v, 1), 10, "end");
        }
        svg.text(14, my - 12, "conditional error", 12);
        int nok = 0;
        for (const PipelineOutcome& o : outcomes) nok += o.ok && o.report.ci ? 1 : 0;
        const double slot = w / std::max(1, nok);
        int s = 0;
        for (const PipelineOutcome& o : outcomes) {
            if (!o.ok || !o.report.ci) continue;
            const double cx = mx + slot * (s + 0.5);
            auto whisker = [&](double off, double est, const Interval& iv,
                              const std::string& color) {
                svg.line(cx + off, ys(iv.lo), cx + off, ys(iv.hi), color, 1.6);
                svg.line(cx + off - 4, ys(iv.lo), cx + off + 4, ys(iv.lo), color, 1.2);
                svg.line(cx + off - 4, ys(iv.hi), cx + off + 4, ys(iv.hi), color, 1.2);
                svg.circle(cx + off, ys(est), 2.6, color);
            };
            whisker(-9, o.report.c0, o.report.ci->c0, kElectiveColor);
            whisker(+9, o.report.c1, o.report.ci->c1, kEmergentColor);
            svg.text(cx, my + h + 16, o.name, 11, "middle");
            ++s;
        }
        svg.text(mx, my + h + 40, "blue: elective error, red: emergent error; whiskers span the " +
                                      format_fixed(cfg.level * 100, 0) + "% interval",
                 10);
        svg.save(join_path(cfg.out, "intervals.svg"));
    }

    for (const PipelineOutcome& o : outcomes)
        if (o.ok)
            std::cout << "evaluate: " << o.name << "  c0=" << format_fixed(o.report.c0, 3)
                      << "  c1=" << format_fixed(o.report.c1, 3)
                      << "  expected_cost=" << format_fixed(o.report.risk.balanced, 3)
                      << "  cutoff=" << format_fixed(o.report.cutoff, 4)
                      << "  auc=" << format_fixed(o.report.roc.auc, 3) << "\n";
    return failures > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// overlap: who gets misclassified by which model, plus a 2-means row.

inline int cmd_overlap(const RunConfig& cfg) {
    using namespace cfgdetail;
    if (cfg.pipelines.size() < 2)
        throw DataError("overlap needs at least 2 pipelines, got " +
                        std::to_string(cfg.pipelines.size()));
    ensure_out_dir(cfg.out);
    Study study = load_study(cfg.input, cfg.label_column);

    std::vector<std::string> names = cfg.pipelines;
    std::vector<Eigen::VectorXi> preds;
    for (const std::string& name : names) {
        const PipelineSpec spec = pipeline_spec(cfg, pipeline_from_name(name));
        const std::uint64_t seed_p = derive_seed(cfg.seed, name);
        CvScores cv = cv_pipeline_scores(study, spec, cfg.cost, cfg.prior, cfg.folds, seed_p,
                                         cfg.stratified);
        CutoffScan scan = tune_cutoff(cv.scores, study.labels, cfg.cost, cfg.prior);
        const double cutoff = cfg.cutoff == "bayes" ? scan.bayes_reference : scan.best_cutoff;
        preds.push_back(predicted_labels(cv.scores, cutoff));
    }

    // Unsupervised reference: 2-means on standardized covariates, aligned to
    // the majority labeling.
    {
        auto [z, sc] = standardize(study);
        Kmeans2Result km = kmeans2(z.features, derive_seed(cfg.seed, "kmeans"));
        preds.push_back(align_clusters_to_labels(km.assignment, study.labels));
        names.push_back("kmeans2");
    }

    OverlapReport rep = misclassification_matrix(preds, study.labels);
    const int n = study.n(), m = static_cast<int>(names.size());

    TextTable t;
    t.columns = {"row", "observation", "group"};
    for (const std::string& nm : names) t.columns.push_back(nm);
    t.columns.push_back("intensity");
    for (int r = 0; r < n; ++r) {
        const int i = rep.order[r];
        std::vector<std::string> row = {std::to_string(r + 1), std::to_string(i + 1),
                                        study.labels[i] == 1 ? "emergent" : "elective"};
        for (int j = 0; j < m; ++j) row.push_back(std::to_string(rep.misclassified(r, j)));
        row.push_back(std::to_string(rep.intensity[r]));
        t.rows.push_back(std::move(row));
    }
    write_delimited(t, join_path(cfg.out, "overlap.csv"));

    nlohmann::json j = {{"models", names},
                        {"order", rep.order},
                        {"intensity", std::vector<int>(rep.intensity.begin(), rep.intensity.end())},
                        {"config", config_echo(cfg)}};
    nlohmann::json per_model = nlohmann::json::object();
    for (int jm = 0; jm < m; ++jm) {
        int errs = 0;
        for (int r = 0; r < n; ++r) errs += rep.misclassified(r, jm);
        per_model[names[jm]] = errs;
    }
    j["errors_per_model"] = per_model;
    write_json(join_path(cfg.out, "overlap.json"), j);

    // Strip figure: one row per model, one thin column per observation,
    // class-0 block first; the bottom row shades by intensity.
    {
        const double cw = std::max(3.0, 900.0 / n), ch = 22.0, left = 80.0, top = 40.0;
        SvgWriter svg(left + n * cw + 20, top + (m + 1) * ch + 50);
        svg.text(left, 20, "Cross-validated misclassifications (dark = wrong)", 13);
        for (int jm = 0; jm <= m; ++jm) {
            const bool intensity_row = jm == m;
            svg.text(left - 6, top + jm * ch + ch / 2 + 4,
                     intensity_row ? "intensity" : names[jm], 10, "end");
            for (int r = 0; r < n; ++r) {
                std::string fill = "#f4f4f4";
                if (intensity_row) {
                    const double frac = m == 0 ? 0.0 : static_cast<double>(rep.intensity[r]) / m;
                    const int shade = static_cast<int>(240 - 200 * frac);
                    std::ostringstream c;
                    c << "rgb(" << shade << "," << shade << "," << shade << ")";
                    fill = c.str();
                } else if (rep.misclassified(r, jm) == 1) {
                    fill = study.labels[rep.order[r]] == 1 ? kEmergentColor : kElectiveColor;
                }
                svg.rect(left + r * cw, top + jm * ch, cw - 0.5, ch - 2, fill);
            }
        }
        const double split = left + study.n0 * cw - 0.25;
        svg.line(split, top - 6, split, top + (m + 1) * ch, "#000", 1.0);
        svg.text(left, top + (m + 1) * ch + 16, "elective block (first " +
                                                    std::to_string(study.n0) + ")", 10);
        svg.text(left + n * cw, top + (m + 1) * ch + 16,
                 "emergent block (last " + std::to_string(study.n1) + ")", 10, "end");
        svg.save(join_path(cfg.out, "overlap.svg"));
    }

    std::cout << "overlap: " << n << " observations, " << m << " models (incl. kmeans2); max "
              << "intensity " << rep.intensity.maxCoeff() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// synth: generate a known population, sample case-control, check correction.

inline int cmd_synth(const RunConfig& cfg) {
    using namespace cfgdetail;
    ensure_out_dir(cfg.out);
    PopulationSpec pop;
    pop.intercept = cfg.synth_intercept;
    pop.coef = Eigen::Map<const Eigen::VectorXd>(cfg.synth_coef.data(),
                                                 static_cast<long>(cfg.synth_coef.size()));
    validate_population(pop);
    if (cfg.synth_population < 1 || cfg.synth_eval < 1)
        throw DataError("synth sample sizes must be positive");

    const double p1 = realized_p1(pop, cfg.synth_population, derive_seed(cfg.seed, "population"));
    CaseControlDraw draw =
        draw_case_control(pop, cfg.synth_n0, cfg.synth_n1, derive_seed(cfg.seed, "case-control"));
    save_study(draw.study, join_path(cfg.out, "synthetic_study.csv"), cfg.label_column);

    write_json(join_path(cfg.out, "population_summary.json"),
               {{"p", pop.p()},
                {"intercept", pop.intercept},
                {"coef", cfg.synth_coef},
                {"population_draws", cfg.synth_population},
                {"realized_p1", p1},
                {"case_control", {{"n0", draw.study.n0}, {"n1", draw.study.n1},
                                  {"stream_draws", draw.draws}}}});

    // Fit on the case-control sample, then compare corrected and uncorrected
    // posteriors against the oracle on fresh population draws.
    auto [z, sc] = standardize(draw.study);
    LogisticModel model = fit_logistic_mle(z, sc);
    PriorSpec prior;
    prior.p1 = p1;
    ShiftContext ctx = make_shift_context(draw.study.sample_prior1(), prior, cfg.cost);

    Study eval = generate_population(pop, cfg.synth_eval, derive_seed(cfg.seed, "eval"));
    Eigen::VectorXd oracle = oracle_posteriors(pop, eval.features);
    Eigen::VectorXd raw = predict_scores(model, eval.features);
    double mae_u = 0.0, mae_c = 0.0, bias_u = 0.0, bias_c = 0.0;
    for (int i = 0; i < eval.n(); ++i) {
        const double corrected = correct_posterior(raw[i], ctx.a);
        mae_u += std::abs(raw[i] - oracle[i]);
        mae_c += std::abs(corrected - oracle[i]);
        bias_u += raw[i] - oracle[i];
        bias_c += corrected - oracle[i];
    }
    mae_u /= eval.n();
    mae_c /= eval.n();
    bias_u /= eval.n();
    bias_c /= eval.n();

    write_json(join_path(cfg.out, "synth_report.json"),
               {{"realized_p1", p1},
                {"sample_prior1", draw.study.sample_prior1()},
                {"shift_factor", ctx.a},
                {"bayes_cutoff", ctx.cutoff},
                {"eval_draws", cfg.synth_eval},
                {"uncorrected", {{"mae", mae_u}, {"bias", bias_u}}},
                {"corrected", {{"mae", mae_c}, {"bias", bias_c}}}});

    std::cout << "synth: realized p1=" << format_fixed(p1, 4) << "  shift a="
              << format_fixed(ctx.a, 4) << "  corrected MAE=" << format_fixed(mae_c, 4)
              << " vs uncorrected " << format_fixed(mae_u, 4) << " (bias "
              << format_fixed(bias_u, 4) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// importance: full-data refits, coefficient magnitudes, rank-test panel.

inline int cmd_importance(const RunConfig& cfg) {
    using namespace cfgdetail;
    ensure_out_dir(cfg.out);
    Study study = load_study(cfg.input, cfg.label_column);

    struct Panel {
        std::string title;
        std::vector<ImportanceRow> rows;  // value in `standardized`, sign = direction
        bool intercept_only = false;
        std::string error;
    };
    std::vector<Panel> panels;

    {
        Panel p;
        p.title = "Mann-Whitney";
        std::vector<ScreenRow> rows = screen_features(study);
        for (const ScreenRow& r : rows) {
            ImportanceRow ir;
            ir.index = r.index;
            ir.name = r.name;
            // -log10 p as magnitude; direction = which group sits higher.
            ir.standardized = -std::log10(std::max(r.test.p, 1e-300));
            ir.raw = r.test.p;
            if (r.median1 < r.median0) ir.standardized = -ir.standardized;
            p.rows.push_back(ir);
        }
        // screen_features already sorted ascending p = descending -log p
        panels.push_back(std::move(p));
    }

    for (const std::string name : {"SparseL", "AIC", "BIC"}) {
        Panel p;
        p.title = name;
        try {
            FittedPipeline fp = fit_pipeline(study, pipeline_spec(cfg, pipeline_from_name(name)),
                                             cfg.cost, cfg.prior, derive_seed(cfg.seed, name));
            p.rows = standardized_importance(fp.model, fp.model_feature_names);
            p.intercept_only = p.rows.empty();
        } catch (const std::exception& e) {
            p.error = e.what();
        }
        panels.push_back(std::move(p));
    }

    TextTable t;
    t.columns = {"panel", "rank", "feature", "value", "direction"};
    nlohmann::json jpanels = nlohmann::json::array();
    int failures = 0;
    for (const Panel& p : panels) {
        nlohmann::json jr = nlohmann::json::array();
        if (!p.error.empty()) {
            ++failures;
            std::cerr << "importance: " << p.title << " failed: " << p.error << "\n";
            jpanels.push_back({{"panel", p.title}, {"error", p.error}});
            continue;
        }
        for (std::size_t r = 0; r < p.rows.size(); ++r) {
            const ImportanceRow& ir = p.rows[r];
            const std::string dir = ir.standardized >= 0 ? "increase" : "decrease";
            t.rows.push_back({p.title, std::to_string(r + 1), ir.name,
                              format_double(std::abs(ir.standardized)), dir});
            jr.push_back({{"rank", r + 1},
                          {"feature", ir.name},
                          {"value", std::abs(ir.standardized)},
                          {"direction", dir}});
        }
        jpanels.push_back({{"panel", p.title},
                           {"intercept_only", p.intercept_only},
                           {"rows", jr}});
    }
    write_delimited(t, join_path(cfg.out, "importance.csv"));
    write_json(join_path(cfg.out, "importance.json"),
               {{"config", config_echo(cfg)}, {"panels", jpanels}});

    // Four bar panels; bar direction colored by sign.
    {
        const int max_bars = 15;
        const double pw = 300, ph = 330;
        SvgWriter svg(2 * pw, 2 * ph + 30);
        svg.text(10, 20, "Variable importance (red: increases emergency risk, blue: decreases)",
                 13);
        for (std::size_t pi = 0; pi < panels.size(); ++pi) {
            const Panel& p = panels[pi];
            const double x0 = (pi % 2) * pw, y0 = 30 + (pi / 2) * ph;
            svg.text(x0 + pw / 2, y0 + 16, p.title, 12, "middle");
            if (!p.error.empty()) {
                svg.text(x0 + pw / 2, y0 + ph / 2, "failed: see log", 11, "middle", "#a00");
                continue;
            }
            if (p.intercept_only) {
                svg.text(x0 + pw / 2, y0 + ph / 2, "intercept-only model", 11, "middle", "#666");
                continue;
            }
            const int nb = std::min<int>(max_bars, static_cast<int>(p.rows.size()));
            double vmax = 0.0;
            for (int r = 0; r < nb; ++r)
                vmax = std::max(vmax, std::abs(p.rows[r].standardized));
            if (vmax == 0.0) vmax = 1.0;
            const double bx = x0 + 100, bw = pw - 120, bh = (ph - 40.0) / max_bars;
            for (int r = 0; r < nb; ++r) {
                const ImportanceRow& ir = p.rows[r];
                const double len = std::abs(ir.standardized) / vmax * bw;
                svg.rect(bx, y0 + 24 + r * bh + 1, len, bh - 3,
                         ir.standardized >= 0 ? kEmergentColor : kElectiveColor);
                svg.text(bx - 4, y0 + 24 + r * bh + bh - 5, ir.name, 9, "end");
            }
        }
        svg.save(join_path(cfg.out, "importance.svg"));
    }

    std::cout << "importance: wrote " << panels.size() << " panels\n";
    return failures > 0 ? 1 : 0;
}

}  // namespace ccrisk
