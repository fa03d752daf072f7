#include "tristage/cli.hpp"

#include "tristage/csv.hpp"
#include "tristage/error.hpp"
#include "tristage/gbdt.hpp"
#include "tristage/metrics.hpp"
#include "tristage/pipeline.hpp"
#include "tristage/report.hpp"
#include "tristage/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <ostream>
#include <thread>

namespace tristage::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kStageFiles[] = {"stage1.json", "stage2.json", "stage3.json"};

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::vector<std::string> data;
    std::string out;
    std::string models;
    std::string predictions;
    std::string truth;
    std::string manifest;
    std::optional<std::int64_t> seed;
    int threads = 0;
};

KeyValues load_kv(const Options& o) {
    KeyValues kv = o.config.empty() ? KeyValues{} : KeyValues::read(o.config);
    for (const auto& a : o.overrides) kv.set_assignment(a);
    return kv;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

PanelDataset load_data(const Options& o) {
    std::vector<fs::path> paths(o.data.begin(), o.data.end());
    return load_panel_csv(paths);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::array<gbdt::GbdtModel, 3> load_models(const fs::path& dir) {
    std::array<gbdt::GbdtModel, 3> models;
    for (std::size_t s = 0; s < 3; ++s) models[s] = gbdt::load_model_file((dir / kStageFiles[s]).string());
    return models;
}

json dataset_summary(const PanelDataset& ds) {
    std::size_t future_weeks = 0;
    for (const auto& g : ds.groups()) future_weeks += g.is_future ? 1 : 0;
    return {{"rows", ds.n()},
            {"historical_rows", ds.m()},
            {"weeks", ds.groups().size()},
            {"future_weeks", future_weeks},
            {"features", ds.feature_names()}};
}

void cmd_generate(const Options& o, std::ostream& out) {
    auto kv = load_kv(o);
    if (o.seed) kv.set("seed", std::to_string(*o.seed));
    const auto config = scenario::ScenarioConfig::from_kv(kv);
    const auto sc = scenario::generate(config);
    const fs::path dir = o.out;
    scenario::write_scenario(sc, dir);
    write_text(dir / "scenario.cfg", config.to_kv().to_string());
    out << "generated " << sc.dataset.n() << " rows (" << sc.dataset.m() << " historical) in " << dir.string() << '\n';
}

void cmd_train(const Options& o, std::ostream& out) {
    auto config = pipeline::PipelineConfig::from_kv(load_kv(o));
    config.set_threads(resolve_threads(o.threads));
    const auto ds = load_data(o);
    const auto result = pipeline::run_pipeline(ds, config);

    const fs::path dir = o.out;
    ensure_dir(dir);
    json models = json::object();
    json curves = json::object();
    for (std::size_t s = 0; s < 3; ++s) {
        gbdt::save_model_file(result.models[s], (dir / kStageFiles[s]).string());
        const std::string stage = "stage" + std::to_string(s + 1);
        models[stage] = kStageFiles[s];
        curves[stage] = result.loss_curves[s];
    }
    const auto echo = config.to_kv();
    write_text(dir / "pipeline.cfg", echo.to_string());

    json manifest = {{"tool", "tristage"},
                     {"manifest_version", 1},
                     {"command", "train"},
                     {"config", report::to_json(echo)},
                     {"seed", config.stage1.seed},
                     {"data", o.data},
                     {"dataset", dataset_summary(ds)},
                     {"loss_curves", std::move(curves)},
                     {"diagnostics", report::to_json(result.diagnostics)},
                     {"models", std::move(models)}};
    report::write_json(manifest, dir / "manifest.json");
    out << "trained 3 stages on " << ds.n() << " rows; models in " << dir.string() << '\n';
}

void cmd_predict(const Options& o, std::ostream& out) {
    const auto ds = load_data(o);
    const auto models = load_models(o.models);
    const auto outputs = pipeline::predict_stages(ds, models);
    std::ofstream csv_out(o.out, std::ios::binary);
    if (!csv_out) throw Error(ErrorKind::Io, "cannot write " + o.out);
    csv_out << "product_id,week,stage1,stage2,stage3\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto& r = ds.records()[i];
        csv_out << csv::quote(r.product_id) << ',' << r.week << ',' << csv::format_double(outputs.stage1[i]) << ','
                << csv::format_double(outputs.stage2[i]) << ',' << csv::format_double(outputs.stage3[i]) << '\n';
    }
    if (!csv_out) throw Error(ErrorKind::Io, "failed writing " + o.out);
    out << "wrote " << ds.n() << " predictions to " << o.out << '\n';
}

void cmd_evaluate(const Options& o, std::ostream& out) {
    const auto table = csv::read(o.predictions);
    std::array<std::size_t, 5> cols{};
    const char* names[] = {"product_id", "week", "stage1", "stage2", "stage3"};
    for (std::size_t c = 0; c < 5; ++c) {
        auto idx = table.column(names[c]);
        if (!idx) throw Error(ErrorKind::Schema, o.predictions + ": missing column '" + names[c] + "'");
        cols[c] = *idx;
    }
    const auto truth = scenario::read_truth_csv(o.truth);

    using Key = std::pair<std::int64_t, std::string>;
    std::map<Key, std::array<double, 3>> preds;
    std::map<std::int64_t, std::size_t> preds_per_week;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        auto week = csv::parse_int(row[cols[1]]);
        if (!week) throw Error(ErrorKind::Validation, o.predictions + ":" + std::to_string(i + 2) + ": bad week");
        std::array<double, 3> v{};
        for (std::size_t s = 0; s < 3; ++s) {
            auto x = csv::parse_double(row[cols[2 + s]]);
            if (!x) throw Error(ErrorKind::Validation, o.predictions + ":" + std::to_string(i + 2) + ": bad prediction");
            v[s] = *x;
        }
        if (!preds.emplace(Key{*week, row[cols[0]]}, v).second) {
            throw Error(ErrorKind::Validation, o.predictions + ": duplicate row for week " + std::to_string(*week));
        }
        ++preds_per_week[*week];
    }

    // Evaluation runs on the truth rows; totals are the weekly truth sums.
    std::vector<double> truth_values;
    std::array<std::vector<double>, 3> stage_values;
    std::map<std::int64_t, WeekGroup> weeks;
    for (const auto& t : truth) {
        auto it = preds.find(Key{t.week, t.product_id});
        if (it == preds.end()) {
            throw Error(ErrorKind::Validation, "no prediction for product '" + t.product_id + "' week " +
                                                   std::to_string(t.week));
        }
        auto& g = weeks[t.week];
        g.week = t.week;
        g.is_future = true;
        g.member_indices.push_back(truth_values.size());
        g.category_total += t.true_sales;
        truth_values.push_back(t.true_sales);
        for (std::size_t s = 0; s < 3; ++s) stage_values[s].push_back(it->second[s]);
    }
    std::vector<WeekGroup> groups;
    for (auto& [week, g] : weeks) {
        g.count = g.member_indices.size();
        if (preds_per_week[week] != g.count) {
            throw Error(ErrorKind::Validation, "week " + std::to_string(week) + ": " +
                                                   std::to_string(preds_per_week[week]) + " predictions vs " +
                                                   std::to_string(g.count) + " truth rows");
        }
        groups.push_back(g);
    }

    json doc = {{"rows", truth_values.size()}, {"weeks", groups.size()}};
    for (std::size_t s = 0; s < 3; ++s) {
        doc["stage" + std::to_string(s + 1)] = {
            {"product", report::to_json(metrics::product_metrics(stage_values[s], truth_values))},
            {"category_adherence", report::to_json(metrics::category_adherence(stage_values[s], groups))}};
    }
    report::write_json(doc, o.out);
    if (!o.manifest.empty()) {
        auto manifest = report::read_json(o.manifest);
        manifest["metrics"] = doc;
        report::write_json(manifest, o.manifest);
    }
    out << "stage adherence (mean): " << doc["stage1"]["category_adherence"]["mean"].get<double>() << ' '
        << doc["stage2"]["category_adherence"]["mean"].get<double>() << ' '
        << doc["stage3"]["category_adherence"]["mean"].get<double>() << '\n';
}

void cmd_diagnose(const Options& o, std::ostream& out) {
    auto config = pipeline::PipelineConfig::from_kv(load_kv(o));
    config.set_threads(resolve_threads(o.threads));
    const auto ds = load_data(o);
    const auto models = load_models(o.models);
    const auto outputs = pipeline::predict_stages(ds, models);
    const auto diag = pipeline::diagnose(ds, outputs, config);
    report::write_json(report::to_json(diag), o.out);
    out << "bias " << diag.bias.direction << " (" << diag.bias.consistency_rate << "), fit/constraint "
        << diag.terms.fit_to_constraint << '\n';
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Three-stage constrained gradient boosting for sales under cannibalization", "tristage"};
    app.require_subcommand(1);
    Options o;

    auto* generate = app.add_subcommand("generate", "Synthesize a cannibalization scenario");
    generate->add_option("--config", o.config, "Scenario key-value file");
    generate->add_option("--seed", o.seed, "Random seed (overrides the config)");
    generate->add_option("--set", o.overrides, "Override a config key (key=value)");
    generate->add_option("--out", o.out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Fit the three stages and write models and a manifest");
    train->add_option("--data", o.data, "Panel CSV file(s)")->required();
    train->add_option("--config", o.config, "Pipeline key-value file");
    train->add_option("--set", o.overrides, "Override a config key (key=value)");
    train->add_option("--threads", o.threads, "Split-search threads (default: all cores)");
    train->add_option("--out", o.out, "Output directory")->required();

    auto* predict = app.add_subcommand("predict", "Write per-stage predictions for a panel");
    predict->add_option("--models", o.models, "Directory with stage1/2/3.json")->required();
    predict->add_option("--data", o.data, "Panel CSV file(s)")->required();
    predict->add_option("--threads", o.threads, "Accepted for symmetry; prediction is single-threaded");
    predict->add_option("--out", o.out, "Predictions CSV")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against truth");
    evaluate->add_option("--predictions", o.predictions, "Predictions CSV")->required();
    evaluate->add_option("--truth", o.truth, "Truth CSV")->required();
    evaluate->add_option("--manifest", o.manifest, "Run manifest to append the metrics to");
    evaluate->add_option("--out", o.out, "Metrics JSON")->required();

    auto* diagnose = app.add_subcommand("diagnose", "Report bias, loss-term and trivial-solution diagnostics");
    diagnose->add_option("--models", o.models, "Directory with stage1/2/3.json")->required();
    diagnose->add_option("--data", o.data, "Panel CSV file(s)")->required();
    diagnose->add_option("--config", o.config, "Pipeline key-value file");
    diagnose->add_option("--set", o.overrides, "Override a config key (key=value)");
    diagnose->add_option("--threads", o.threads, "Split-search threads (default: all cores)");
    diagnose->add_option("--out", o.out, "Report JSON")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << e.what() << '\n';
        return exit_code(ErrorKind::Usage);
    }

    try {
        if (*generate) cmd_generate(o, out);
        else if (*train) cmd_train(o, out);
        else if (*predict) cmd_predict(o, out);
        else if (*evaluate) cmd_evaluate(o, out);
        else if (*diagnose) cmd_diagnose(o, out);
        return 0;
    } catch (const Error& e) {
        err << "error: " << error_category(e.kind()) << ": " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << '\n';
        return 1;
    }
}

} // namespace tristage::cli
