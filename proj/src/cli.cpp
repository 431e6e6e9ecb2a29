#include "tskirt/cli.hpp"

#include "tskirt/calibration.hpp"
#include "tskirt/concept_graph.hpp"
#include "tskirt/dataio.hpp"
#include "tskirt/evaluation.hpp"
#include "tskirt/simulate.hpp"
#include "tskirt/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace tskirt::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// User-facing input problem; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string format = "csv";
    bool strict = false;
    bool no_preprocess = false;
    std::size_t min_responses = 5;
    std::size_t max_attempts = 4;
    unsigned threads = 1;
};

struct ModelOptions {
    std::optional<double> nu2;
    std::optional<double> lambda;
    std::optional<double> gamma;
    std::string clock = "step";
    double tolerance = 1e-8;
    int max_iterations = 100;
    std::string spc_tie = "correct";
    std::string threshold_tie = "correct";
    bool cold_start = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--format", o.format, "Interaction log format")->check(CLI::IsMember({"csv", "jsonl"}));
    app->add_flag("--strict", o.strict, "Reject the whole file if any row is malformed");
    app->add_flag("--no-preprocess", o.no_preprocess, "Skip the attempt cap and minimum-history filter");
    app->add_option("--min-responses", o.min_responses, "Drop students with fewer retained responses");
    app->add_option("--max-attempts", o.max_attempts, "Keep this many most recent attempts per student and item");
    app->add_option("--threads", o.threads, "Worker threads (results do not depend on this)");
}

void add_model_options(CLI::App* app, ModelOptions& o) {
    app->add_option("--nu2", o.nu2, "Drift variance for the temporal models (temporal2po, tskirt)");
    app->add_option("--lambda", o.lambda, "Prior weight lambda for every latent-trait model");
    app->add_option("--gamma", o.gamma, "Prerequisite coupling gamma for correlated_mvn and tskirt");
    app->add_option("--clock", o.clock, "Elapsed-time clock: step or wall:<seconds per unit>");
    app->add_option("--tolerance", o.tolerance, "MAP gradient tolerance");
    app->add_option("--max-iterations", o.max_iterations, "MAP iteration cap");
    app->add_option("--spc-tie", o.spc_tie, "SPC prediction at exactly half correct")
        ->check(CLI::IsMember({"correct", "incorrect"}));
    app->add_option("--threshold-tie", o.threshold_tie, "Prediction for a probability of exactly 0.5")
        ->check(CLI::IsMember({"correct", "incorrect"}));
    app->add_flag("--cold-start", o.cold_start, "Solve every prediction from the prior mean instead of warm starting");
}

Clock parse_clock(const std::string& text) {
    if (text == "step") {
        return StepClock{};
    }
    if (text.rfind("wall:", 0) == 0) {
        try {
            const double s = std::stod(text.substr(5));
            if (s > 0.0 && std::isfinite(s)) {
                return WallClock{s};
            }
        } catch (const std::exception&) {
        }
    }
    throw UsageError("invalid --clock '" + text + "' (expected step or wall:<seconds>)");
}

EvaluationOptions evaluation_options(const ModelOptions& m, const CommonOptions& c) {
    EvaluationOptions o;
    o.clock = parse_clock(m.clock);
    o.solver.gradient_tolerance = m.tolerance;
    o.solver.max_iterations = m.max_iterations;
    o.spc_tie_predicts_correct = m.spc_tie == "correct";
    o.threshold_tie_predicts_correct = m.threshold_tie == "correct";
    o.warm_start = !m.cold_start;
    o.threads = c.threads;
    return o;
}

ModelVariant apply_overrides(ModelVariant model, const ModelOptions& o) {
    if (o.nu2 && (model.kind == ModelKind::Temporal2PO || model.kind == ModelKind::TSKIRT)) {
        model.drift_variance = *o.nu2;
    }
    if (o.lambda && model.latent()) {
        model.lambda = *o.lambda;
    }
    if (o.gamma && (model.kind == ModelKind::CorrelatedMVN || model.kind == ModelKind::TSKIRT)) {
        model.gamma = *o.gamma;
    }
    model.validate();
    return model;
}

std::vector<ModelVariant> parse_models(const std::vector<std::string>& names, const ModelOptions& o) {
    std::vector<ModelVariant> out;
    for (const auto& name : names) {
        if (name == "all") {
            for (const auto& m : ModelVariant::all()) {
                out.push_back(apply_overrides(m, o));
            }
        } else {
            out.push_back(apply_overrides(ModelVariant::by_name(name), o));
        }
    }
    if (out.empty()) {
        throw UsageError("no model selected");
    }
    return out;
}

Dataset load_data(const std::string& path, const CommonOptions& c, std::ostream& err) {
    if (!fs::exists(path)) {
        throw UsageError("input file '" + path + "' does not exist");
    }
    auto loaded = load(fs::path(path), parse_data_format(c.format), c.strict);
    for (const auto& row : loaded.rejected) {
        err << "warning: " << path << " line " << row.line << ": " << row.reason << " (row skipped)\n";
    }
    if (c.no_preprocess) {
        return std::move(loaded.data);
    }
    return preprocess(loaded.data, PreprocessConfig{c.min_responses, c.max_attempts});
}

ItemBank load_bank(const std::string& path) {
    if (path.empty()) {
        throw UsageError("missing --bank");
    }
    if (!fs::exists(path)) {
        throw UsageError("item bank '" + path + "' does not exist");
    }
    return read_item_bank(fs::path(path));
}

std::optional<ConceptGraph> load_graph(const std::string& path) {
    if (path.empty()) {
        return std::nullopt;
    }
    if (!fs::exists(path)) {
        throw UsageError("concept graph '" + path + "' does not exist");
    }
    return read_concept_graph(fs::path(path));
}

void require_graph(const std::vector<ModelVariant>& models, const std::optional<ConceptGraph>& graph) {
    for (const auto& m : models) {
        if (m.multidimensional() && !graph) {
            throw UsageError("model " + m.name() + " needs --graph");
        }
    }
}

ordered_json resolved_config(const CLI::App* app) {
    ordered_json config = ordered_json::object();
    config["command"] = app->get_name();
    for (const auto* opt : app->get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name.empty()) {
            continue;
        }
        if (opt->get_type_size() == 0) {
            config[name] = opt->count() > 0;
        } else if (opt->count() > 0) {
            const auto& results = opt->results();
            std::string joined;
            for (std::size_t i = 0; i < results.size(); ++i) {
                joined += (i ? "," : "") + results[i];
            }
            config[name] = joined;
        } else {
            config[name] = opt->get_default_str();
        }
    }
    return config;
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json model_json(const ModelVariant& m) {
    return ordered_json{{"name", m.name()},
                        {"display_name", m.display_name()},
                        {"drift_variance", m.drift_variance},
                        {"lambda", m.lambda},
                        {"gamma", m.gamma}};
}

void write_json(const fs::path& path, const ordered_json& doc) {
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write '" + path.string() + "'");
    }
    out << doc.dump(2) << '\n';
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> parse_grid(const std::vector<std::string>& values, const std::string& flag) {
    std::vector<double> out;
    for (const auto& v : values) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(v, &used));
            if (used != v.size()) {
                throw std::invalid_argument(v);
            }
        } catch (const std::exception&) {
            throw UsageError("invalid value '" + v + "' in " + flag);
        }
    }
    return out;
}

// ---- simulate -------------------------------------------------------------

struct SimulateOptions {
    std::string out_dir;
    std::size_t students = 200;
    std::size_t responses = 100;
    std::size_t concepts = 1;
    std::string graph;
    std::size_t items_per_concept = 10;
    double alpha_min = 0.5;
    double alpha_max = 2.0;
    double beta_min = -2.0;
    double beta_max = 2.0;
    double nu2 = 0.0;
    double lambda = 1.0;
    double gamma = 0.0;
    std::string clock = "step";
    std::string assignment = "uniform";
    std::string arrivals = "unit";
    std::string drift = "independent";
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string format = "csv";
};

int cmd_simulate(const CLI::App* app, const SimulateOptions& o, std::ostream& out) {
    SimulationScenario scenario;
    scenario.seed = o.seed;
    scenario.n_students = o.students;
    scenario.responses_per_student = o.responses;
    if (!o.graph.empty()) {
        scenario.graph = *load_graph(o.graph);
    } else {
        std::vector<std::string> ids;
        for (std::size_t c = 0; c < o.concepts; ++c) {
            ids.push_back("c" + std::to_string(c));
        }
        scenario.graph = ConceptGraph::chain(std::move(ids));
    }
    scenario.items = ItemBankSpec{o.items_per_concept, o.alpha_min, o.alpha_max, o.beta_min, o.beta_max};
    scenario.true_temporal = TemporalConfig{o.nu2, parse_clock(o.clock)};
    scenario.prior_lambda = o.lambda;
    scenario.prior_gamma = o.gamma;
    if (o.assignment == "uniform") {
        scenario.assignment = UniformRandom{};
    } else if (o.assignment.rfind("blocks:", 0) == 0) {
        scenario.assignment = ConceptBlocks{static_cast<std::size_t>(std::stoul(o.assignment.substr(7)))};
    } else {
        throw UsageError("invalid --assignment '" + o.assignment + "' (expected uniform or blocks:<length>)");
    }
    if (o.arrivals == "unit") {
        scenario.arrivals = UnitSpacing{};
    } else if (o.arrivals.rfind("exp:", 0) == 0) {
        scenario.arrivals = ExponentialSpacing{std::stod(o.arrivals.substr(4))};
    } else {
        throw UsageError("invalid --arrivals '" + o.arrivals + "' (expected unit or exp:<mean seconds>)");
    }
    scenario.drift_coupling =
        o.drift == "coupled" ? DriftCoupling::PriorCorrelation : DriftCoupling::Independent;

    const auto result = generate(scenario, o.threads);
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    const auto format = parse_data_format(o.format);
    const fs::path data_path = dir / (format == DataFormat::CSV ? "data.csv" : "data.jsonl");
    write(data_path, result.data, format);
    write_item_bank(dir / "true_bank.oracle.csv", result.bank);
    write_true_paths(dir / "true_paths.oracle.csv", result.paths, scenario.graph);
    {
        std::ofstream g(dir / "graph.tsv");
        write_concept_graph(g, scenario.graph);
    }
    const auto summary = result.data.summary();
    ordered_json doc;
    doc["format_version"] = kFormatVersion;
    doc["run_config"] = resolved_config(app);
    doc["outputs"] = {{"data", data_path.filename().string()},
                      {"graph", "graph.tsv"},
                      {"true_bank_oracle_only", "true_bank.oracle.csv"},
                      {"true_paths_oracle_only", "true_paths.oracle.csv"}};
    doc["summary"] = {{"students", summary.students},
                      {"items", summary.items},
                      {"responses", summary.responses},
                      {"percent_correct", summary.percent_correct}};
    write_json(dir / "simulate.run.json", doc);
    out << "wrote " << summary.responses << " responses from " << summary.students << " students to "
        << data_path.string() << " (" << summary.percent_correct << "% correct)\n";
    return kExitOk;
}

// ---- calibrate ------------------------------------------------------------

struct CalibrateOptions {
    std::string data;
    std::string out;
    std::string concepts;
    std::string truth;
    int max_rounds = 50;
    double delta = 1e-5;
    double floor = 0.01;
};

int cmd_calibrate(const CLI::App* app, const CalibrateOptions& o, const CommonOptions& c, std::ostream& out,
                  std::ostream& err) {
    const Dataset data = load_data(o.data, c, err);
    if (data.response_count() == 0) {
        throw UsageError("training data '" + o.data + "' has no usable responses");
    }
    const ConceptAssignment assignment = o.concepts.empty() ? ConceptAssignment{} : read_concept_assignment(o.concepts);
    CalibrationConfig config;
    config.max_outer_rounds = o.max_rounds;
    config.convergence_delta = o.delta;
    config.discrimination_floor = o.floor;
    config.threads = c.threads;
    const ItemBank bank = calibrate(data, config, assignment);
    write_item_bank(fs::path(o.out), bank);

    ordered_json log;
    log["format_version"] = kFormatVersion;
    log["run_config"] = resolved_config(app);
    log["rounds"] = bank.meta.rounds;
    log["final_delta"] = bank.meta.final_delta;
    log["objective_trace"] = bank.meta.objective_trace;
    log["floored_items"] = bank.meta.floored_items;
    log["response_counts"] = bank.meta.response_counts;
    out << "calibrated " << bank.size() << " items in " << bank.meta.rounds << " rounds (final delta "
        << bank.meta.final_delta << ")\n";
    if (!o.truth.empty()) {
        const ItemBank truth = load_bank(o.truth);
        std::vector<double> a_hat, a_true, b_hat, b_true;
        for (const auto& [id, item] : bank.items()) {
            if (const auto* t = truth.find(id)) {
                a_hat.push_back(item.discrimination);
                a_true.push_back(t->discrimination);
                b_hat.push_back(item.difficulty);
                b_true.push_back(t->difficulty);
            }
        }
        if (a_hat.size() >= 2) {
            const double rb = pearson(b_hat, b_true);
            const double ra = pearson(a_hat, a_true);
            log["recovery"] = {{"items", a_hat.size()}, {"difficulty_correlation", rb}, {"discrimination_correlation", ra}};
            out << "recovery: difficulty r = " << rb << ", discrimination r = " << ra << " over " << a_hat.size()
                << " items\n";
        }
    }
    write_json(fs::path(o.out + ".log.json"), log);
    return kExitOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateOptions {
    std::string data;
    std::string bank;
    std::string graph;
    std::vector<std::string> models{"all"};
    std::size_t buckets = 0;
    std::string out;
    std::string plot_data;
};

ordered_json report_json(const EvaluationReport& r) {
    return ordered_json{{"model", model_json(r.model)},
                        {"n_predictions", r.n_predictions},
                        {"accuracy", r.accuracy},
                        {"accuracy_sem", r.accuracy_sem},
                        {"auc", optional_json(r.auc)},
                        {"mean_log_likelihood", optional_json(r.mean_log_likelihood)},
                        {"skipped_events", r.skipped_events},
                        {"threshold_ties", r.threshold_ties}};
}

int cmd_evaluate(const CLI::App* app, const EvaluateOptions& o, const ModelOptions& m, const CommonOptions& c,
                 std::ostream& out, std::ostream& err) {
    const auto models = parse_models(o.models, m);
    const ItemBank bank = load_bank(o.bank);
    const auto graph = load_graph(o.graph);
    require_graph(models, graph);
    const Dataset data = load_data(o.data, c, err);
    if (data.response_count() == 0) {
        throw UsageError("evaluation data '" + o.data + "' has no usable responses");
    }
    const auto options = evaluation_options(m, c);
    const auto reports = evaluate_models(data, bank, models, graph ? &*graph : nullptr, options);

    out << format_results_table(reports);
    const auto summary = data.summary();
    ordered_json doc;
    doc["format_version"] = kFormatVersion;
    doc["run_config"] = resolved_config(app);
    doc["dataset"] = {{"students", summary.students},
                      {"items", summary.items},
                      {"responses", summary.responses},
                      {"percent_correct", summary.percent_correct}};
    doc["models"] = ordered_json::array();
    for (const auto& r : reports) {
        doc["models"].push_back(report_json(r));
    }
    if (o.buckets > 0) {
        const auto rows = bucket_by_student_percent_correct(reports, o.buckets);
        ordered_json buckets = ordered_json::array();
        for (const auto& row : rows) {
            buckets.push_back({{"bin", row.bin},
                               {"lower", row.lower},
                               {"upper", row.upper},
                               {"model", row.model},
                               {"n_students", row.n_students},
                               {"n_predictions", row.n_predictions},
                               {"accuracy", optional_json(row.accuracy)},
                               {"auc", optional_json(row.auc)},
                               {"mean_log_likelihood", optional_json(row.mean_log_likelihood)}});
        }
        doc["per_student_buckets"] = buckets;
        std::string plot_path = o.plot_data;
        if (plot_path.empty() && !o.out.empty()) {
            plot_path = o.out + ".buckets.tsv";
        }
        if (!plot_path.empty()) {
            std::ofstream tsv(plot_path);
            if (!tsv) {
                throw UsageError("cannot write '" + plot_path + "'");
            }
            tsv << "# format_version: " << kFormatVersion << '\n';
            tsv << "# run_config: " << resolved_config(app).dump() << '\n';
            write_bucket_table(tsv, rows);
        }
    }
    if (!o.out.empty()) {
        write_json(fs::path(o.out), doc);
    }
    return kExitOk;
}

// ---- sweep ----------------------------------------------------------------

struct SweepOptions {
    std::string data;
    std::string bank;
    std::string graph;
    std::string model = "tskirt";
    std::vector<std::string> nu2_grid;
    std::vector<std::string> lambda_grid;
    std::vector<std::string> gamma_grid;
    std::string out;
};

int cmd_sweep(const CLI::App* app, const SweepOptions& o, const ModelOptions& m, const CommonOptions& c,
              std::ostream& out, std::ostream& err) {
    SweepGrid grid{parse_grid(o.nu2_grid, "--nu2-grid"), parse_grid(o.lambda_grid, "--lambda-grid"),
                   parse_grid(o.gamma_grid, "--gamma-grid")};
    if (grid.drift_variances.empty() && grid.lambdas.empty() && grid.gammas.empty()) {
        throw UsageError("sweep grid is empty: give --nu2-grid, --lambda-grid or --gamma-grid");
    }
    const ModelVariant base = apply_overrides(ModelVariant::by_name(o.model), m);
    const ItemBank bank = load_bank(o.bank);
    const auto graph = load_graph(o.graph);
    require_graph({base}, graph);
    const Dataset data = load_data(o.data, c, err);
    if (data.response_count() == 0) {
        throw UsageError("tuning data '" + o.data + "' has no usable responses");
    }
    const auto results = run_sweep(data, bank, base, grid, graph ? &*graph : nullptr, evaluation_options(m, c));

    ordered_json doc;
    doc["format_version"] = kFormatVersion;
    doc["run_config"] = resolved_config(app);
    doc["results"] = ordered_json::array();
    out << "rank\tnu2\tlambda\tgamma\taccuracy\tsem\tauc\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        doc["results"].push_back({{"rank", i + 1},
                                  {"model", model_json(r.model)},
                                  {"grid_index", r.grid_index},
                                  {"n_predictions", r.n_predictions},
                                  {"accuracy", r.accuracy},
                                  {"accuracy_sem", r.accuracy_sem},
                                  {"auc", optional_json(r.auc)},
                                  {"mean_log_likelihood", optional_json(r.mean_log_likelihood)}});
        out << i + 1 << '\t' << r.model.drift_variance << '\t' << r.model.lambda << '\t' << r.model.gamma << '\t'
            << r.accuracy << '\t' << r.accuracy_sem << '\t' << (r.auc ? std::to_string(*r.auc) : "n/a") << '\n';
    }
    doc["best"] = doc["results"][0];
    if (!o.out.empty()) {
        write_json(fs::path(o.out), doc);
    }
    return kExitOk;
}

// ---- predict --------------------------------------------------------------

struct PredictOptions {
    std::string history;
    std::string bank;
    std::string graph;
    std::string model = "tskirt";
    std::vector<std::string> items;
    std::optional<std::int64_t> at;
    std::string out;
};

int cmd_predict(const PredictOptions& o, const ModelOptions& m, const CommonOptions& c, std::ostream& out) {
    const ModelVariant model = apply_overrides(ModelVariant::by_name(o.model), m);
    const ItemBank bank = load_bank(o.bank);
    const auto graph = load_graph(o.graph);
    require_graph({model}, graph);
    if (!fs::exists(o.history)) {
        throw UsageError("history file '" + o.history + "' does not exist");
    }
    const auto loaded = load(fs::path(o.history), parse_data_format(c.format), true);
    if (loaded.data.students().size() > 1) {
        throw UsageError("history file holds more than one student");
    }
    const std::vector<InteractionRecord> empty;
    const auto& records = loaded.data.empty() ? empty : loaded.data.students().front().records;

    std::optional<StructuredPrior> prior;
    if (model.multidimensional()) {
        prior = build_prior(*graph, model.lambda, model.gamma);
    }
    const EventResolver resolver(bank, prior ? &prior->graph() : nullptr);
    OnlinePredictor predictor(model, prior ? &*prior : nullptr, evaluation_options(m, c));
    // Replay the history exactly as the evaluation harness would.
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto event = resolver.resolve(records[i], static_cast<std::int64_t>(i));
        if (!event) {
            continue;
        }
        predictor.forecast(*event);
        predictor.observe(*event);
    }

    const auto step = static_cast<std::int64_t>(records.size());
    const std::int64_t at = o.at ? *o.at : (records.empty() ? 0 : records.back().timestamp);
    if (!records.empty() && at < records.back().timestamp) {
        throw UsageError("--at lies before the last response in the history");
    }
    std::ostringstream text;
    text.precision(17);
    for (const auto& id : o.items) {
        const auto event = resolver.resolve(InteractionRecord{"", id, false, at}, step);
        if (!event) {
            throw UsageError("unknown item '" + id + "'");
        }
        const auto forecast = predictor.forecast(*event);
        text << id << '\t';
        if (forecast.probability) {
            text << *forecast.probability;
        } else {
            text << "n/a";
        }
        text << '\t' << (forecast.predicted_correct ? 1 : 0) << '\n';
    }
    if (o.out.empty()) {
        out << text.str();
    } else {
        std::ofstream file(o.out);
        if (!file) {
            throw UsageError("cannot write '" + o.out + "'");
        }
        file << text.str();
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Drifting, concept-structured proficiency models for student response logs"};
    app.name("tskirt");
    app.set_config("--config", "", "Declarative key-value config file; command-line flags take precedence");
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Generate synthetic responses with known parameters");
    simulate->add_option("--out-dir", sim.out_dir, "Output directory")->required();
    simulate->add_option("--students", sim.students, "Number of students");
    simulate->add_option("--responses", sim.responses, "Responses per student");
    simulate->add_option("--concepts", sim.concepts, "Concept count for a generated chain graph");
    simulate->add_option("--graph", sim.graph, "Concept graph file (overrides --concepts)");
    simulate->add_option("--items-per-concept", sim.items_per_concept, "Items per concept");
    simulate->add_option("--alpha-min", sim.alpha_min, "Smallest true discrimination");
    simulate->add_option("--alpha-max", sim.alpha_max, "Largest true discrimination");
    simulate->add_option("--beta-min", sim.beta_min, "Smallest true difficulty");
    simulate->add_option("--beta-max", sim.beta_max, "Largest true difficulty");
    simulate->add_option("--nu2", sim.nu2, "True drift variance per clock unit");
    simulate->add_option("--lambda", sim.lambda, "True prior weight lambda");
    simulate->add_option("--gamma", sim.gamma, "True prerequisite coupling gamma");
    simulate->add_option("--clock", sim.clock, "Clock for the true drift: step or wall:<seconds>");
    simulate->add_option("--assignment", sim.assignment, "uniform or blocks:<length>");
    simulate->add_option("--arrivals", sim.arrivals, "unit or exp:<mean seconds>");
    simulate->add_option("--drift", sim.drift, "Drift steps across concepts")
        ->check(CLI::IsMember({"independent", "coupled"}));
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_option("--threads", sim.threads, "Worker threads (output does not depend on this)");
    simulate->add_option("--format", sim.format, "Interaction log format")->check(CLI::IsMember({"csv", "jsonl"}));

    CalibrateOptions cal;
    CommonOptions cal_common;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit item parameters on a training split");
    calibrate_cmd->add_option("--data", cal.data, "Training interaction log")->required();
    calibrate_cmd->add_option("--out", cal.out, "Item bank CSV to write")->required();
    calibrate_cmd->add_option("--concepts", cal.concepts, "CSV with item_id and concept_id columns");
    calibrate_cmd->add_option("--truth", cal.truth, "True item bank for recovery statistics");
    calibrate_cmd->add_option("--max-rounds", cal.max_rounds, "Alternating rounds cap");
    calibrate_cmd->add_option("--delta", cal.delta, "Convergence threshold on mean parameter change");
    calibrate_cmd->add_option("--floor", cal.floor, "Discrimination floor");
    add_common(calibrate_cmd, cal_common);

    EvaluateOptions ev;
    ModelOptions ev_model;
    CommonOptions ev_common;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Online next-response prediction benchmark");
    evaluate_cmd->add_option("--data", ev.data, "Evaluation interaction log")->required();
    evaluate_cmd->add_option("--bank", ev.bank, "Item bank CSV")->required();
    evaluate_cmd->add_option("--graph", ev.graph, "Concept graph file");
    evaluate_cmd->add_option("--model", ev.models, "Models: all or a comma list")->delimiter(',');
    evaluate_cmd->add_option("--buckets", ev.buckets, "Per-student percent-correct bins");
    evaluate_cmd->add_option("--out", ev.out, "Report JSON");
    evaluate_cmd->add_option("--plot-data", ev.plot_data, "Bucket TSV (default <out>.buckets.tsv)");
    add_model_options(evaluate_cmd, ev_model);
    add_common(evaluate_cmd, ev_common);

    SweepOptions sw;
    ModelOptions sw_model;
    CommonOptions sw_common;
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid search of hyperparameters on a tuning split");
    sweep_cmd->add_option("--data", sw.data, "Tuning interaction log (never the final evaluation split)")->required();
    sweep_cmd->add_option("--bank", sw.bank, "Item bank CSV")->required();
    sweep_cmd->add_option("--graph", sw.graph, "Concept graph file");
    sweep_cmd->add_option("--model", sw.model, "Model to tune");
    sweep_cmd->add_option("--nu2-grid", sw.nu2_grid, "Drift variances")->delimiter(',');
    sweep_cmd->add_option("--lambda-grid", sw.lambda_grid, "Prior weights")->delimiter(',');
    sweep_cmd->add_option("--gamma-grid", sw.gamma_grid, "Coupling weights")->delimiter(',');
    sweep_cmd->add_option("--out", sw.out, "Ranked results JSON");
    add_model_options(sweep_cmd, sw_model);
    add_common(sweep_cmd, sw_common);

    PredictOptions pr;
    ModelOptions pr_model;
    CommonOptions pr_common;
    auto* predict_cmd = app.add_subcommand("predict", "Predict one student's next responses");
    predict_cmd->add_option("--history", pr.history, "One student's interaction log")->required();
    predict_cmd->add_option("--bank", pr.bank, "Item bank CSV")->required();
    predict_cmd->add_option("--graph", pr.graph, "Concept graph file");
    predict_cmd->add_option("--model", pr.model, "Model");
    predict_cmd->add_option("--items", pr.items, "Candidate item ids")->delimiter(',')->required();
    predict_cmd->add_option("--at", pr.at, "Timestamp of the prediction (default: last response)");
    predict_cmd->add_option("--out", pr.out, "Write predictions here instead of stdout");
    add_model_options(predict_cmd, pr_model);
    predict_cmd->add_option("--format", pr_common.format, "Interaction log format")
        ->check(CLI::IsMember({"csv", "jsonl"}));

    std::vector<std::string> argv_storage{"tskirt"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) {
        argv.push_back(a.data());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            return cmd_simulate(simulate, sim, out);
        }
        if (calibrate_cmd->parsed()) {
            return cmd_calibrate(calibrate_cmd, cal, cal_common, out, err);
        }
        if (evaluate_cmd->parsed()) {
            return cmd_evaluate(evaluate_cmd, ev, ev_model, ev_common, out, err);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(sweep_cmd, sw, sw_model, sw_common, out, err);
        }
        if (predict_cmd->parsed()) {
            return cmd_predict(pr, pr_model, pr_common, out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}

} // namespace tskirt::cli
