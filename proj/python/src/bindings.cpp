#include "tskirt/calibration.hpp"
#include "tskirt/cli.hpp"
#include "tskirt/concept_graph.hpp"
#include "tskirt/dataio.hpp"
#include "tskirt/evaluation.hpp"
#include "tskirt/irt.hpp"
#include "tskirt/probit.hpp"
#include "tskirt/simulate.hpp"
#include "tskirt/sweep.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace tskirt;

namespace {

Clock make_clock(std::optional<double> seconds_per_unit) {
    if (seconds_per_unit) {
        return WallClock{*seconds_per_unit};
    }
    return StepClock{};
}

py::dict report_to_dict(const EvaluationReport& report) {
    py::dict out;
    out["model"] = report.model.name();
    out["n_predictions"] = report.n_predictions;
    out["accuracy"] = report.accuracy;
    out["accuracy_sem"] = report.accuracy_sem;
    out["auc"] = report.auc;
    out["mean_log_likelihood"] = report.mean_log_likelihood;
    out["skipped_events"] = report.skipped_events;

    const std::size_t n = report.predictions.size();
    std::vector<double> probability(n);
    std::vector<std::uint8_t> outcome(n);
    std::vector<std::uint8_t> predicted(n);
    std::vector<std::int64_t> student(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pred = report.predictions[i];
        probability[i] = pred.probability.value_or(std::numeric_limits<double>::quiet_NaN());
        outcome[i] = pred.outcome;
        predicted[i] = pred.predicted_correct;
        student[i] = static_cast<std::int64_t>(pred.student);
    }
    const auto size = static_cast<py::ssize_t>(n);
    out["probability"] = py::array_t<double>(size, probability.data());
    out["outcome"] = py::array_t<std::uint8_t>(size, outcome.data()).attr("astype")("bool");
    out["predicted_correct"] = py::array_t<std::uint8_t>(size, predicted.data()).attr("astype")("bool");
    out["student"] = py::array_t<std::int64_t>(size, student.data());
    out["student_ids"] = report.student_ids;
    return out;
}

} // namespace

PYBIND11_MODULE(_tskirt, m) {
    m.doc() = "Native core of the tskirt package";

    py::register_exception<GraphError>(m, "GraphError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

    m.def("probit", py::vectorize(&probit), py::arg("x"));
    m.def("log_probit", py::vectorize(&log_probit), py::arg("x"));
    m.def("gaussian_probit_integral", py::vectorize(&gaussian_probit_integral), py::arg("alpha"), py::arg("beta"),
          py::arg("mu"), py::arg("sigma2"),
          "Expected probit response probability when the proficiency is normal with mean mu and variance sigma2.");
    m.def("response_probability",
          py::vectorize(static_cast<double (*)(double, double, double)>(&response_probability)), py::arg("theta"),
          py::arg("alpha"), py::arg("beta"));
    m.def("effective_discrimination",
          py::vectorize(static_cast<double (*)(double, double, double)>(&effective_discrimination)),
          py::arg("alpha"), py::arg("elapsed"), py::arg("drift_variance"));

    py::class_<ConceptGraph>(m, "ConceptGraph")
        .def(py::init<std::vector<std::string>, const std::vector<std::pair<std::string, std::string>>&>(),
             py::arg("concepts"), py::arg("edges") = std::vector<std::pair<std::string, std::string>>{})
        .def_static("chain", &ConceptGraph::chain, py::arg("concepts"))
        .def_static("isolated", &ConceptGraph::isolated, py::arg("concepts"))
        .def_static("load", [](const std::filesystem::path& path) { return read_concept_graph(path); })
        .def_property_readonly("concepts", &ConceptGraph::concepts)
        .def_property_readonly("edges",
                               [](const ConceptGraph& g) {
                                   std::vector<std::pair<std::string, std::string>> out;
                                   for (const auto& [a, b] : g.edges()) {
                                       out.emplace_back(g.concepts()[a], g.concepts()[b]);
                                   }
                                   return out;
                               })
        .def("__len__", &ConceptGraph::size)
        .def("index_of", &ConceptGraph::index_of);

    m.def(
        "prior_precision",
        [](const ConceptGraph& graph, double lambda, double gamma) {
            return build_prior(graph, lambda, gamma).precision();
        },
        py::arg("graph"), py::arg("lam"), py::arg("gamma"),
        "Precision matrix of the structured proficiency prior.");

    py::class_<ItemParams>(m, "ItemParams")
        .def(py::init<std::string, double, double, std::string>(), py::arg("item_id"), py::arg("discrimination"),
             py::arg("difficulty"), py::arg("concept_id") = "")
        .def_readwrite("item_id", &ItemParams::item_id)
        .def_readwrite("discrimination", &ItemParams::discrimination)
        .def_readwrite("difficulty", &ItemParams::difficulty)
        .def_readwrite("concept_id", &ItemParams::concept_id)
        .def("__eq__", [](const ItemParams& a, const ItemParams& b) { return a == b; })
        .def("__repr__", [](const ItemParams& p) {
            std::ostringstream s;
            s << "ItemParams(" << p.item_id << ", alpha=" << p.discrimination << ", beta=" << p.difficulty
              << ", concept=" << p.concept_id << ")";
            return s.str();
        });

    py::class_<ItemBank>(m, "ItemBank")
        .def(py::init<std::vector<ItemParams>>(), py::arg("items"))
        .def_static("load", [](const std::filesystem::path& path) { return read_item_bank(path); })
        .def("save", [](const ItemBank& bank, const std::filesystem::path& path) { write_item_bank(path, bank); })
        .def("__len__", &ItemBank::size)
        .def("__getitem__", &ItemBank::at, py::return_value_policy::reference_internal)
        .def("__contains__", [](const ItemBank& b, const std::string& id) { return b.find(id) != nullptr; })
        .def_property_readonly("items",
                               [](const ItemBank& b) {
                                   std::vector<ItemParams> out;
                                   for (const auto& [id, item] : b.items()) {
                                       out.push_back(item);
                                   }
                                   return out;
                               })
        .def_property_readonly("concepts", &ItemBank::concepts)
        .def_property_readonly("rounds", [](const ItemBank& b) { return b.meta.rounds; })
        .def_property_readonly("student_theta", [](const ItemBank& b) { return b.meta.student_theta; });

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](const std::vector<std::tuple<std::string, std::string, bool, std::int64_t>>& rows) {
                 std::vector<InteractionRecord> records;
                 records.reserve(rows.size());
                 for (const auto& [student, item, correct, time] : rows) {
                     records.push_back({student, item, correct, time});
                 }
                 return Dataset::from_records(records);
             }),
             py::arg("records"), "Build from (student_id, item_id, correct, timestamp) tuples.")
        .def_static(
            "load",
            [](const std::filesystem::path& path, const std::string& format) {
                return load(path, parse_data_format(format)).data;
            },
            py::arg("path"), py::arg("format") = "csv")
        .def(
            "save",
            [](const Dataset& d, const std::filesystem::path& path, const std::string& format) {
                write(path, d, parse_data_format(format));
            },
            py::arg("path"), py::arg("format") = "csv")
        .def("records",
             [](const Dataset& d) {
                 std::vector<std::tuple<std::string, std::string, bool, std::int64_t>> out;
                 for (const auto& s : d.students()) {
                     for (const auto& r : s.records) {
                         out.emplace_back(r.student_id, r.item_id, r.correct, r.timestamp);
                     }
                 }
                 return out;
             })
        .def_property_readonly("student_ids",
                               [](const Dataset& d) {
                                   std::vector<std::string> ids;
                                   for (const auto& s : d.students()) {
                                       ids.push_back(s.student_id);
                                   }
                                   return ids;
                               })
        .def_property_readonly("n_students", [](const Dataset& d) { return d.students().size(); })
        .def_property_readonly("n_responses", &Dataset::response_count)
        .def("summary",
             [](const Dataset& d) {
                 const auto s = d.summary();
                 py::dict out;
                 out["students"] = s.students;
                 out["items"] = s.items;
                 out["responses"] = s.responses;
                 out["percent_correct"] = s.percent_correct;
                 return out;
             })
        .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; })
        .def("__len__", &Dataset::response_count);

    m.def(
        "preprocess",
        [](const Dataset& d, std::size_t min_responses, std::size_t max_attempts) {
            return preprocess(d, PreprocessConfig{min_responses, max_attempts});
        },
        py::arg("data"), py::arg("min_responses") = 5, py::arg("max_attempts_per_item") = 4);

    py::class_<ModelVariant>(m, "ModelVariant")
        .def(py::init([](const std::string& name, std::optional<double> nu2, std::optional<double> lam,
                         std::optional<double> gamma) {
                 auto model = ModelVariant::by_name(name);
                 if (nu2) model.drift_variance = *nu2;
                 if (lam) model.lambda = *lam;
                 if (gamma) model.gamma = *gamma;
                 model.validate();
                 return model;
             }),
             py::arg("name"), py::arg("nu2") = py::none(), py::arg("lam") = py::none(), py::arg("gamma") = py::none())
        .def_static("names",
                    [] {
                        std::vector<std::string> out;
                        for (const auto& v : ModelVariant::all()) {
                            out.push_back(v.name());
                        }
                        return out;
                    })
        .def_property_readonly("name", &ModelVariant::name)
        .def_property_readonly("display_name", &ModelVariant::display_name)
        .def_readwrite("nu2", &ModelVariant::drift_variance)
        .def_readwrite("lam", &ModelVariant::lambda)
        .def_readwrite("gamma", &ModelVariant::gamma)
        .def_property_readonly("multidimensional", &ModelVariant::multidimensional)
        .def("__repr__", [](const ModelVariant& v) {
            std::ostringstream s;
            s << "ModelVariant(" << v.name() << ", nu2=" << v.drift_variance << ", lam=" << v.lambda
              << ", gamma=" << v.gamma << ")";
            return s.str();
        });

    m.def(
        "evaluate",
        [](const Dataset& data, const ItemBank& bank, const std::vector<ModelVariant>& models,
           const ConceptGraph* graph, std::optional<double> seconds_per_unit, unsigned threads) {
            EvaluationOptions options;
            options.clock = make_clock(seconds_per_unit);
            options.threads = threads;
            std::vector<EvaluationReport> reports;
            {
                py::gil_scoped_release release;
                reports = evaluate_models(data, bank, models, graph, options);
            }
            py::list out;
            for (const auto& r : reports) {
                out.append(report_to_dict(r));
            }
            return out;
        },
        py::arg("data"), py::arg("bank"), py::arg("models"), py::arg("graph") = nullptr,
        py::arg("seconds_per_unit") = py::none(), py::arg("threads") = 1,
        "Online test-then-train evaluation. Time runs in responses unless seconds_per_unit is given.");

    m.def(
        "sweep",
        [](const Dataset& data, const ItemBank& bank, const ModelVariant& base, std::vector<double> nu2,
           std::vector<double> lam, std::vector<double> gamma, const ConceptGraph* graph,
           std::optional<double> seconds_per_unit, unsigned threads) {
            EvaluationOptions options;
            options.clock = make_clock(seconds_per_unit);
            options.threads = threads;
            std::vector<SweepResult> results;
            {
                py::gil_scoped_release release;
                results = run_sweep(data, bank, base, SweepGrid{std::move(nu2), std::move(lam), std::move(gamma)},
                                    graph, options);
            }
            py::list out;
            for (const auto& r : results) {
                py::dict row;
                row["nu2"] = r.model.drift_variance;
                row["lam"] = r.model.lambda;
                row["gamma"] = r.model.gamma;
                row["accuracy"] = r.accuracy;
                row["accuracy_sem"] = r.accuracy_sem;
                row["auc"] = r.auc;
                row["mean_log_likelihood"] = r.mean_log_likelihood;
                out.append(row);
            }
            return out;
        },
        py::arg("data"), py::arg("bank"), py::arg("base"), py::arg("nu2") = std::vector<double>{},
        py::arg("lam") = std::vector<double>{}, py::arg("gamma") = std::vector<double>{}, py::arg("graph") = nullptr,
        py::arg("seconds_per_unit") = py::none(), py::arg("threads") = 1,
        "Grid search over hyperparameters, best accuracy first.");

    m.def(
        "auc",
        [](const std::vector<double>& scores, const std::vector<bool>& outcomes) {
            if (scores.size() != outcomes.size()) {
                throw std::invalid_argument("scores and outcomes differ in length");
            }
            std::vector<ScoredOutcome> scored;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                scored.push_back({scores[i], outcomes[i]});
            }
            return compute_auc(scored);
        },
        py::arg("scores"), py::arg("outcomes"));

    m.def(
        "calibrate",
        [](const Dataset& data, const std::map<std::string, std::string>& concepts, int max_rounds,
           double tolerance, unsigned threads) {
            CalibrationConfig config;
            config.max_outer_rounds = max_rounds;
            config.convergence_delta = tolerance;
            config.threads = threads;
            py::gil_scoped_release release;
            return calibrate(data, config, concepts);
        },
        py::arg("data"), py::arg("concepts") = std::map<std::string, std::string>{}, py::arg("max_rounds") = 50,
        py::arg("tolerance") = 1e-5, py::arg("threads") = 1);

    m.def(
        "simulate",
        [](std::uint64_t seed, std::size_t students, std::size_t responses, const ConceptGraph& graph,
           std::size_t items_per_concept, double nu2, std::optional<double> seconds_per_unit, double lam,
           double gamma, std::size_t block_length, bool coupled_drift, unsigned threads) {
            SimulationScenario s;
            s.seed = seed;
            s.n_students = students;
            s.responses_per_student = responses;
            s.graph = graph;
            s.items.items_per_concept = items_per_concept;
            s.true_temporal = TemporalConfig{nu2, make_clock(seconds_per_unit)};
            s.prior_lambda = lam;
            s.prior_gamma = gamma;
            if (block_length > 0) {
                s.assignment = ConceptBlocks{block_length};
            }
            s.drift_coupling = coupled_drift ? DriftCoupling::PriorCorrelation : DriftCoupling::Independent;
            SimulationResult result;
            {
                py::gil_scoped_release release;
                result = generate(s, threads);
            }
            return py::make_tuple(result.data, result.bank);
        },
        py::arg("seed") = 0, py::arg("students") = 100, py::arg("responses") = 50,
        py::arg("graph") = ConceptGraph::isolated({"c0"}), py::arg("items_per_concept") = 10, py::arg("nu2") = 0.0,
        py::arg("seconds_per_unit") = py::none(), py::arg("lam") = 1.0, py::arg("gamma") = 0.0,
        py::arg("block_length") = 0, py::arg("coupled_drift") = false, py::arg("threads") = 1,
        "Draw a synthetic cohort. Returns (dataset, true item bank).");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a command-line invocation in-process. Returns (exit code, stdout, stderr).");
}
