#include "tskirt/evaluation.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tskirt {

ModelVariant ModelVariant::spc() { return {ModelKind::SPC, 0.0, 1.0, 0.0}; }
ModelVariant ModelVariant::static2po() { return {ModelKind::Static2PO, 0.0, 1.0, 0.0}; }
ModelVariant ModelVariant::temporal2po() { return {ModelKind::Temporal2PO, 10.0 * 10.0, 1.0, 0.0}; }
ModelVariant ModelVariant::factorial_mvn() { return {ModelKind::FactorialMVN, 0.0, 1.0, 0.0}; }
ModelVariant ModelVariant::correlated_mvn() { return {ModelKind::CorrelatedMVN, 0.0, 1.0, 0.5}; }
ModelVariant ModelVariant::tskirt() { return {ModelKind::TSKIRT, 0.1 * 0.1, 1.0, 0.5}; }

std::vector<ModelVariant> ModelVariant::all() {
    return {spc(), static2po(), temporal2po(), factorial_mvn(), correlated_mvn(), tskirt()};
}

ModelVariant ModelVariant::by_name(std::string_view name) {
    for (const auto& m : all()) {
        if (m.name() == name) {
            return m;
        }
    }
    throw std::invalid_argument("unknown model '" + std::string(name) +
                                "' (expected spc, static2po, temporal2po, factorial_mvn, correlated_mvn or tskirt)");
}

std::string ModelVariant::name() const {
    switch (kind) {
    case ModelKind::SPC: return "spc";
    case ModelKind::Static2PO: return "static2po";
    case ModelKind::Temporal2PO: return "temporal2po";
    case ModelKind::FactorialMVN: return "factorial_mvn";
    case ModelKind::CorrelatedMVN: return "correlated_mvn";
    case ModelKind::TSKIRT: return "tskirt";
    }
    return "unknown";
}

std::string ModelVariant::display_name() const {
    switch (kind) {
    case ModelKind::SPC: return "SPC";
    case ModelKind::Static2PO: return "2PO IRT";
    case ModelKind::Temporal2PO: return "2PO temporal IRT";
    case ModelKind::FactorialMVN: return "Factorial MVN 2PO IRT";
    case ModelKind::CorrelatedMVN: return "Correlated MVN 2PO IRT";
    case ModelKind::TSKIRT: return "T-SKIRT";
    }
    return "unknown";
}

bool ModelVariant::multidimensional() const {
    return kind == ModelKind::FactorialMVN || kind == ModelKind::CorrelatedMVN || kind == ModelKind::TSKIRT;
}

void ModelVariant::validate() const {
    if (!latent()) {
        return;
    }
    if (!(drift_variance >= 0.0) || !std::isfinite(drift_variance)) {
        throw std::invalid_argument(name() + ": drift variance must be finite and >= 0");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument(name() + ": lambda must be > 0");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument(name() + ": gamma must be >= 0");
    }
}

OnlinePredictor::OnlinePredictor(ModelVariant model, const StructuredPrior* prior, EvaluationOptions options)
    : model_(model), prior_(prior), options_(std::move(options)) {
    model_.validate();
    if (model_.multidimensional() && prior_ == nullptr) {
        throw std::invalid_argument(model_.name() + " needs a structured prior");
    }
}

OnlinePredictor::Forecast OnlinePredictor::forecast(const ResponseEvent& query) {
    Forecast out;
    if (!model_.latent()) {
        const std::size_t n = history_.size();
        out.tie = 2 * correct_count_ == n;
        out.predicted_correct = out.tie ? options_.spc_tie_predicts_correct : 2 * correct_count_ > n;
        return out;
    }

    if (model_.multidimensional() && query.concept_index >= prior_->dimension()) {
        throw std::invalid_argument("query concept index outside the concept graph");
    }
    const auto& estimate = estimate_at(TimePoint{query.step_index, query.timestamp});
    const double theta = estimate.theta(model_.multidimensional() ? static_cast<Eigen::Index>(query.concept_index) : 0);
    const double p = response_probability(theta, query.discrimination, query.difficulty);
    out.probability = p;
    out.tie = p == 0.5;
    out.predicted_correct = out.tie ? options_.threshold_tie_predicts_correct : p > 0.5;
    return out;
}

const ProficiencyEstimate& OnlinePredictor::estimate_at(TimePoint now) {
    const std::pair key{now, history_.size()};
    if (estimate_ && estimate_key_ && estimate_key_->first.step_index == now.step_index &&
        estimate_key_->first.timestamp == now.timestamp && estimate_key_->second == key.second) {
        return *estimate_;
    }
    const TemporalConfig temporal{model_.drift_variance, options_.clock};
    SolverConfig solver = options_.solver;
    if (options_.warm_start && estimate_) {
        solver.initial_point = estimate_->theta;
    }
    if (model_.multidimensional()) {
        const VectorLogPosterior objective(history_, now, temporal, *prior_);
        estimate_ = map_estimate(objective, solver);
    } else {
        const ScalarLogPosterior objective(history_, now, temporal, ScalarPriorConfig::from_lambda(model_.lambda));
        estimate_ = map_estimate(objective, solver);
    }
    estimate_key_ = key;
    return *estimate_;
}

void OnlinePredictor::observe(const ResponseEvent& event) {
    if (!history_.empty()) {
        const auto& last = history_.back();
        if (event.step_index <= last.step_index || event.timestamp < last.timestamp) {
            throw std::invalid_argument("responses must be observed in time order");
        }
    }
    history_.push_back(event);
    correct_count_ += event.correct ? 1 : 0;
}

EventResolver::EventResolver(const ItemBank& bank, const ConceptGraph* graph) : bank_(&bank), graph_(graph) {}

std::optional<ResponseEvent> EventResolver::resolve(const InteractionRecord& record, std::int64_t step_index) const {
    const ItemParams* item = bank_->find(record.item_id);
    if (item == nullptr) {
        return std::nullopt;
    }
    std::size_t concept_index = 0;
    if (graph_ != nullptr) {
        const auto index = graph_->index_of(item->concept_id);
        if (!index) {
            throw std::invalid_argument("item '" + item->item_id + "' has concept '" + item->concept_id +
                                        "' which is not in the concept graph");
        }
        concept_index = *index;
    }
    return make_event(*item, concept_index, record.correct, step_index, static_cast<double>(record.timestamp));
}

namespace {

struct StudentResult {
    std::vector<Prediction> predictions;
    std::size_t skipped = 0;
};

StudentResult evaluate_student(std::size_t student, const StudentHistory& history, const EventResolver& resolver,
                               const ModelVariant& model, const StructuredPrior* prior,
                               const EvaluationOptions& options) {
    StudentResult out;
    OnlinePredictor predictor(model, prior, options);
    for (std::size_t i = 0; i < history.records.size(); ++i) {
        const auto& record = history.records[i];
        if (i > 0 && record.timestamp < history.records[i - 1].timestamp) {
            throw std::invalid_argument("student '" + history.student_id + "': responses out of time order");
        }
        const auto event = resolver.resolve(record, static_cast<std::int64_t>(i));
        if (!event) {
            ++out.skipped;
            continue;
        }
        const auto forecast = predictor.forecast(*event);
        out.predictions.push_back(Prediction{student, i, forecast.probability, forecast.predicted_correct, record.correct});
        predictor.observe(*event);
    }
    return out;
}

std::vector<ScoredOutcome> scored_outcomes(std::span<const Prediction> predictions) {
    std::vector<ScoredOutcome> scored;
    scored.reserve(predictions.size());
    for (const auto& p : predictions) {
        if (p.probability) {
            scored.push_back({*p.probability, p.outcome});
        }
    }
    return scored;
}

void fill_metrics(EvaluationReport& report) {
    std::size_t hits = 0;
    for (const auto& p : report.predictions) {
        hits += p.predicted_correct == p.outcome ? 1 : 0;
        if (p.probability && *p.probability == 0.5) {
            ++report.threshold_ties;
        }
    }
    report.n_predictions = report.predictions.size();
    if (report.n_predictions > 0) {
        const double n = static_cast<double>(report.n_predictions);
        report.accuracy = static_cast<double>(hits) / n;
        report.accuracy_sem = std::sqrt(report.accuracy * (1.0 - report.accuracy) / n);
    }
    if (report.model.latent() && report.n_predictions > 0) {
        const auto scored = scored_outcomes(report.predictions);
        report.auc = compute_auc(scored);
        report.mean_log_likelihood = mean_log_likelihood(scored);
    }
}

} // namespace

EvaluationReport run_online_evaluation(const Dataset& data, const ItemBank& bank, const ModelVariant& model,
                                       const ConceptGraph* graph, const EvaluationOptions& options) {
    model.validate();
    options.solver.validate();
    std::optional<StructuredPrior> prior;
    const ConceptGraph* resolve_graph = nullptr;
    if (model.multidimensional()) {
        if (graph == nullptr) {
            throw std::invalid_argument(model.name() + " needs a concept graph");
        }
        prior = build_prior(*graph, model.lambda, model.gamma);
        resolve_graph = &prior->graph();
    }
    const EventResolver resolver(bank, resolve_graph);

    const auto& students = data.students();
    std::vector<StudentResult> results(students.size());
    detail::parallel_for(students.size(), options.threads, [&](std::size_t s) {
        results[s] = evaluate_student(s, students[s], resolver, model, prior ? &*prior : nullptr, options);
    });

    EvaluationReport report;
    report.model = model;
    for (std::size_t s = 0; s < students.size(); ++s) {
        report.student_ids.push_back(students[s].student_id);
        report.skipped_events += results[s].skipped;
        report.predictions.insert(report.predictions.end(), results[s].predictions.begin(),
                                  results[s].predictions.end());
    }
    fill_metrics(report);
    return report;
}

std::vector<EvaluationReport> evaluate_models(const Dataset& data, const ItemBank& bank,
                                              std::span<const ModelVariant> models, const ConceptGraph* graph,
                                              const EvaluationOptions& options) {
    std::vector<EvaluationReport> out;
    out.reserve(models.size());
    for (const auto& m : models) {
        out.push_back(run_online_evaluation(data, bank, m, graph, options));
    }
    return out;
}

std::optional<double> compute_auc(std::span<const ScoredOutcome> scored) {
    std::vector<std::size_t> order(scored.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scored[a].score < scored[b].score; });

    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scored[order[j]].score == scored[order[i]].score) {
            ++j;
        }
        // ranks i+1 .. j share their average
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (scored[order[k]].outcome) {
                positive_rank_sum += rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = scored.size() - positives;
    if (positives == 0 || negatives == 0) {
        return std::nullopt;
    }
    const double np = static_cast<double>(positives);
    const double u = positive_rank_sum - 0.5 * np * (np + 1.0);
    return u / (np * static_cast<double>(negatives));
}

double mean_log_likelihood(std::span<const ScoredOutcome> scored) {
    if (scored.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& s : scored) {
        const double p = clamp_probability(s.score);
        total += s.outcome ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(scored.size());
}

std::vector<BucketRow> bucket_by_student_percent_correct(std::span<const EvaluationReport> reports,
                                                         std::size_t n_bins) {
    if (n_bins == 0) {
        throw std::invalid_argument("bucketing needs at least one bin");
    }
    std::vector<BucketRow> rows;
    for (std::size_t bin = 0; bin < n_bins; ++bin) {
        for (const auto& report : reports) {
            const std::size_t n_students = report.student_ids.size();
            std::vector<std::size_t> correct(n_students, 0);
            std::vector<std::size_t> total(n_students, 0);
            for (const auto& p : report.predictions) {
                correct[p.student] += p.outcome ? 1 : 0;
                ++total[p.student];
            }
            std::vector<bool> in_bin(n_students, false);
            BucketRow row;
            row.bin = bin;
            row.lower = static_cast<double>(bin) / static_cast<double>(n_bins);
            row.upper = static_cast<double>(bin + 1) / static_cast<double>(n_bins);
            row.model = report.model.name();
            for (std::size_t s = 0; s < n_students; ++s) {
                if (total[s] == 0) {
                    continue;
                }
                const double pc = static_cast<double>(correct[s]) / static_cast<double>(total[s]);
                const auto b = std::min(n_bins - 1, static_cast<std::size_t>(std::floor(pc * static_cast<double>(n_bins))));
                if (b == bin) {
                    in_bin[s] = true;
                    ++row.n_students;
                }
            }
            std::vector<Prediction> selected;
            for (const auto& p : report.predictions) {
                if (in_bin[p.student]) {
                    selected.push_back(p);
                }
            }
            row.n_predictions = selected.size();
            if (!selected.empty()) {
                std::size_t hits = 0;
                for (const auto& p : selected) {
                    hits += p.predicted_correct == p.outcome ? 1 : 0;
                }
                row.accuracy = static_cast<double>(hits) / static_cast<double>(selected.size());
                if (report.model.latent()) {
                    const auto scored = scored_outcomes(selected);
                    row.auc = compute_auc(scored);
                    row.mean_log_likelihood = mean_log_likelihood(scored);
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

std::string fixed(double v, int digits) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
    return buffer;
}

std::string optional_text(const std::optional<double>& v, int digits = 4) {
    return v ? fixed(*v, digits) : "n/a";
}

} // namespace

std::string format_results_table(std::span<const EvaluationReport> reports) {
    std::size_t width = 5;
    for (const auto& r : reports) {
        width = std::max(width, r.model.display_name().size());
    }
    std::ostringstream out;
    auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    out << pad("Model", width) << "  " << pad("Accuracy +/- 1 SEM", 20) << "  " << pad("AUC", 8) << "  " << "Mean LL"
        << '\n';
    for (const auto& r : reports) {
        out << pad(r.model.display_name(), width) << "  "
            << pad(fixed(r.accuracy, 4) + " +/- " + fixed(r.accuracy_sem, 4), 20) << "  " << pad(optional_text(r.auc), 8)
            << "  " << optional_text(r.mean_log_likelihood) << '\n';
    }
    return out.str();
}

void write_bucket_table(std::ostream& out, std::span<const BucketRow> rows) {
    out << "bin\tlower\tupper\tmodel\tn_students\tn_predictions\taccuracy\tauc\tmean_log_likelihood\n";
    for (const auto& r : rows) {
        out << r.bin << '\t' << fixed(r.lower, 6) << '\t' << fixed(r.upper, 6) << '\t' << r.model << '\t' << r.n_students
            << '\t' << r.n_predictions << '\t' << optional_text(r.accuracy, 6) << '\t' << optional_text(r.auc, 6) << '\t'
            << optional_text(r.mean_log_likelihood, 6) << '\n';
    }
}

} // namespace tskirt
