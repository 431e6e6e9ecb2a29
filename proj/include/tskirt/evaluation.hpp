#pragma once

#include "tskirt/calibration.hpp"
#include "tskirt/concept_graph.hpp"
#include "tskirt/dataio.hpp"
#include "tskirt/inference.hpp"
#include "tskirt/irt.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tskirt {

enum class ModelKind { SPC, Static2PO, Temporal2PO, FactorialMVN, CorrelatedMVN, TSKIRT };

/// A student response model with its hyperparameters. `drift_variance` is
/// ν², so the named defaults store the square of the quoted ν.
struct ModelVariant {
    ModelKind kind = ModelKind::Static2PO;
    double drift_variance = 0.0;
    double lambda = 1.0;
    double gamma = 0.0;

    /// Majority vote over the student's previous responses.
    static ModelVariant spc();
    /// ν = 0, λ = 1.
    static ModelVariant static2po();
    /// ν = 10.
    static ModelVariant temporal2po();
    /// One coordinate per concept, ν = 0, γ = 0, λ = 1.
    static ModelVariant factorial_mvn();
    /// γ = 0.5, ν = 0.
    static ModelVariant correlated_mvn();
    /// γ = 0.5, ν = 0.1.
    static ModelVariant tskirt();

    /// Accepts the keys returned by name().
    static ModelVariant by_name(std::string_view name);
    static std::vector<ModelVariant> all();

    std::string name() const;
    std::string display_name() const;
    bool latent() const { return kind != ModelKind::SPC; }
    bool multidimensional() const;
    void validate() const;

    friend bool operator==(const ModelVariant&, const ModelVariant&) = default;
};

struct EvaluationOptions {
    Clock clock = StepClock{};
    SolverConfig solver;
    /// SPC at exactly half correct (including no history) predicts correct.
    bool spc_tie_predicts_correct = true;
    /// A predicted probability of exactly 0.5 counts as predicting correct.
    bool threshold_tie_predicts_correct = true;
    /// Seed each solve with the previous estimate of the same student.
    bool warm_start = true;
    unsigned threads = 1;
};

/// Streaming predictor for one student: forecast the next response from the
/// responses observed so far, then observe it.
class OnlinePredictor {
public:
    struct Forecast {
        /// Absent for SPC, which emits no score.
        std::optional<double> probability;
        bool predicted_correct = false;
        bool tie = false;
    };

    /// `prior` must outlive the predictor and is required for
    /// multidimensional models.
    OnlinePredictor(ModelVariant model, const StructuredPrior* prior, EvaluationOptions options);

    /// Forecast for a response to the query's item at the query's time. The
    /// query's `correct` field is ignored. Repeated queries at the same time
    /// with no new observation reuse one proficiency estimate.
    Forecast forecast(const ResponseEvent& query);
    void observe(const ResponseEvent& event);

    const std::vector<ResponseEvent>& history() const { return history_; }
    const std::optional<ProficiencyEstimate>& last_estimate() const { return estimate_; }

private:
    ModelVariant model_;
    const StructuredPrior* prior_;
    EvaluationOptions options_;
    std::vector<ResponseEvent> history_;
    std::optional<ProficiencyEstimate> estimate_;
    std::optional<std::pair<TimePoint, std::size_t>> estimate_key_;
    std::size_t correct_count_ = 0;

    const ProficiencyEstimate& estimate_at(TimePoint now);
};

/// Maps item ids to resolved response events for one model. Vector models
/// resolve the item's concept against the graph.
class EventResolver {
public:
    EventResolver(const ItemBank& bank, const ConceptGraph* graph);
    /// nullopt for an item missing from the bank; throws for an item whose
    /// concept is missing from the graph.
    std::optional<ResponseEvent> resolve(const InteractionRecord& record, std::int64_t step_index) const;

private:
    const ItemBank* bank_;
    const ConceptGraph* graph_;
};

struct Prediction {
    std::size_t student = 0;
    std::size_t position = 0;
    std::optional<double> probability;
    bool predicted_correct = false;
    bool outcome = false;
};

struct EvaluationReport {
    ModelVariant model;
    std::size_t n_predictions = 0;
    double accuracy = 0.0;
    double accuracy_sem = 0.0;
    std::optional<double> auc;
    std::optional<double> mean_log_likelihood;
    std::size_t skipped_events = 0;
    std::size_t threshold_ties = 0;
    std::vector<std::string> student_ids;
    std::vector<Prediction> predictions;
};

/// Online (test-then-train) evaluation: every response is predicted from
/// the same student's earlier responses only, then revealed. Responses to
/// items missing from the bank are skipped and counted. `graph` is
/// required for multidimensional models.
EvaluationReport run_online_evaluation(const Dataset& data, const ItemBank& bank, const ModelVariant& model,
                                       const ConceptGraph* graph, const EvaluationOptions& options = {});

/// Several models over identical event streams.
std::vector<EvaluationReport> evaluate_models(const Dataset& data, const ItemBank& bank,
                                              std::span<const ModelVariant> models, const ConceptGraph* graph,
                                              const EvaluationOptions& options = {});

struct ScoredOutcome {
    double score = 0.0;
    bool outcome = false;
};

/// Mann-Whitney AUC with ties counted half. nullopt unless both classes are
/// present.
std::optional<double> compute_auc(std::span<const ScoredOutcome> scored);

/// Mean of r log p + (1 - r) log(1 - p) with p clamped away from 0 and 1.
double mean_log_likelihood(std::span<const ScoredOutcome> scored);

struct BucketRow {
    std::size_t bin = 0;
    double lower = 0.0;
    double upper = 0.0;
    std::string model;
    std::size_t n_students = 0;
    std::size_t n_predictions = 0;
    std::optional<double> accuracy;
    std::optional<double> auc;
    std::optional<double> mean_log_likelihood;
};

/// Per-bin metrics with students binned by their overall fraction of
/// correct evaluated responses into `n_bins` equal-width bins. One row per
/// (bin, model), bins in ascending order.
std::vector<BucketRow> bucket_by_student_percent_correct(std::span<const EvaluationReport> reports,
                                                         std::size_t n_bins);

/// Fixed-width text table with accuracy ± 1 SEM and AUC columns.
std::string format_results_table(std::span<const EvaluationReport> reports);

void write_bucket_table(std::ostream& out, std::span<const BucketRow> rows);

} // namespace tskirt
