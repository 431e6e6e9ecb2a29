#pragma once

#include "tskirt/concept_graph.hpp"
#include "tskirt/probit.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>

namespace tskirt {

/// Item parameters of the two-parameter ogive model.
struct ItemParams {
    std::string item_id;
    double discrimination = 1.0;
    double difficulty = 0.0;
    std::string concept_id;

    ItemParams() = default;
    /// Throws std::invalid_argument unless discrimination is finite and
    /// positive and difficulty is finite.
    ItemParams(std::string item_id, double discrimination, double difficulty, std::string concept_id);

    friend bool operator==(const ItemParams&, const ItemParams&) = default;
};

/// one observed response with its item parameters resolved. `concept_index` is
/// the index of the item's concept in the concept graph (0 for scalar
/// models).
struct ResponseEvent {
    double discrimination = 1.0;
    double difficulty = 0.0;
    std::size_t concept_index = 0;
    bool correct = false;
    std::int64_t step_index = 0;
    double timestamp = 0.0;
};

ResponseEvent make_event(const ItemParams& item, std::size_t concept_index, bool correct,
                         std::int64_t step_index, double timestamp);

/// The time at which the current proficiency is wanted.
struct TimePoint {
    std::int64_t step_index = 0;
    double timestamp = 0.0;
};

/// Elapsed time counted in responses.
struct StepClock {
    friend bool operator==(const StepClock&, const StepClock&) = default;
};

/// Elapsed wall-clock seconds divided by `seconds_per_unit`.
struct WallClock {
    double seconds_per_unit = 1.0;
    friend bool operator==(const WallClock&, const WallClock&) = default;
};

using Clock = std::variant<StepClock, WallClock>;

/// Wiener-process drift of proficiency: variance `drift_variance` (ν²) per
/// unit of elapsed time as measured by `clock`.
struct TemporalConfig {
    double drift_variance = 0.0;
    Clock clock = StepClock{};

    void validate() const;
    /// Elapsed time from `event` to `now` in clock units. Throws if the
    /// event lies after `now`.
    double elapsed(const ResponseEvent& event, TimePoint now) const;
};

/// Gaussian prior on scalar proficiency, stored as (mean, variance). The
/// equivalent penalty weight is λ = 1 / (2σ²).
struct ScalarPriorConfig {
    double mean = 0.0;
    double variance = 0.5;

    static ScalarPriorConfig from_lambda(double lambda, double mean = 0.0);
    double precision_weight() const { return 1.0 / (2.0 * variance); }
    void validate() const;
};

/// Φ(α(θ − β)).
double response_probability(double theta, const ItemParams& item);
double response_probability(double theta, double discrimination, double difficulty);

/// α / √(1 + α² ν² · elapsed): the discrimination a past response carries
/// about the current proficiency.
double effective_discrimination(double discrimination, double elapsed, double drift_variance);
double effective_discrimination(const ItemParams& item, double elapsed, const TemporalConfig& temporal);

/// ∫ Φ(α(x − β)) φ_{μ,σ²}(x) dx = Φ(α(μ − β) / √(1 + α²σ²)).
double gaussian_probit_integral(double alpha, double beta, double mu, double sigma2);

struct ScalarEvaluation {
    double value = 0.0;
    double gradient = 0.0;
    double curvature = 0.0;
};

struct VectorEvaluation {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// Approximate log-posterior of the current scalar proficiency: the
/// Gaussian log-prior plus, for every past response, the log-likelihood
/// under its effective discrimination. Unnormalized.
///
/// Throws std::invalid_argument for an empty history or an event after
/// `now`.
ScalarEvaluation approx_log_posterior_scalar(double theta, std::span<const ResponseEvent> history,
                                             TimePoint now, const TemporalConfig& temporal,
                                             const ScalarPriorConfig& prior);

/// Concept-vector form: each response reads only the coordinate of its own
/// concept, and the prior is the structured prior over the concept graph.
/// Throws std::invalid_argument naming the event whose concept index lies
/// outside the prior's graph.
VectorEvaluation approx_log_posterior_vector(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                             std::span<const ResponseEvent> history, TimePoint now,
                                             const TemporalConfig& temporal,
                                             const StructuredPrior& prior);

namespace detail {

// Log-likelihood of one response at proficiency `theta` with the given
// effective discrimination, plus its first two derivatives in theta.
ScalarEvaluation response_term(double theta, double effective_alpha, double difficulty, bool correct);

// The objectives above without the non-empty-history requirement.
ScalarEvaluation log_posterior_scalar(double theta, std::span<const ResponseEvent> history,
                                      TimePoint now, const TemporalConfig& temporal,
                                      const ScalarPriorConfig& prior);
void log_posterior_vector(const Eigen::Ref<const Eigen::VectorXd>& theta,
                          std::span<const ResponseEvent> history, TimePoint now,
                          const TemporalConfig& temporal, const StructuredPrior& prior,
                          VectorEvaluation& out);

} // namespace detail

} // namespace tskirt
