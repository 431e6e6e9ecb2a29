#include "tskirt/irt.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tskirt {

ItemParams::ItemParams(std::string id, double alpha, double beta, std::string concept_id_)
    : item_id(std::move(id)), discrimination(alpha), difficulty(beta), concept_id(std::move(concept_id_)) {
    if (!std::isfinite(discrimination) || !(discrimination > 0.0)) {
        throw std::invalid_argument("item '" + item_id + "': discrimination must be finite and > 0");
    }
    if (!std::isfinite(difficulty)) {
        throw std::invalid_argument("item '" + item_id + "': difficulty must be finite");
    }
}

ResponseEvent make_event(const ItemParams& item, std::size_t concept_index, bool correct,
                         std::int64_t step_index, double timestamp) {
    return ResponseEvent{item.discrimination, item.difficulty, concept_index, correct, step_index, timestamp};
}

void TemporalConfig::validate() const {
    if (!std::isfinite(drift_variance) || drift_variance < 0.0) {
        throw std::invalid_argument("drift variance must be finite and >= 0");
    }
    if (const auto* wall = std::get_if<WallClock>(&clock)) {
        if (!(wall->seconds_per_unit > 0.0) || !std::isfinite(wall->seconds_per_unit)) {
            throw std::invalid_argument("wall clock seconds_per_unit must be > 0");
        }
    }
}

double TemporalConfig::elapsed(const ResponseEvent& event, TimePoint now) const {
    if (std::holds_alternative<StepClock>(clock)) {
        if (event.step_index > now.step_index) {
            throw std::invalid_argument("response at step " + std::to_string(event.step_index) +
                                        " lies after the evaluation step " +
                                        std::to_string(now.step_index));
        }
        return static_cast<double>(now.step_index - event.step_index);
    }
    if (event.timestamp > now.timestamp) {
        throw std::invalid_argument("response at time " + std::to_string(event.timestamp) +
                                    " lies after the evaluation time " + std::to_string(now.timestamp));
    }
    return (now.timestamp - event.timestamp) / std::get<WallClock>(clock).seconds_per_unit;
}

ScalarPriorConfig ScalarPriorConfig::from_lambda(double lambda, double mean) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("scalar prior requires lambda > 0");
    }
    return ScalarPriorConfig{mean, 1.0 / (2.0 * lambda)};
}

void ScalarPriorConfig::validate() const {
    if (!std::isfinite(mean)) {
        throw std::invalid_argument("scalar prior mean must be finite");
    }
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw std::invalid_argument("scalar prior variance must be finite and > 0");
    }
}

double response_probability(double theta, double discrimination, double difficulty) {
    return probit(discrimination * (theta - difficulty));
}

double response_probability(double theta, const ItemParams& item) {
    return response_probability(theta, item.discrimination, item.difficulty);
}

double effective_discrimination(double discrimination, double elapsed, double drift_variance) {
    return discrimination / std::sqrt(1.0 + discrimination * discrimination * drift_variance * elapsed);
}

double effective_discrimination(const ItemParams& item, double elapsed, const TemporalConfig& temporal) {
    if (elapsed < 0.0) {
        throw std::invalid_argument("elapsed time must be >= 0");
    }
    return effective_discrimination(item.discrimination, elapsed, temporal.drift_variance);
}

double gaussian_probit_integral(double alpha, double beta, double mu, double sigma2) {
    if (sigma2 < 0.0) {
        throw std::invalid_argument("gaussian_probit_integral: sigma2 must be >= 0");
    }
    return probit(alpha * (mu - beta) / std::sqrt(1.0 + alpha * alpha * sigma2));
}

namespace detail {

ScalarEvaluation response_term(double theta, double effective_alpha, double difficulty, bool correct) {
    const double sign = correct ? 1.0 : -1.0;
    const double z = sign * effective_alpha * (theta - difficulty);
    return ScalarEvaluation{
        log_probit(z),
        sign * effective_alpha * inverse_mills(z),
        effective_alpha * effective_alpha * log_probit_curvature(z),
    };
}

ScalarEvaluation log_posterior_scalar(double theta, std::span<const ResponseEvent> history,
                                      TimePoint now, const TemporalConfig& temporal,
                                      const ScalarPriorConfig& prior) {
    const double precision = 1.0 / prior.variance;
    const double centered = theta - prior.mean;
    ScalarEvaluation total{-0.5 * precision * centered * centered, -precision * centered, -precision};
    for (const auto& event : history) {
        const double alpha = effective_discrimination(event.discrimination, temporal.elapsed(event, now),
                                                      temporal.drift_variance);
        const auto term = response_term(theta, alpha, event.difficulty, event.correct);
        total.value += term.value;
        total.gradient += term.gradient;
        total.curvature += term.curvature;
    }
    return total;
}

void log_posterior_vector(const Eigen::Ref<const Eigen::VectorXd>& theta,
                          std::span<const ResponseEvent> history, TimePoint now,
                          const TemporalConfig& temporal, const StructuredPrior& prior,
                          VectorEvaluation& out) {
    const auto dim = static_cast<Eigen::Index>(prior.dimension());
    if (theta.size() != dim) {
        throw std::invalid_argument("proficiency vector has length " + std::to_string(theta.size()) +
                                    ", prior expects " + std::to_string(dim));
    }
    out.value = log_prior_density(prior, theta);
    out.gradient.noalias() = -prior.precision() * theta;
    out.hessian = -prior.precision();
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& event = history[i];
        if (event.concept_index >= prior.dimension()) {
            throw std::invalid_argument("response " + std::to_string(i) + " (step " +
                                        std::to_string(event.step_index) + ") refers to concept index " +
                                        std::to_string(event.concept_index) + " outside the concept graph");
        }
        const auto c = static_cast<Eigen::Index>(event.concept_index);
        const double alpha = effective_discrimination(event.discrimination, temporal.elapsed(event, now),
                                                      temporal.drift_variance);
        const auto term = response_term(theta(c), alpha, event.difficulty, event.correct);
        out.value += term.value;
        out.gradient(c) += term.gradient;
        out.hessian(c, c) += term.curvature;
    }
}

} // namespace detail

ScalarEvaluation approx_log_posterior_scalar(double theta, std::span<const ResponseEvent> history,
                                             TimePoint now, const TemporalConfig& temporal,
                                             const ScalarPriorConfig& prior) {
    if (history.empty()) {
        throw std::invalid_argument("approx_log_posterior_scalar: empty history");
    }
    return detail::log_posterior_scalar(theta, history, now, temporal, prior);
}

VectorEvaluation approx_log_posterior_vector(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                             std::span<const ResponseEvent> history, TimePoint now,
                                             const TemporalConfig& temporal,
                                             const StructuredPrior& prior) {
    VectorEvaluation out;
    detail::log_posterior_vector(theta, history, now, temporal, prior, out);
    return out;
}

} // namespace tskirt
