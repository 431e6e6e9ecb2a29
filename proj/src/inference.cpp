#include "tskirt/inference.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>
#include <string>

namespace tskirt {

void SolverConfig::validate() const {
    if (!(gradient_tolerance > 0.0)) {
        throw std::invalid_argument("solver gradient tolerance must be > 0");
    }
    if (max_iterations < 0) {
        throw std::invalid_argument("solver max_iterations must be >= 0");
    }
}

ScalarLogPosterior::ScalarLogPosterior(std::span<const ResponseEvent> history, TimePoint now,
                                       TemporalConfig temporal, ScalarPriorConfig prior)
    : history_(history), now_(now), temporal_(std::move(temporal)), prior_(prior) {
    temporal_.validate();
    prior_.validate();
}

void ScalarLogPosterior::evaluate(const Eigen::VectorXd& theta, VectorEvaluation& out) const {
    const auto e = detail::log_posterior_scalar(theta(0), history_, now_, temporal_, prior_);
    out.value = e.value;
    out.gradient.resize(1);
    out.gradient(0) = e.gradient;
    out.hessian.resize(1, 1);
    out.hessian(0, 0) = e.curvature;
}

Eigen::VectorXd ScalarLogPosterior::default_start() const {
    return Eigen::VectorXd::Constant(1, prior_.mean);
}

VectorLogPosterior::VectorLogPosterior(std::span<const ResponseEvent> history, TimePoint now,
                                       TemporalConfig temporal, const StructuredPrior& prior)
    : history_(history), now_(now), temporal_(std::move(temporal)), prior_(&prior) {
    temporal_.validate();
}

void VectorLogPosterior::evaluate(const Eigen::VectorXd& theta, VectorEvaluation& out) const {
    detail::log_posterior_vector(theta, history_, now_, temporal_, *prior_, out);
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-12;

} // namespace

ProficiencyEstimate map_estimate(const LogPosterior& objective, const SolverConfig& solver) {
    solver.validate();
    const Eigen::Index dim = objective.dimension();

    ProficiencyEstimate result;
    result.theta = solver.initial_point ? *solver.initial_point : objective.default_start();
    if (result.theta.size() != dim) {
        throw std::invalid_argument("initial point has length " + std::to_string(result.theta.size()) +
                                    ", objective expects " + std::to_string(dim));
    }

    VectorEvaluation current;
    objective.evaluate(result.theta, current);
    if (!std::isfinite(current.value) || !current.gradient.allFinite()) {
        throw std::invalid_argument("log-posterior is not finite at the initial point");
    }

    VectorEvaluation trial;
    Eigen::VectorXd direction(dim);
    Eigen::VectorXd candidate(dim);
    Eigen::LLT<Eigen::MatrixXd> llt(dim);
    double grad_norm = current.gradient.norm();

    while (grad_norm > solver.gradient_tolerance && result.iterations < solver.max_iterations) {
        // Newton direction solves (-H) d = g; -H is positive definite for a
        // strictly concave objective.
        llt.compute(-current.hessian);
        bool newton = llt.info() == Eigen::Success;
        if (newton) {
            direction = llt.solve(current.gradient);
            newton = direction.allFinite() && current.gradient.dot(direction) > 0.0;
        }
        if (!newton) {
            direction = current.gradient;
        }

        const double slope = current.gradient.dot(direction);
        double step = 1.0;
        bool accepted = false;
        while (step >= kMinStep) {
            candidate = result.theta + step * direction;
            objective.evaluate(candidate, trial);
            if (std::isfinite(trial.value)) {
                const bool sufficient = trial.value >= current.value + kArmijo * step * slope;
                // Near the optimum the value change is below rounding; accept
                // any step that does not lose value and shrinks the gradient.
                const bool rounding = trial.value >= current.value - 1e-14 * (1.0 + std::abs(current.value)) &&
                                      trial.gradient.norm() < grad_norm;
                if (sufficient || rounding) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }
        result.theta = candidate;
        std::swap(current, trial);
        grad_norm = current.gradient.norm();
        ++result.iterations;
    }

    result.converged = grad_norm <= solver.gradient_tolerance;
    result.final_gradient_norm = grad_norm;
    result.objective_value = current.value;
    return result;
}

double predict_next(const ProficiencyEstimate& estimate, const ItemParams& item) {
    if (estimate.theta.size() != 1) {
        throw std::invalid_argument("scalar prediction needs a one-dimensional estimate");
    }
    return response_probability(estimate.theta(0), item);
}

double predict_next(const ProficiencyEstimate& estimate, const ItemParams& item, const ConceptGraph& concepts) {
    const auto index = concepts.index_of(item.concept_id);
    if (!index) {
        throw std::invalid_argument("item '" + item.item_id + "' has unknown concept '" + item.concept_id + "'");
    }
    if (static_cast<Eigen::Index>(*index) >= estimate.theta.size()) {
        throw std::invalid_argument("estimate does not cover concept '" + item.concept_id + "'");
    }
    return response_probability(estimate.theta(static_cast<Eigen::Index>(*index)), item);
}

} // namespace tskirt
