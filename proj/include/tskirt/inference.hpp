#pragma once

#include "tskirt/irt.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>

namespace tskirt {

struct SolverConfig {
    double gradient_tolerance = 1e-8;
    int max_iterations = 100;
    /// Starting point; the prior mean (zero) when empty.
    std::optional<Eigen::VectorXd> initial_point;

    void validate() const;
};

/// MAP point estimate of the current proficiency with solver diagnostics.
struct ProficiencyEstimate {
    Eigen::VectorXd theta;
    bool converged = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double objective_value = 0.0;
};

/// A concave log-posterior over proficiencies.
class LogPosterior {
public:
    virtual ~LogPosterior() = default;
    virtual Eigen::Index dimension() const = 0;
    virtual void evaluate(const Eigen::VectorXd& theta, VectorEvaluation& out) const = 0;
    /// Starting point used when the solver config has none.
    virtual Eigen::VectorXd default_start() const { return Eigen::VectorXd::Zero(dimension()); }
};

/// Scalar approximate log-posterior. An empty history leaves the prior
/// alone. The history is referenced, not copied.
class ScalarLogPosterior final : public LogPosterior {
public:
    ScalarLogPosterior(std::span<const ResponseEvent> history, TimePoint now, TemporalConfig temporal,
                       ScalarPriorConfig prior);

    Eigen::Index dimension() const override { return 1; }
    void evaluate(const Eigen::VectorXd& theta, VectorEvaluation& out) const override;
    Eigen::VectorXd default_start() const override;

private:
    std::span<const ResponseEvent> history_;
    TimePoint now_;
    TemporalConfig temporal_;
    ScalarPriorConfig prior_;
};

/// Concept-vector approximate log-posterior under a structured prior.
class VectorLogPosterior final : public LogPosterior {
public:
    VectorLogPosterior(std::span<const ResponseEvent> history, TimePoint now, TemporalConfig temporal,
                       const StructuredPrior& prior);

    Eigen::Index dimension() const override { return static_cast<Eigen::Index>(prior_->dimension()); }
    void evaluate(const Eigen::VectorXd& theta, VectorEvaluation& out) const override;

private:
    std::span<const ResponseEvent> history_;
    TimePoint now_;
    TemporalConfig temporal_;
    const StructuredPrior* prior_;
};

/// Maximizes a concave log-posterior with damped Newton steps, falling back
/// to backtracking gradient ascent where the Newton system is unusable.
///
/// Throws std::invalid_argument if the objective is not finite at the
/// starting point. Exhausting max_iterations returns the best iterate with
/// converged = false.
ProficiencyEstimate map_estimate(const LogPosterior& objective, const SolverConfig& solver = {});

/// Probability of a correct answer to `item` under a scalar estimate.
double predict_next(const ProficiencyEstimate& estimate, const ItemParams& item);

/// Probability of a correct answer to `item` under a concept-vector
/// estimate indexed by `concepts`. Throws for an unknown concept.
double predict_next(const ProficiencyEstimate& estimate, const ItemParams& item, const ConceptGraph& concepts);

} // namespace tskirt
