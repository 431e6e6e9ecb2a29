#pragma once

#include "tskirt/evaluation.hpp"

#include <vector>

namespace tskirt {

/// Hyperparameter axes. An empty axis keeps the base model's value; at
/// least one axis must be nonempty.
struct SweepGrid {
    std::vector<double> drift_variances;
    std::vector<double> lambdas;
    std::vector<double> gammas;
};

struct SweepResult {
    ModelVariant model;
    std::size_t grid_index = 0;
    std::size_t n_predictions = 0;
    double accuracy = 0.0;
    double accuracy_sem = 0.0;
    std::optional<double> auc;
    std::optional<double> mean_log_likelihood;
};

/// Evaluates `base` at every grid point on the tuning data. Grid points are
/// enumerated with every axis ascending (ν² outermost, then λ, then γ) and
/// the results are stably sorted by descending accuracy, so ties resolve
/// toward the smaller ν².
std::vector<SweepResult> run_sweep(const Dataset& tuning, const ItemBank& bank, const ModelVariant& base,
                                   const SweepGrid& grid, const ConceptGraph* graph,
                                   const EvaluationOptions& options = {});

} // namespace tskirt
