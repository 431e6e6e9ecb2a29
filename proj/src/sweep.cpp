#include "tskirt/sweep.hpp"

#include <algorithm>
#include <stdexcept>

namespace tskirt {

namespace {

std::vector<double> axis(std::vector<double> values, double fallback) {
    if (values.empty()) {
        return {fallback};
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

} // namespace

std::vector<SweepResult> run_sweep(const Dataset& tuning, const ItemBank& bank, const ModelVariant& base,
                                   const SweepGrid& grid, const ConceptGraph* graph,
                                   const EvaluationOptions& options) {
    if (grid.drift_variances.empty() && grid.lambdas.empty() && grid.gammas.empty()) {
        throw std::invalid_argument("sweep grid is empty");
    }
    if (!base.latent()) {
        throw std::invalid_argument("spc has no hyperparameters to sweep");
    }
    const auto nu2s = axis(grid.drift_variances, base.drift_variance);
    const auto lambdas = axis(grid.lambdas, base.lambda);
    const auto gammas = axis(grid.gammas, base.gamma);

    std::vector<SweepResult> results;
    for (const double nu2 : nu2s) {
        for (const double lambda : lambdas) {
            for (const double gamma : gammas) {
                ModelVariant model = base;
                model.drift_variance = nu2;
                model.lambda = lambda;
                model.gamma = gamma;
                const auto report = run_online_evaluation(tuning, bank, model, graph, options);
                SweepResult r;
                r.model = model;
                r.grid_index = results.size();
                r.n_predictions = report.n_predictions;
                r.accuracy = report.accuracy;
                r.accuracy_sem = report.accuracy_sem;
                r.auc = report.auc;
                r.mean_log_likelihood = report.mean_log_likelihood;
                results.push_back(r);
            }
        }
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const SweepResult& a, const SweepResult& b) { return a.accuracy > b.accuracy; });
    return results;
}

} // namespace tskirt
