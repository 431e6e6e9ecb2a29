#pragma once

#include "tskirt/dataio.hpp"
#include "tskirt/irt.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tskirt {

struct NormalPrior {
    double mean = 0.0;
    double variance = 1.0;
};

struct CalibrationConfig {
    NormalPrior difficulty_prior{0.0, 1.0};
    NormalPrior discrimination_prior{1.0, 0.5};
    /// Student proficiency prior during calibration (λ = 1).
    ScalarPriorConfig student_prior{0.0, 0.5};
    int max_outer_rounds = 50;
    /// Stop once the mean absolute change of item parameters in a round
    /// falls below this.
    double convergence_delta = 1e-5;
    double discrimination_floor = 0.01;
    /// Starting proficiencies per student (zero when empty).
    std::vector<double> initial_theta;
    unsigned threads = 1;

    void validate() const;
};

struct CalibrationMeta {
    int rounds = 0;
    double final_delta = 0.0;
    std::map<std::string, std::size_t> response_counts;
    /// Items whose discrimination ended on the floor.
    std::vector<std::string> floored_items;
    /// Joint penalized log-posterior after every half-step, starting with
    /// the initial point.
    std::vector<double> objective_trace;
    std::vector<double> student_theta;
};

/// Fixed item parameters consumed by inference, keyed by item id.
class ItemBank {
public:
    ItemBank() = default;
    explicit ItemBank(std::vector<ItemParams> items);

    const std::map<std::string, ItemParams>& items() const { return items_; }
    const ItemParams* find(const std::string& item_id) const;
    const ItemParams& at(const std::string& item_id) const;
    std::size_t size() const { return items_.size(); }
    /// Concept ids in order of first appearance by item id.
    std::vector<std::string> concepts() const;

    CalibrationMeta meta;

private:
    std::map<std::string, ItemParams> items_;
};

/// Item id -> concept id. Items absent from the map fall into
/// kDefaultConcept.
using ConceptAssignment = std::map<std::string, std::string>;
inline const std::string kDefaultConcept = "default";

/// Joint MAP calibration of a static 2PO model under normal item priors,
/// alternating per-student proficiency solves with per-item (α, β) solves.
/// Throws std::invalid_argument on an empty training set.
ItemBank calibrate(const Dataset& training, const CalibrationConfig& config = {},
                   const ConceptAssignment& concepts = {});

/// Penalized joint log-posterior of the calibration problem.
double calibration_objective(const Dataset& training, const ItemBank& bank, const std::vector<double>& theta,
                             const CalibrationConfig& config);

/// CSV `item_id,concept_id,discrimination,difficulty` with 17 significant
/// digits.
void write_item_bank(std::ostream& out, const ItemBank& bank);
void write_item_bank(const std::filesystem::path& path, const ItemBank& bank);
ItemBank read_item_bank(std::istream& in);
ItemBank read_item_bank(const std::filesystem::path& path);

/// Reads `item_id` and `concept_id` columns from any CSV with a header
/// containing both (an item bank file qualifies).
ConceptAssignment read_concept_assignment(const std::filesystem::path& path);

} // namespace tskirt
