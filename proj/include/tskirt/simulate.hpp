#pragma once

#include "tskirt/calibration.hpp"
#include "tskirt/concept_graph.hpp"
#include "tskirt/dataio.hpp"
#include "tskirt/irt.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tskirt {

struct ItemBankSpec {
    std::size_t items_per_concept = 10;
    double discrimination_min = 0.5;
    double discrimination_max = 2.0;
    double difficulty_min = -2.0;
    double difficulty_max = 2.0;
};

/// Every response picks an item uniformly from the whole bank.
struct UniformRandom {};

/// Students work through runs of `block_length` responses on one randomly
/// chosen concept at a time.
struct ConceptBlocks {
    std::size_t block_length = 10;
};

using AssignmentPolicy = std::variant<UniformRandom, ConceptBlocks>;

/// Events one second apart.
struct UnitSpacing {};

/// Integer-second gaps drawn as 1 + floor(Exponential(mean_seconds)).
struct ExponentialSpacing {
    double mean_seconds = 60.0;
};

using ArrivalProcess = std::variant<UnitSpacing, ExponentialSpacing>;

/// How drift steps of different concepts relate. `Independent` matches the
/// factorized transition the inference code assumes. `PriorCorrelation` keeps
/// each coordinate's step variance at ν²·Δ but correlates the steps with the
/// correlation matrix of the initial prior, which probes the approximation.
enum class DriftCoupling { Independent, PriorCorrelation };

struct SimulationScenario {
    std::uint64_t seed = 0;
    std::size_t n_students = 100;
    std::size_t responses_per_student = 50;
    ConceptGraph graph = ConceptGraph::isolated({"c0"});
    ItemBankSpec items;
    /// Drift law of the true proficiency paths. The clock decides how event
    /// timestamps translate into elapsed units.
    TemporalConfig true_temporal;
    /// Prior of the initial proficiency vector: λ and γ over `graph`.
    double prior_lambda = 1.0;
    double prior_gamma = 0.0;
    AssignmentPolicy assignment = UniformRandom{};
    ArrivalProcess arrivals = UnitSpacing{};
    DriftCoupling drift_coupling = DriftCoupling::Independent;

    void validate() const;
};

/// True proficiency trajectory of one student: row i is the proficiency
/// vector at the student's i-th response.
struct TruePath {
    std::string student_id;
    std::vector<std::int64_t> timestamps;
    Eigen::MatrixXd theta;
};

struct SimulationResult {
    Dataset data;
    ItemBank bank;
    std::vector<TruePath> paths;
};

/// Draws initial proficiencies from the structured prior, evolves each
/// concept coordinate by Gaussian steps of variance ν²·Δ, and
/// samples responses from the 2PO model. Every student uses its own random
/// stream derived from (seed, student index), so the result does not depend
/// on `threads`.
SimulationResult generate(const SimulationScenario& scenario, unsigned threads = 1);

/// Σ(Δθ)² / Σ Δt per concept coordinate, where Δt is measured by `clock`.
Eigen::VectorXd empirical_step_variance(std::span<const TruePath> paths, const Clock& clock);

/// Oracle-only output: one row per (student, response) with the true value
/// of every concept coordinate.
void write_true_paths(const std::filesystem::path& path, std::span<const TruePath> paths,
                      const ConceptGraph& graph);

} // namespace tskirt
