#include "tskirt/simulate.hpp"

#include "parallel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace tskirt {

void SimulationScenario::validate() const {
    if (graph.size() == 0) {
        throw std::invalid_argument("simulation needs at least one concept");
    }
    if (items.items_per_concept == 0) {
        throw std::invalid_argument("simulation needs at least one item per concept");
    }
    if (!(items.discrimination_min > 0.0) || items.discrimination_max < items.discrimination_min) {
        throw std::invalid_argument("invalid discrimination range");
    }
    if (items.difficulty_max < items.difficulty_min) {
        throw std::invalid_argument("invalid difficulty range");
    }
    true_temporal.validate();
    if (const auto* blocks = std::get_if<ConceptBlocks>(&assignment); blocks && blocks->block_length == 0) {
        throw std::invalid_argument("concept block length must be >= 1");
    }
    if (const auto* exp = std::get_if<ExponentialSpacing>(&arrivals); exp && !(exp->mean_seconds > 0.0)) {
        throw std::invalid_argument("exponential arrival mean must be > 0");
    }
}

namespace {

std::string padded(char prefix, std::size_t i, int width) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%c%0*zu", prefix, width, i);
    return buffer;
}

int width_for(std::size_t n) {
    int w = 1;
    for (std::size_t v = n > 0 ? n - 1 : 0; v >= 10; v /= 10) {
        ++w;
    }
    return w;
}

struct ResolvedItem {
    double alpha;
    double beta;
    std::size_t concept_index;
    const std::string* id;
};

} // namespace

SimulationResult generate(const SimulationScenario& scenario, unsigned threads) {
    scenario.validate();
    const StructuredPrior prior = build_prior(scenario.graph, scenario.prior_lambda, scenario.prior_gamma);
    const std::size_t n_concepts = scenario.graph.size();
    const auto dim = static_cast<Eigen::Index>(n_concepts);

    std::vector<ItemParams> items;
    std::vector<std::vector<std::size_t>> items_by_concept(n_concepts);
    {
        std::seed_seq seq{scenario.seed, std::uint64_t{0x17E4}};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> alpha(scenario.items.discrimination_min,
                                                     scenario.items.discrimination_max);
        std::uniform_real_distribution<double> beta(scenario.items.difficulty_min, scenario.items.difficulty_max);
        const std::size_t total = n_concepts * scenario.items.items_per_concept;
        const int width = width_for(total);
        for (std::size_t c = 0; c < n_concepts; ++c) {
            for (std::size_t k = 0; k < scenario.items.items_per_concept; ++k) {
                const double a = alpha(rng);
                const double b = beta(rng);
                items_by_concept[c].push_back(items.size());
                items.emplace_back(padded('q', items.size(), width), a, b, scenario.graph.concepts()[c]);
            }
        }
    }
    std::vector<ResolvedItem> resolved;
    resolved.reserve(items.size());
    for (std::size_t c = 0; c < n_concepts; ++c) {
        for (const std::size_t q : items_by_concept[c]) {
            resolved.push_back({items[q].discrimination, items[q].difficulty, c, &items[q].item_id});
        }
    }

    SimulationResult out;
    std::vector<StudentHistory> students;
    const int student_width = width_for(scenario.n_students);
    const double drift = scenario.true_temporal.drift_variance;

    // Lower factor of the prior's correlation matrix, used for coupled steps.
    Eigen::MatrixXd step_factor = Eigen::MatrixXd::Identity(dim, dim);
    if (scenario.drift_coupling == DriftCoupling::PriorCorrelation) {
        const Eigen::MatrixXd covariance = prior.factor().solve(Eigen::MatrixXd::Identity(dim, dim));
        const Eigen::VectorXd inv_sd = covariance.diagonal().cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd correlation = inv_sd.asDiagonal() * covariance * inv_sd.asDiagonal();
        step_factor = correlation.llt().matrixL();
    }

    students.resize(scenario.n_students);
    out.paths.resize(scenario.n_students);
    detail::parallel_for(scenario.n_students, threads, [&](std::size_t s) {
        std::seed_seq seq{scenario.seed, std::uint64_t{1}, static_cast<std::uint64_t>(s)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> uniform;
        std::uniform_int_distribution<std::size_t> pick_item(0, resolved.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_concept(0, n_concepts - 1);

        Eigen::VectorXd z(dim);
        for (Eigen::Index c = 0; c < dim; ++c) {
            z(c) = normal(rng);
        }
        // P = L Lᵀ, so θ = L⁻ᵀ z has covariance P⁻¹.
        Eigen::VectorXd theta = prior.factor().matrixU().solve(z);

        StudentHistory history{padded('s', s, student_width), {}};
        TruePath path{history.student_id, {}, Eigen::MatrixXd(static_cast<Eigen::Index>(scenario.responses_per_student), dim)};
        std::int64_t timestamp = 0;
        std::size_t block_concept = 0;

        for (std::size_t i = 0; i < scenario.responses_per_student; ++i) {
            if (i > 0) {
                std::int64_t gap = 1;
                if (const auto* exp = std::get_if<ExponentialSpacing>(&scenario.arrivals)) {
                    std::exponential_distribution<double> wait(1.0 / exp->mean_seconds);
                    gap = 1 + static_cast<std::int64_t>(std::floor(wait(rng)));
                }
                const std::int64_t previous = timestamp;
                timestamp += gap;
                const ResponseEvent before{1.0, 0.0, 0, false, static_cast<std::int64_t>(i - 1),
                                           static_cast<double>(previous)};
                const double elapsed = scenario.true_temporal.elapsed(
                    before, TimePoint{static_cast<std::int64_t>(i), static_cast<double>(timestamp)});
                const double sd = std::sqrt(drift * elapsed);
                for (Eigen::Index c = 0; c < dim; ++c) {
                    z(c) = normal(rng);
                }
                theta += sd * (step_factor * z);
            }

            const ResolvedItem* item = nullptr;
            if (const auto* blocks = std::get_if<ConceptBlocks>(&scenario.assignment)) {
                if (i % blocks->block_length == 0) {
                    block_concept = pick_concept(rng);
                }
                const auto& pool = items_by_concept[block_concept];
                std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
                item = &resolved[block_concept * scenario.items.items_per_concept + pick(rng)];
            } else {
                item = &resolved[pick_item(rng)];
            }

            const double p = response_probability(theta(static_cast<Eigen::Index>(item->concept_index)), item->alpha, item->beta);
            const bool correct = uniform(rng) < p;
            history.records.push_back(InteractionRecord{history.student_id, *item->id, correct, timestamp});
            path.timestamps.push_back(timestamp);
            path.theta.row(static_cast<Eigen::Index>(i)) = theta.transpose();
        }
        students[s] = std::move(history);
        out.paths[s] = std::move(path);
    });

    out.data = Dataset(std::move(students));
    out.bank = ItemBank(std::move(items));
    return out;
}

Eigen::VectorXd empirical_step_variance(std::span<const TruePath> paths, const Clock& clock) {
    Eigen::Index dim = 0;
    for (const auto& p : paths) {
        if (p.theta.rows() > 0) {
            dim = p.theta.cols();
            break;
        }
    }
    Eigen::VectorXd squared = Eigen::VectorXd::Zero(dim);
    double total_elapsed = 0.0;
    const TemporalConfig temporal{0.0, clock};
    for (const auto& p : paths) {
        if (p.theta.rows() < 2) {
            throw std::invalid_argument("empirical_step_variance needs paths of length >= 2");
        }
        for (Eigen::Index i = 1; i < p.theta.rows(); ++i) {
            const ResponseEvent before{1.0, 0.0, 0, false, i - 1,
                                       static_cast<double>(p.timestamps[static_cast<std::size_t>(i - 1)])};
            total_elapsed += temporal.elapsed(
                before, TimePoint{i, static_cast<double>(p.timestamps[static_cast<std::size_t>(i)])});
            squared += (p.theta.row(i) - p.theta.row(i - 1)).transpose().cwiseAbs2();
        }
    }
    if (total_elapsed <= 0.0) {
        return squared;
    }
    return squared / total_elapsed;
}

void write_true_paths(const std::filesystem::path& path, std::span<const TruePath> paths, const ConceptGraph& graph) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << "# oracle-only: true proficiency paths, not for model fitting\n";
    out << "student_id,step,timestamp";
    for (const auto& c : graph.concepts()) {
        out << ",theta_" << c;
    }
    out << '\n';
    char buffer[64];
    for (const auto& p : paths) {
        for (Eigen::Index i = 0; i < p.theta.rows(); ++i) {
            out << p.student_id << ',' << i << ',' << p.timestamps[static_cast<std::size_t>(i)];
            for (Eigen::Index c = 0; c < p.theta.cols(); ++c) {
                std::snprintf(buffer, sizeof buffer, "%.17g", p.theta(i, c));
                out << ',' << buffer;
            }
            out << '\n';
        }
    }
}

} // namespace tskirt
