#include "tskirt/calibration.hpp"

#include "parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace tskirt {

void CalibrationConfig::validate() const {
    if (!(difficulty_prior.variance > 0.0) || !(discrimination_prior.variance > 0.0)) {
        throw std::invalid_argument("calibration prior variances must be > 0");
    }
    student_prior.validate();
    if (max_outer_rounds < 0) {
        throw std::invalid_argument("max_outer_rounds must be >= 0");
    }
    if (!(convergence_delta > 0.0)) {
        throw std::invalid_argument("convergence_delta must be > 0");
    }
    if (!(discrimination_floor > 0.0)) {
        throw std::invalid_argument("discrimination_floor must be > 0");
    }
}

ItemBank::ItemBank(std::vector<ItemParams> items) {
    for (auto& item : items) {
        const std::string id = item.item_id;
        if (!items_.emplace(id, std::move(item)).second) {
            throw std::invalid_argument("duplicate item '" + id + "' in item bank");
        }
    }
}

const ItemParams* ItemBank::find(const std::string& item_id) const {
    const auto it = items_.find(item_id);
    return it == items_.end() ? nullptr : &it->second;
}

const ItemParams& ItemBank::at(const std::string& item_id) const {
    if (const auto* item = find(item_id)) {
        return *item;
    }
    throw std::invalid_argument("unknown item '" + item_id + "'");
}

std::vector<std::string> ItemBank::concepts() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& [id, item] : items_) {
        if (seen.insert(item.concept_id).second) {
            out.push_back(item.concept_id);
        }
    }
    return out;
}

namespace {

struct Observation {
    std::size_t other = 0; // item index for students, student index for items
    bool correct = false;
};

struct Problem {
    std::vector<std::string> item_ids;
    std::vector<std::vector<Observation>> by_student;
    std::vector<std::vector<Observation>> by_item;
};

Problem index_problem(const Dataset& training) {
    Problem p;
    std::set<std::string> ids;
    for (const auto& s : training.students()) {
        for (const auto& r : s.records) {
            ids.insert(r.item_id);
        }
    }
    p.item_ids.assign(ids.begin(), ids.end());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < p.item_ids.size(); ++i) {
        index.emplace(p.item_ids[i], i);
    }
    p.by_student.resize(training.students().size());
    p.by_item.resize(p.item_ids.size());
    for (std::size_t s = 0; s < training.students().size(); ++s) {
        for (const auto& r : training.students()[s].records) {
            const std::size_t q = index.at(r.item_id);
            p.by_student[s].push_back({q, r.correct});
            p.by_item[q].push_back({s, r.correct});
        }
    }
    return p;
}

double gaussian_log_density(double x, const NormalPrior& prior) {
    const double d = x - prior.mean;
    return -0.5 * d * d / prior.variance;
}

double joint_objective(const Problem& p, const std::vector<double>& theta, const std::vector<double>& alpha,
                       const std::vector<double>& beta, const CalibrationConfig& config) {
    double total = 0.0;
    const NormalPrior student{config.student_prior.mean, config.student_prior.variance};
    for (std::size_t s = 0; s < p.by_student.size(); ++s) {
        total += gaussian_log_density(theta[s], student);
        for (const auto& obs : p.by_student[s]) {
            total += detail::response_term(theta[s], alpha[obs.other], beta[obs.other], obs.correct).value;
        }
    }
    for (std::size_t q = 0; q < alpha.size(); ++q) {
        total += gaussian_log_density(alpha[q], config.discrimination_prior) +
                 gaussian_log_density(beta[q], config.difficulty_prior);
    }
    return total;
}

constexpr double kPredictedGainTolerance = 1e-15;

struct ItemObjective {
    double value = 0.0;
    Eigen::Vector2d gradient;  // in (log α, β)
    Eigen::Matrix2d hessian;
};

// Log-posterior of one item's parameters, parameterized by (log α, β).
ItemObjective item_objective(double log_alpha, double beta, const std::vector<Observation>& observations,
                             const std::vector<double>& theta, const CalibrationConfig& config) {
    const double alpha = std::exp(log_alpha);
    const auto& ap = config.discrimination_prior;
    const auto& bp = config.difficulty_prior;
    double value = gaussian_log_density(alpha, ap) + gaussian_log_density(beta, bp);
    double g_alpha = -(alpha - ap.mean) / ap.variance;
    double g_beta = -(beta - bp.mean) / bp.variance;
    double h_aa = -1.0 / ap.variance;
    double h_bb = -1.0 / bp.variance;
    double h_ab = 0.0;
    for (const auto& obs : observations) {
        const double s = obs.correct ? 1.0 : -1.0;
        const double d = theta[obs.other] - beta;
        const double z = s * alpha * d;
        const double m = inverse_mills(z);
        const double c = log_probit_curvature(z);
        value += log_probit(z);
        g_alpha += m * s * d;
        g_beta -= m * s * alpha;
        h_aa += c * d * d;
        h_bb += c * alpha * alpha;
        h_ab += -c * alpha * d - m * s;
    }
    ItemObjective out;
    out.value = value;
    out.gradient = {alpha * g_alpha, g_beta};
    out.hessian << alpha * alpha * h_aa + alpha * g_alpha, alpha * h_ab, alpha * h_ab, h_bb;
    return out;
}

// Projected ascent on (log α, β) with log α >= log(floor). Only accepts
// improving steps, so the item's objective never decreases.
void solve_item(double& alpha, double& beta, const std::vector<Observation>& observations,
                const std::vector<double>& theta, const CalibrationConfig& config) {
    const double lower = std::log(config.discrimination_floor);
    Eigen::Vector2d x{std::log(std::max(alpha, config.discrimination_floor)), beta};
    auto current = item_objective(x(0), x(1), observations, theta, config);
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::Vector2d g = current.gradient;
        const bool at_bound = x(0) <= lower && g(0) < 0.0;
        if (at_bound) {
            g(0) = 0.0;
        }
        if (g.norm() <= 1e-12) {
            break;
        }
        Eigen::Vector2d direction;
        const Eigen::Matrix2d neg_h = -current.hessian;
        if (at_bound) {
            direction = {0.0, neg_h(1, 1) > 0.0 ? g(1) / neg_h(1, 1) : g(1)};
        } else {
            Eigen::LLT<Eigen::Matrix2d> llt(neg_h);
            if (llt.info() == Eigen::Success) {
                direction = llt.solve(g);
            }
            if (llt.info() != Eigen::Success || !direction.allFinite() || g.dot(direction) <= 0.0) {
                direction = g;
            }
        }
        // Sums over hundreds of responses carry rounding noise in the
        // gradient, so stop on the predicted gain instead.
        if (0.5 * g.dot(direction) <= kPredictedGainTolerance * (1.0 + std::abs(current.value))) {
            break;
        }
        double step = 1.0;
        bool accepted = false;
        while (step > 1e-12) {
            Eigen::Vector2d trial = x + step * direction;
            trial(0) = std::max(trial(0), lower);
            const auto candidate = item_objective(trial(0), trial(1), observations, theta, config);
            if (std::isfinite(candidate.value) &&
                candidate.value >= current.value + 1e-4 * g.dot(trial - x) && candidate.value >= current.value) {
                x = trial;
                current = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }
    }
    alpha = x(0) <= lower ? config.discrimination_floor : std::exp(x(0));
    beta = x(1);
}

ScalarEvaluation student_objective(double theta, const std::vector<Observation>& observations,
                                   const std::vector<double>& alpha, const std::vector<double>& beta,
                                   const CalibrationConfig& config) {
    const NormalPrior prior{config.student_prior.mean, config.student_prior.variance};
    ScalarEvaluation out;
    out.value = gaussian_log_density(theta, prior);
    out.gradient = -(theta - prior.mean) / prior.variance;
    out.curvature = -1.0 / prior.variance;
    for (const auto& obs : observations) {
        const auto term = detail::response_term(theta, alpha[obs.other], beta[obs.other], obs.correct);
        out.value += term.value;
        out.gradient += term.gradient;
        out.curvature += term.curvature;
    }
    return out;
}

// Damped 1-D Newton. The objective is strictly concave, and only improving
// steps are taken.
void solve_student(double& theta, const std::vector<Observation>& observations, const std::vector<double>& alpha,
                   const std::vector<double>& beta, const CalibrationConfig& config) {
    auto current = student_objective(theta, observations, alpha, beta, config);
    for (int iter = 0; iter < 100; ++iter) {
        const double direction = -current.gradient / current.curvature;
        if (current.gradient == 0.0 ||
            0.5 * current.gradient * direction <= kPredictedGainTolerance * (1.0 + std::abs(current.value))) {
            break;
        }
        double step = 1.0;
        bool accepted = false;
        while (step > 1e-12) {
            const double trial = theta + step * direction;
            const auto candidate = student_objective(trial, observations, alpha, beta, config);
            if (candidate.value >= current.value) {
                theta = trial;
                current = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }
    }
}

} // namespace

double calibration_objective(const Dataset& training, const ItemBank& bank, const std::vector<double>& theta,
                             const CalibrationConfig& config) {
    const Problem p = index_problem(training);
    if (theta.size() != p.by_student.size()) {
        throw std::invalid_argument("calibration_objective: one proficiency per student required");
    }
    std::vector<double> alpha;
    std::vector<double> beta;
    for (const auto& id : p.item_ids) {
        const auto& item = bank.at(id);
        alpha.push_back(item.discrimination);
        beta.push_back(item.difficulty);
    }
    return joint_objective(p, theta, alpha, beta, config);
}

ItemBank calibrate(const Dataset& training, const CalibrationConfig& config, const ConceptAssignment& concepts) {
    config.validate();
    if (training.response_count() == 0) {
        throw std::invalid_argument("calibration needs a nonempty training set");
    }
    const Problem p = index_problem(training);
    const std::size_t n_students = p.by_student.size();
    const std::size_t n_items = p.item_ids.size();
    for (std::size_t s = 0; s < n_students; ++s) {
        if (p.by_student[s].empty()) {
            throw std::invalid_argument("student '" + training.students()[s].student_id + "' has no responses");
        }
    }

    std::vector<double> theta(n_students, config.student_prior.mean);
    if (!config.initial_theta.empty()) {
        if (config.initial_theta.size() != n_students) {
            throw std::invalid_argument("initial_theta needs one value per training student");
        }
        theta = config.initial_theta;
    }
    std::vector<double> alpha(n_items, std::max(config.discrimination_prior.mean, config.discrimination_floor));
    std::vector<double> beta(n_items, config.difficulty_prior.mean);

    CalibrationMeta meta;
    double objective = joint_objective(p, theta, alpha, beta, config);
    meta.objective_trace.push_back(objective);
    auto check_monotone = [&](const char* half_step) {
        const double next = joint_objective(p, theta, alpha, beta, config);
        if (next < objective - 1e-9 * (1.0 + std::abs(objective))) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "calibration objective decreased in the " << half_step << " half-step: " << objective << " -> "
                << next;
            throw std::logic_error(msg.str());
        }
        objective = next;
        meta.objective_trace.push_back(objective);
    };

    for (int round = 0; round < config.max_outer_rounds; ++round) {
        detail::parallel_for(n_students, config.threads,
                             [&](std::size_t s) { solve_student(theta[s], p.by_student[s], alpha, beta, config); });
        check_monotone("student");

        const std::vector<double> previous_alpha = alpha;
        const std::vector<double> previous_beta = beta;
        detail::parallel_for(n_items, config.threads,
                             [&](std::size_t q) { solve_item(alpha[q], beta[q], p.by_item[q], theta, config); });
        check_monotone("item");

        double change = 0.0;
        for (std::size_t q = 0; q < n_items; ++q) {
            change += std::abs(alpha[q] - previous_alpha[q]) + std::abs(beta[q] - previous_beta[q]);
        }
        meta.rounds = round + 1;
        meta.final_delta = change / (2.0 * static_cast<double>(n_items));
        if (meta.final_delta < config.convergence_delta) {
            break;
        }
    }

    std::vector<ItemParams> items;
    items.reserve(n_items);
    for (std::size_t q = 0; q < n_items; ++q) {
        const auto& id = p.item_ids[q];
        const auto it = concepts.find(id);
        const double a = std::max(alpha[q], config.discrimination_floor);
        items.emplace_back(id, a, beta[q], it == concepts.end() ? kDefaultConcept : it->second);
        meta.response_counts[id] = p.by_item[q].size();
        if (a <= config.discrimination_floor * (1.0 + 1e-9)) {
            meta.floored_items.push_back(id);
        }
    }
    meta.student_theta = std::move(theta);
    ItemBank bank(std::move(items));
    bank.meta = std::move(meta);
    return bank;
}

void write_item_bank(std::ostream& out, const ItemBank& bank) {
    out << "item_id,concept_id,discrimination,difficulty\n";
    char buffer[64];
    for (const auto& [id, item] : bank.items()) {
        out << id << ',' << item.concept_id << ',';
        std::snprintf(buffer, sizeof buffer, "%.17g", item.discrimination);
        out << buffer << ',';
        std::snprintf(buffer, sizeof buffer, "%.17g", item.difficulty);
        out << buffer << '\n';
    }
}

void write_item_bank(const std::filesystem::path& path, const ItemBank& bank) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    write_item_bank(out, bank);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw DataError("line " + std::to_string(line_no) + ": invalid number '" + text + "'");
}

} // namespace

ItemBank read_item_bank(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<ItemParams> items;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!header) {
            if (line != "item_id,concept_id,discrimination,difficulty") {
                throw DataError("item bank: expected header 'item_id,concept_id,discrimination,difficulty'");
            }
            header = true;
            continue;
        }
        const auto fields = split_line(line);
        if (fields.size() != 4) {
            throw DataError("item bank line " + std::to_string(line_no) + ": expected 4 fields");
        }
        try {
            items.emplace_back(fields[0], parse_double(fields[2], line_no), parse_double(fields[3], line_no),
                               fields[1]);
        } catch (const std::invalid_argument& e) {
            throw DataError("item bank line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header) {
        throw DataError("item bank: missing header");
    }
    try {
        return ItemBank(std::move(items));
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("item bank: ") + e.what());
    }
}

ItemBank read_item_bank(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open item bank '" + path.string() + "'");
    }
    return read_item_bank(in);
}

ConceptAssignment read_concept_assignment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open concept assignment '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("concept assignment '" + path.string() + "' is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const auto header = split_line(line);
    const auto item_col = std::find(header.begin(), header.end(), "item_id");
    const auto concept_col = std::find(header.begin(), header.end(), "concept_id");
    if (item_col == header.end() || concept_col == header.end()) {
        throw DataError("concept assignment needs item_id and concept_id columns");
    }
    const auto ic = static_cast<std::size_t>(item_col - header.begin());
    const auto cc = static_cast<std::size_t>(concept_col - header.begin());
    ConceptAssignment out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw DataError("concept assignment line " + std::to_string(line_no) + ": wrong field count");
        }
        out[fields[ic]] = fields[cc];
    }
    return out;
}

} // namespace tskirt
