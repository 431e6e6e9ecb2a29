#include "tskirt/concept_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace tskirt {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

} // namespace

ConceptGraph::ConceptGraph(std::vector<std::string> concepts,
                           const std::vector<std::pair<std::string, std::string>>& edges) {
    for (const auto& id : concepts) {
        if (index_.count(id) != 0) {
            throw GraphError("duplicate concept '" + id + "'");
        }
        add_concept(id);
    }
    std::set<Edge> seen;
    for (const auto& [from, to] : edges) {
        if (from == to) {
            throw GraphError("self edge on concept '" + from + "'");
        }
        add_concept(from);
        add_concept(to);
        const Edge e{index_.at(from), index_.at(to)};
        if (!seen.insert(e).second) {
            throw GraphError("duplicate edge '" + from + "' -> '" + to + "'");
        }
        edges_.push_back(e);
    }
    check_acyclic();
}

ConceptGraph ConceptGraph::chain(std::vector<std::string> concepts) {
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 1; i < concepts.size(); ++i) {
        edges.emplace_back(concepts[i - 1], concepts[i]);
    }
    return ConceptGraph(std::move(concepts), edges);
}

ConceptGraph ConceptGraph::isolated(std::vector<std::string> concepts) {
    return ConceptGraph(std::move(concepts), {});
}

void ConceptGraph::add_concept(const std::string& id) {
    if (id.empty()) {
        throw GraphError("empty concept id");
    }
    if (index_.emplace(id, concepts_.size()).second) {
        concepts_.push_back(id);
    }
}

std::optional<std::size_t> ConceptGraph::index_of(const std::string& concept_id) const {
    const auto it = index_.find(concept_id);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

ConceptGraph ConceptGraph::reversed() const {
    std::vector<std::pair<std::string, std::string>> edges;
    edges.reserve(edges_.size());
    for (const auto& [from, to] : edges_) {
        edges.emplace_back(concepts_[to], concepts_[from]);
    }
    return ConceptGraph(concepts_, edges);
}

void ConceptGraph::check_acyclic() const {
    const std::size_t n = concepts_.size();
    std::vector<std::vector<std::size_t>> out(n);
    for (const auto& [from, to] : edges_) {
        out[from].push_back(to);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    std::vector<int> state(n, 0);
    std::vector<std::size_t> parent(n, n);
    for (std::size_t root = 0; root < n; ++root) {
        if (state[root] != 0) {
            continue;
        }
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        state[root] = 1;
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next == out[node].size()) {
                state[node] = 2;
                stack.pop_back();
                continue;
            }
            const std::size_t child = out[node][next++];
            if (state[child] == 1) {
                std::vector<std::string> cycle{concepts_[child]};
                for (std::size_t v = node; v != child; v = parent[v]) {
                    cycle.push_back(concepts_[v]);
                }
                std::reverse(cycle.begin() + 1, cycle.end());
                std::ostringstream msg;
                msg << "concept graph has a cycle: ";
                for (const auto& id : cycle) {
                    msg << id << " -> ";
                }
                msg << concepts_[child];
                throw GraphError(msg.str());
            }
            if (state[child] == 0) {
                state[child] = 1;
                parent[child] = node;
                stack.emplace_back(child, 0);
            }
        }
    }
}

ConceptGraph read_concept_graph(std::istream& in) {
    std::vector<std::string> concepts;
    std::vector<std::pair<std::string, std::string>> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        if (line.front() == '#') {
            static const std::string kHeader = "#concepts:";
            if (line.rfind(kHeader, 0) == 0) {
                std::stringstream ss(line.substr(kHeader.size()));
                std::string id;
                while (std::getline(ss, id, ',')) {
                    id = trim(id);
                    if (!id.empty()) {
                        concepts.push_back(id);
                    }
                }
            }
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw GraphError("line " + std::to_string(line_no) +
                             ": expected 'prereq_id<TAB>postreq_id'");
        }
        const std::string from = trim(line.substr(0, tab));
        const std::string to = trim(line.substr(tab + 1));
        if (from.empty() || to.empty()) {
            throw GraphError("line " + std::to_string(line_no) + ": empty concept id");
        }
        edges.emplace_back(from, to);
    }
    return ConceptGraph(std::move(concepts), edges);
}

ConceptGraph read_concept_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw GraphError("cannot open concept graph '" + path.string() + "'");
    }
    return read_concept_graph(in);
}

void write_concept_graph(std::ostream& out, const ConceptGraph& graph) {
    out << "#concepts: ";
    for (std::size_t i = 0; i < graph.size(); ++i) {
        out << (i ? "," : "") << graph.concepts()[i];
    }
    out << '\n';
    for (const auto& [from, to] : graph.edges()) {
        out << graph.concepts()[from] << '\t' << graph.concepts()[to] << '\n';
    }
}

StructuredPrior build_prior(ConceptGraph graph, double lambda, double gamma) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("structured prior requires lambda > 0");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("structured prior requires gamma >= 0");
    }
    const auto n = static_cast<Eigen::Index>(graph.size());
    Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [from, to] : graph.edges()) {
        const auto a = static_cast<Eigen::Index>(from);
        const auto b = static_cast<Eigen::Index>(to);
        laplacian(a, a) += 1.0;
        laplacian(b, b) += 1.0;
        laplacian(a, b) -= 1.0;
        laplacian(b, a) -= 1.0;
    }

    StructuredPrior prior;
    prior.precision_ = 2.0 * lambda * Eigen::MatrixXd::Identity(n, n) + 2.0 * gamma * laplacian;
    prior.factor_.compute(prior.precision_);
    if (prior.factor_.info() != Eigen::Success) {
        throw std::invalid_argument("structured prior precision is not positive definite");
    }
    prior.graph_ = std::move(graph);
    prior.lambda_ = lambda;
    prior.gamma_ = gamma;
    return prior;
}

namespace {

void check_dimension(const StructuredPrior& prior, Eigen::Index size) {
    if (static_cast<std::size_t>(size) != prior.dimension()) {
        throw std::invalid_argument("proficiency vector has length " + std::to_string(size) +
                                    ", prior expects " + std::to_string(prior.dimension()));
    }
}

} // namespace

double log_prior_density(const StructuredPrior& prior, const Eigen::Ref<const Eigen::VectorXd>& theta) {
    check_dimension(prior, theta.size());
    double coupling = 0.0;
    for (const auto& [from, to] : prior.graph().edges()) {
        const double d = theta(static_cast<Eigen::Index>(from)) - theta(static_cast<Eigen::Index>(to));
        coupling += d * d;
    }
    return -prior.lambda() * theta.squaredNorm() - prior.gamma() * coupling;
}

double log_prior_quadratic_form(const StructuredPrior& prior, const Eigen::Ref<const Eigen::VectorXd>& theta) {
    check_dimension(prior, theta.size());
    return -0.5 * theta.dot(prior.precision() * theta);
}

} // namespace tskirt
