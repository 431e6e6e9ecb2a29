#pragma once

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tskirt {

/// Raised for malformed graphs: cycles, self edges, duplicate edges, or
/// parse failures in the graph file.
class GraphError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Directed acyclic graph of concepts. An edge (n, m) states that concept n
/// is a prerequisite of concept m.
class ConceptGraph {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    ConceptGraph() = default;

    /// Concepts referenced only by edges are appended after `concepts`, in
    /// order of first appearance.
    ConceptGraph(std::vector<std::string> concepts,
                 const std::vector<std::pair<std::string, std::string>>& edges);

    /// A -> B -> C ... chain over the given ids.
    static ConceptGraph chain(std::vector<std::string> concepts);

    /// Concept set with no prerequisite edges.
    static ConceptGraph isolated(std::vector<std::string> concepts);

    std::size_t size() const { return concepts_.size(); }
    const std::vector<std::string>& concepts() const { return concepts_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::optional<std::size_t> index_of(const std::string& concept_id) const;

    /// The same concepts with every edge reversed.
    ConceptGraph reversed() const;

private:
    std::vector<std::string> concepts_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<Edge> edges_;

    void add_concept(const std::string& id);
    void check_acyclic() const;
};

/// Reads the tab-separated edge list format:
///
///     #concepts: a,b,c
///     a<TAB>b
///
/// Other lines starting with '#' and blank lines are ignored.
ConceptGraph read_concept_graph(std::istream& in);
ConceptGraph read_concept_graph(const std::filesystem::path& path);
void write_concept_graph(std::ostream& out, const ConceptGraph& graph);

/// Gaussian prior over a concept-indexed proficiency vector with log-density
/// -λ Σ θ_n² - γ Σ_{n≺m} (θ_n - θ_m)², i.e. precision 2λI + 2γL where L is
/// the Laplacian of the undirected skeleton.
class StructuredPrior {
public:
    const ConceptGraph& graph() const { return graph_; }
    double lambda() const { return lambda_; }
    double gamma() const { return gamma_; }
    std::size_t dimension() const { return graph_.size(); }
    const Eigen::MatrixXd& precision() const { return precision_; }

    /// Lower Cholesky factor of the precision matrix.
    const Eigen::LLT<Eigen::MatrixXd>& factor() const { return factor_; }

    friend StructuredPrior build_prior(ConceptGraph graph, double lambda, double gamma);

private:
    StructuredPrior() = default;

    ConceptGraph graph_;
    double lambda_ = 0.0;
    double gamma_ = 0.0;
    Eigen::MatrixXd precision_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// Requires λ > 0 and γ ≥ 0.
StructuredPrior build_prior(ConceptGraph graph, double lambda, double gamma);

/// Unnormalized log-density, evaluated from the edge sums directly.
double log_prior_density(const StructuredPrior& prior, const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Same quantity through the precision matrix: -½ θᵀ P θ.
double log_prior_quadratic_form(const StructuredPrior& prior, const Eigen::Ref<const Eigen::VectorXd>& theta);

} // namespace tskirt
