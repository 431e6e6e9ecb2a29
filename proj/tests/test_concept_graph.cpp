#include "fixtures.hpp"

#include <doctest.h>

#include "tskirt/concept_graph.hpp"

#include <Eigen/Eigenvalues>

#include <random>
#include <sstream>

using namespace tskirt;

TEST_CASE("graph construction") {
    const ConceptGraph g({"a", "b"}, {{"a", "b"}, {"b", "c"}});
    CHECK(g.size() == 3);
    CHECK(g.concepts() == std::vector<std::string>{"a", "b", "c"});
    CHECK(g.edges().size() == 2);
    CHECK(g.index_of("c") == 2u);
    CHECK_FALSE(g.index_of("zzz").has_value());

    const auto chain = ConceptGraph::chain({"x", "y", "z"});
    CHECK(chain.edges() == std::vector<ConceptGraph::Edge>{{0, 1}, {1, 2}});
    CHECK(ConceptGraph::isolated({"x", "y"}).edges().empty());
}

TEST_CASE("malformed graphs are rejected") {
    CHECK_THROWS_AS(ConceptGraph({"a", "a"}, {}), GraphError);
    CHECK_THROWS_AS(ConceptGraph({"a"}, {{"a", "a"}}), GraphError);
    CHECK_THROWS_AS(ConceptGraph({"a", "b"}, {{"a", "b"}, {"a", "b"}}), GraphError);
    CHECK_THROWS_AS(ConceptGraph({""}, {}), GraphError);
    try {
        ConceptGraph({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}, {"c", "a"}});
        FAIL("cycle accepted");
    } catch (const GraphError& e) {
        const std::string what = e.what();
        CHECK(what.find("cycle") != std::string::npos);
        CHECK(what.find("a -> b") != std::string::npos);
    }
    // Reverse edges of an existing pair form a two-cycle.
    CHECK_THROWS_AS(ConceptGraph({"a", "b"}, {{"a", "b"}, {"b", "a"}}), GraphError);
}

TEST_CASE("graph file round trip") {
    std::istringstream in("# prerequisites for unit 3\n#concepts: lone,a\n\na\tb\nb\tc\n");
    const auto g = read_concept_graph(in);
    CHECK(g.concepts() == std::vector<std::string>{"lone", "a", "b", "c"});
    CHECK(g.edges().size() == 2);

    std::ostringstream out;
    write_concept_graph(out, g);
    std::istringstream again(out.str());
    const auto h = read_concept_graph(again);
    CHECK(h.concepts() == g.concepts());
    CHECK(h.edges() == g.edges());

    std::istringstream bad("a b\n");
    CHECK_THROWS_AS(read_concept_graph(bad), GraphError);
    CHECK_THROWS_AS(read_concept_graph(std::filesystem::path("/nonexistent/graph.tsv")), GraphError);
}

TEST_CASE("structured prior precision") {
    const auto two = build_prior(ConceptGraph({"a", "b"}, {{"a", "b"}}), 1.0, 0.5);
    Eigen::Matrix2d want;
    want << 3.0, -1.0, -1.0, 3.0;
    CHECK((two.precision() - want).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 20; ++i) {
        const Eigen::Vector2d t(normal(rng), normal(rng));
        const double by_hand = -t(0) * t(0) - t(1) * t(1) - 0.5 * (t(0) - t(1)) * (t(0) - t(1));
        CHECK(log_prior_quadratic_form(two, t) == doctest::Approx(by_hand).epsilon(1e-12));
    }

    const auto factorial = build_prior(ConceptGraph::chain({"a", "b", "c"}), 0.7, 0.0);
    CHECK((factorial.precision() - 1.4 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

    const auto chain = build_prior(ConceptGraph::chain({"a", "b", "c"}), 1.0, 1.0);
    CHECK(log_prior_density(chain, Eigen::Vector3d::Ones()) == -3.0);
    CHECK(log_prior_quadratic_form(chain, Eigen::Vector3d::Ones()) == doctest::Approx(-3.0).epsilon(1e-15));

    const auto single = build_prior(ConceptGraph::isolated({"a"}), 1.0, 0.0);
    CHECK(log_prior_density(single, Eigen::VectorXd::Constant(1, 2.0)) == -4.0);
    CHECK(log_prior_density(chain, Eigen::Vector3d::Zero()) == 0.0);

    CHECK_THROWS_AS(build_prior(ConceptGraph::chain({"a", "b"}), 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_prior(ConceptGraph::chain({"a", "b"}), -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_prior(ConceptGraph::chain({"a", "b"}), 1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(log_prior_density(chain, Eigen::Vector2d::Zero()), std::invalid_argument);
}

TEST_CASE("prior properties on random graphs") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    std::uniform_real_distribution<double> lambda(0.01, 3.0);
    std::uniform_real_distribution<double> gamma(0.0, 5.0);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int trial = 0; trial < 60; ++trial) {
        const auto graph = fixtures::random_dag(rng, size(rng), 0.15);
        const double l = lambda(rng);
        const auto prior = build_prior(graph, l, gamma(rng));
        const auto n = static_cast<Eigen::Index>(graph.size());

        const Eigen::MatrixXd laplacian_part = prior.precision() - 2.0 * l * Eigen::MatrixXd::Identity(n, n);
        CHECK(laplacian_part.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((prior.precision() - prior.precision().transpose()).cwiseAbs().maxCoeff() == 0.0);

        const auto reversed = build_prior(graph.reversed(), l, prior.gamma());
        CHECK((reversed.precision() - prior.precision()).cwiseAbs().maxCoeff() == 0.0);

        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior.precision());
        CHECK(eig.eigenvalues().minCoeff() >= 2.0 * l - 1e-9);

        for (const auto& [a, b] : graph.edges()) {
            CHECK(prior.precision()(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) != 0.0);
        }

        Eigen::VectorXd theta(n);
        for (Eigen::Index c = 0; c < n; ++c) {
            theta(c) = normal(rng);
        }
        const double direct = log_prior_density(prior, theta);
        const double quadratic = log_prior_quadratic_form(prior, theta);
        CHECK(std::abs(direct - quadratic) <= 1e-10 * std::abs(direct));
        CHECK(direct < 0.0);
    }
}
