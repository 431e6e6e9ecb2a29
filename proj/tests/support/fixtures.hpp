#pragma once

#include "oracles.hpp"

#include "tskirt/concept_graph.hpp"
#include "tskirt/dataio.hpp"
#include "tskirt/irt.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

// Random time-ordered history whose events lie at steps 0..n-1 and whose
// timestamps increase by 1..30 seconds.
inline std::vector<tskirt::ResponseEvent> random_history(std::mt19937_64& rng, std::size_t n,
                                                         std::size_t n_concepts) {
    std::uniform_real_distribution<double> alpha(0.3, 2.5);
    std::uniform_real_distribution<double> beta(-2.5, 2.5);
    std::uniform_int_distribution<std::size_t> concept_pick(0, n_concepts - 1);
    std::uniform_int_distribution<int> gap(1, 30);
    std::bernoulli_distribution coin(0.55);
    std::vector<tskirt::ResponseEvent> out;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({alpha(rng), beta(rng), concept_pick(rng), coin(rng), static_cast<std::int64_t>(i), t});
        t += gap(rng);
    }
    return out;
}

// Random DAG: concept i may point to any j > i.
inline tskirt::ConceptGraph random_dag(std::mt19937_64& rng, std::size_t n, double edge_probability = 0.3) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("k" + std::to_string(i));
    }
    std::bernoulli_distribution keep(edge_probability);
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (keep(rng)) {
                edges.emplace_back(ids[i], ids[j]);
            }
        }
    }
    return tskirt::ConceptGraph(ids, edges);
}

inline tskirt::TimePoint after(const std::vector<tskirt::ResponseEvent>& history, double extra_seconds = 5.0) {
    if (history.empty()) {
        return {0, 0.0};
    }
    return {history.back().step_index + 1, history.back().timestamp + extra_seconds};
}

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("tskirt-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

} // namespace fixtures
