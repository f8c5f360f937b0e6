#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prunesearch/history.hpp"

namespace prunesearch::analytics {

// Per-cluster chain over searched terms. `transition` is row-stochastic,
// row-major m*m; `state_prob` starts as the search-frequency ratio and is
// iterated toward the stationary distribution.
struct MarkovModel {
    int cluster_id = 0;
    std::vector<std::string> states; // first-appearance order
    std::vector<double> transition;
    std::vector<double> state_prob;

    std::size_t size() const { return states.size(); }
    double p(std::size_t from, std::size_t to) const { return transition[from * size() + to]; }
};

inline constexpr std::int64_t kSessionGapMs = 30 * 60 * 1000;

// Consecutive terms within one session form transitions; the terminal term
// of a session has no outgoing edge (rows without outgoing transitions are
// uniform). Sessions split on session_id and on >30 min inactivity gaps.
// Throws std::invalid_argument("no history for cluster ...") when nothing
// hits the cluster.
MarkovModel build_markov(std::span<const SearchRecord> history, int cluster_id,
                         std::int64_t session_gap_ms = kSessionGapMs);

// One multiplication of state_prob by the transition matrix.
std::vector<double> step(const MarkovModel& model);

struct Convergence {
    std::vector<double> probs;
    std::size_t iterations = 0;
    bool converged = false;
};

// Iterates `step` until the L1 distance between successive vectors drops
// below eps, or max_iter is hit (non-fatal; `converged` reports which).
Convergence converge(const MarkovModel& model, double eps = 1e-8, std::size_t max_iter = 10000);

// Terms with state probability strictly above theta, weight descending
// (ties by term). Reads model.state_prob, so assign the converged vector
// first.
std::vector<std::pair<std::string, double>> qualified_terms(const MarkovModel& model,
                                                            double theta);

} // namespace prunesearch::analytics
