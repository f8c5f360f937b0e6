#include "prunesearch/markov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace prunesearch::analytics {

MarkovModel build_markov(std::span<const SearchRecord> history, int cluster_id,
                         std::int64_t session_gap_ms) {
    // sessions in first-appearance order; (session_id, gap) splits
    std::vector<std::vector<std::string>> sessions;
    std::map<std::string, std::size_t> open_session; // session_id -> index into sessions
    std::map<std::string, std::int64_t> last_seen;

    for (const auto& rec : history) {
        bool hits = std::find(rec.hit_clusters.begin(), rec.hit_clusters.end(), cluster_id) !=
                    rec.hit_clusters.end();
        if (!hits)
            continue;
        auto it = open_session.find(rec.session_id);
        bool fresh = it == open_session.end() ||
                     rec.timestamp_ms - last_seen[rec.session_id] > session_gap_ms;
        if (fresh) {
            sessions.emplace_back();
            open_session[rec.session_id] = sessions.size() - 1;
        }
        last_seen[rec.session_id] = rec.timestamp_ms;
        auto& seq = sessions[open_session[rec.session_id]];
        seq.insert(seq.end(), rec.terms.begin(), rec.terms.end());
    }
    if (sessions.empty())
        throw std::invalid_argument("no history for cluster " + std::to_string(cluster_id));

    MarkovModel model;
    model.cluster_id = cluster_id;
    std::map<std::string, std::size_t> state_of;
    std::size_t total_occurrences = 0;
    std::vector<std::uint64_t> freq;
    for (const auto& seq : sessions) {
        for (const auto& term : seq) {
            auto [it, inserted] = state_of.emplace(term, model.states.size());
            if (inserted) {
                model.states.push_back(term);
                freq.push_back(0);
            }
            freq[it->second]++;
            total_occurrences++;
        }
    }

    const std::size_t m = model.states.size();
    std::vector<std::uint64_t> counts(m * m, 0);
    std::vector<std::uint64_t> outgoing(m, 0);
    for (const auto& seq : sessions) {
        for (std::size_t i = 0; i + 1 < seq.size(); i++) {
            std::size_t from = state_of[seq[i]];
            std::size_t to = state_of[seq[i + 1]];
            counts[from * m + to]++;
            outgoing[from]++;
        }
    }

    model.transition.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; i++) {
        if (outgoing[i] == 0) {
            for (std::size_t j = 0; j < m; j++)
                model.transition[i * m + j] = 1.0 / static_cast<double>(m);
        } else {
            for (std::size_t j = 0; j < m; j++)
                model.transition[i * m + j] =
                    static_cast<double>(counts[i * m + j]) / static_cast<double>(outgoing[i]);
        }
    }

    model.state_prob.resize(m);
    for (std::size_t i = 0; i < m; i++)
        model.state_prob[i] = static_cast<double>(freq[i]) / static_cast<double>(total_occurrences);
    return model;
}

namespace {
std::vector<double> step_vec(std::span<const double> probs, std::span<const double> transition,
                             std::size_t m) {
    std::vector<double> next(m, 0.0);
    for (std::size_t k = 0; k < m; k++) {
        double w = probs[k];
        if (w == 0.0)
            continue;
        const double* row = transition.data() + k * m;
        for (std::size_t j = 0; j < m; j++)
            next[j] += w * row[j];
    }
    return next;
}
} // namespace

std::vector<double> step(const MarkovModel& model) {
    return step_vec(model.state_prob, model.transition, model.size());
}

Convergence converge(const MarkovModel& model, double eps, std::size_t max_iter) {
    if (eps <= 0.0)
        throw std::invalid_argument("eps must be positive");
    Convergence result;
    result.probs = model.state_prob;
    const std::size_t m = model.size();
    for (std::size_t iter = 1; iter <= max_iter; iter++) {
        std::vector<double> next = step_vec(result.probs, model.transition, m);
        double l1 = 0.0;
        for (std::size_t i = 0; i < next.size(); i++)
            l1 += std::abs(next[i] - result.probs[i]);
        result.probs = std::move(next);
        result.iterations = iter;
        if (l1 < eps) {
            result.converged = true;
            break;
        }
    }
    return result;
}

std::vector<std::pair<std::string, double>> qualified_terms(const MarkovModel& model,
                                                            double theta) {
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < model.size(); i++)
        if (model.state_prob[i] > theta)
            out.emplace_back(model.states[i], model.state_prob[i]);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

} // namespace prunesearch::analytics
