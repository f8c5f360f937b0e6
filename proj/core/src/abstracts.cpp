#include "prunesearch/abstracts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prunesearch/log.hpp"
#include "prunesearch/markov.hpp"

using json = nlohmann::json;

namespace prunesearch::analytics {

double cluster_popularity(std::uint64_t q, double q_bar) {
    if (q_bar <= 0.0)
        throw std::invalid_argument("no query traffic");
    return (static_cast<double>(q) - q_bar) / q_bar;
}

namespace {
// each term of the shorter side matched to its best counterpart
double query_pair_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b,
                             const semantics::SimilarityProvider& p) {
    const auto& shorter = a.size() <= b.size() ? a : b;
    const auto& longer = a.size() <= b.size() ? b : a;
    if (shorter.empty())
        return 0.0;
    double sum = 0.0;
    for (const auto& t : shorter) {
        double best = 0.0;
        for (const auto& u : longer) {
            double s = t == u ? 1.0 : p.similarity(t, u);
            if (s > best) best = s;
        }
        sum += best;
    }
    return sum / static_cast<double>(shorter.size());
}
} // namespace

double avg_query_similarity(std::span<const std::vector<std::string>> queries,
                            const semantics::SimilarityProvider& p) {
    if (queries.empty())
        throw std::invalid_argument("avg_query_similarity: no queries");
    if (queries.size() == 1)
        return 1.0;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < queries.size(); i++) {
        for (std::size_t j = i + 1; j < queries.size(); j++) {
            sum += query_pair_similarity(queries[i], queries[j], p);
            pairs++;
        }
    }
    return sum / static_cast<double>(pairs);
}

double user_interest(double delta_bar, double sigma) {
    return 1.0 / std::max(kRadiusDenominatorFloor, delta_bar + sigma);
}

double semantic_radius_raw(double delta_bar, double sigma, std::uint64_t gamma) {
    if (gamma < 1)
        throw std::invalid_argument("gamma must be >= 1");
    double denom = delta_bar + sigma + std::log10(static_cast<double>(gamma));
    return 1.0 / std::max(kRadiusDenominatorFloor, denom);
}

double semantic_radius(double delta_bar, double sigma, std::uint64_t gamma) {
    return std::clamp(semantic_radius_raw(delta_bar, sigma, gamma), kRadiusMin, kRadiusMax);
}

std::string_view to_string(RadiusPolicy p) {
    switch (p) {
    case RadiusPolicy::static_s3bd: return "static_s3bd";
    case RadiusPolicy::beta_only: return "beta_only";
    case RadiusPolicy::gamma_delta: return "gamma_delta";
    case RadiusPolicy::edge_based: return "edge_based";
    }
    return "unknown";
}

std::optional<RadiusPolicy> radius_policy_from_string(std::string_view s) {
    if (s == "static_s3bd") return RadiusPolicy::static_s3bd;
    if (s == "beta_only") return RadiusPolicy::beta_only;
    if (s == "gamma_delta") return RadiusPolicy::gamma_delta;
    if (s == "edge_based") return RadiusPolicy::edge_based;
    return std::nullopt;
}

double policy_radius(RadiusPolicy policy, double delta_bar, double sigma, std::uint64_t gamma) {
    double denom = 0.0;
    switch (policy) {
    case RadiusPolicy::static_s3bd:
        return 0.0; // unused; static abstracts are never maintained
    case RadiusPolicy::beta_only:
        denom = delta_bar + sigma;
        break;
    case RadiusPolicy::gamma_delta:
        denom = delta_bar + std::log10(static_cast<double>(gamma));
        break;
    case RadiusPolicy::edge_based:
        return semantic_radius(delta_bar, sigma, gamma);
    }
    return std::clamp(1.0 / std::max(kRadiusDenominatorFloor, denom), kRadiusMin, kRadiusMax);
}

const AbstractEntry* Abstract::find(std::string_view term) const {
    for (const auto& e : entries)
        if (e.term == term)
            return &e;
    return nullptr;
}

AbstractEntry* Abstract::find(std::string_view term) {
    for (auto& e : entries)
        if (e.term == term)
            return &e;
    return nullptr;
}

TermClusterHits count_term_cluster_hits(std::span<const SearchRecord> history) {
    TermClusterHits hits;
    for (const auto& rec : history)
        for (const auto& term : rec.terms)
            for (int cluster : rec.hit_clusters)
                hits[{term, cluster}]++;
    return hits;
}

int select_abstract(std::string_view term, double weight, std::span<const Abstract> abstracts,
                    const TermClusterHits& hits, const semantics::SimilarityProvider& p) {
    (void)weight; // selection depends on similarity and usage, not weight
    if (abstracts.empty())
        throw std::invalid_argument("select_abstract: no abstracts");

    int best_id = abstracts.front().cluster_id;
    double best_score = -1.0;
    std::uint64_t best_hits = 0;
    for (const auto& a : abstracts) {
        double score = 0.0;
        if (!a.entries.empty()) {
            for (const auto& e : a.entries)
                score += term == e.term ? 1.0 : p.similarity(term, e.term);
            score /= static_cast<double>(a.entries.size());
        }
        auto it = hits.find({std::string(term), a.cluster_id});
        std::uint64_t h = it == hits.end() ? 0 : it->second;
        bool better = score > best_score ||
                      (score == best_score && h > best_hits) ||
                      (score == best_score && h == best_hits && a.cluster_id < best_id);
        if (better) {
            best_score = score;
            best_id = a.cluster_id;
            best_hits = h;
        }
    }
    return best_id;
}

IntegrationDecision integrate_term(std::string_view term, double weight, Abstract& abstract,
                                   const ClusterStats& stats,
                                   const semantics::SimilarityProvider& p) {
    if (AbstractEntry* existing = abstract.find(term)) {
        existing->weight = weight;
        return {IntegrationDecision::Kind::discarded, {}};
    }

    AbstractEntry* most_similar = nullptr;
    double best_sim = -1.0;
    bool within_radius = false;
    for (auto& e : abstract.entries) {
        double s = p.similarity(term, e.term);
        if (s >= stats.sr)
            within_radius = true;
        if (s > best_sim) {
            best_sim = s;
            most_similar = &e;
        }
    }

    if (!within_radius) {
        abstract.entries.push_back({std::string(term), weight, 0});
        return {IntegrationDecision::Kind::added, {}};
    }
    if (weight > most_similar->weight) {
        std::string old = most_similar->term;
        most_similar->term = std::string(term);
        most_similar->weight = weight;
        most_similar->hits = 0;
        return {IntegrationDecision::Kind::replaced, old};
    }
    return {IntegrationDecision::Kind::discarded, {}};
}

Abstract* AbstractSet::find(int cluster_id) {
    for (auto& a : abstracts)
        if (a.cluster_id == cluster_id)
            return &a;
    return nullptr;
}

std::size_t AbstractSet::total_terms() const {
    std::size_t n = 0;
    for (const auto& a : abstracts)
        n += a.entries.size();
    return n;
}

namespace {

json stats_to_json(const ClusterStats& s) {
    return json{{"cluster_id", s.cluster_id}, {"q", s.q},
                {"q_bar", s.q_bar},           {"sigma", s.sigma},
                {"delta_bar", s.delta_bar},   {"beta", s.beta},
                {"gamma", s.gamma},           {"sr", s.sr},
                {"sr_raw", s.sr_raw}};
}

ClusterStats stats_from_json(const json& j) {
    ClusterStats s;
    s.cluster_id = j.at("cluster_id").get<int>();
    s.q = j.at("q").get<std::uint64_t>();
    s.q_bar = j.at("q_bar").get<double>();
    s.sigma = j.at("sigma").get<double>();
    s.delta_bar = j.at("delta_bar").get<double>();
    s.beta = j.at("beta").get<double>();
    s.gamma = j.at("gamma").get<std::uint64_t>();
    s.sr = j.at("sr").get<double>();
    s.sr_raw = j.at("sr_raw").get<double>();
    return s;
}

// order-insensitive digest of the records that hit one cluster
std::uint64_t fnv1a(std::string_view data, std::uint64_t h) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fingerprint_for_cluster(std::span<const SearchRecord> history, int cluster_id) {
    std::uint64_t combined = 1469598103934665603ULL;
    std::uint64_t count = 0;
    for (const auto& rec : history) {
        if (std::find(rec.hit_clusters.begin(), rec.hit_clusters.end(), cluster_id) ==
            rec.hit_clusters.end())
            continue;
        std::uint64_t h = 1469598103934665603ULL;
        h = fnv1a(rec.session_id, h);
        for (const auto& t : rec.terms)
            h = fnv1a(t, fnv1a("\x1f", h));
        h ^= static_cast<std::uint64_t>(rec.timestamp_ms);
        combined = fnv1a({reinterpret_cast<const char*>(&h), sizeof(h)}, combined);
        count++;
    }
    return combined ^ count;
}

} // namespace

void AbstractSet::save(const std::filesystem::path& path) const {
    json clusters = json::array();
    for (const auto& a : abstracts) {
        json entries = json::array();
        for (const auto& e : a.entries)
            entries.push_back(json{{"term", e.term}, {"weight", e.weight}, {"hits", e.hits}});
        json c{{"cluster_id", a.cluster_id}, {"entries", entries}};
        auto fp = history_fingerprint.find(a.cluster_id);
        if (fp != history_fingerprint.end())
            c["history_fingerprint"] = fp->second;
        auto st = last_stats.find(a.cluster_id);
        if (st != last_stats.end())
            c["stats"] = stats_to_json(st->second);
        clusters.push_back(std::move(c));
    }
    std::ofstream out(path);
    if (!out)
        throw PersistError("cannot write abstracts: " + path.string());
    out << json{{"clusters", clusters}}.dump(2) << "\n";
}

AbstractSet AbstractSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PersistError("cannot read abstracts: " + path.string());
    json j = json::parse(in);
    AbstractSet set;
    for (const auto& c : j.at("clusters")) {
        Abstract a;
        a.cluster_id = c.at("cluster_id").get<int>();
        for (const auto& e : c.at("entries"))
            a.entries.push_back({e.at("term").get<std::string>(), e.at("weight").get<double>(),
                                 e.at("hits").get<std::uint64_t>()});
        if (c.contains("history_fingerprint"))
            set.history_fingerprint[a.cluster_id] = c.at("history_fingerprint").get<std::uint64_t>();
        if (c.contains("stats"))
            set.last_stats[a.cluster_id] = stats_from_json(c.at("stats"));
        set.abstracts.push_back(std::move(a));
    }
    return set;
}

MaintenanceReport maintain_abstracts(std::span<const SearchRecord> history, AbstractSet& set,
                                     std::span<const ClusterSummaryLite> summaries,
                                     const semantics::SimilarityProvider& p,
                                     const MaintenanceOptions& opts) {
    MaintenanceReport report;
    if (summaries.empty() || set.abstracts.empty())
        return report;

    // q_i per cluster and the per-cluster query term lists
    std::map<int, std::uint64_t> q;
    std::map<int, std::vector<std::vector<std::string>>> cluster_queries;
    for (const auto& rec : history) {
        for (int cluster : rec.hit_clusters) {
            q[cluster]++;
            cluster_queries[cluster].push_back(rec.terms);
        }
    }
    std::uint64_t total_q = 0;
    for (const auto& s : summaries)
        total_q += q.count(s.cluster_id) ? q[s.cluster_id] : 0;
    double q_bar = static_cast<double>(total_q) / static_cast<double>(summaries.size());

    TermClusterHits hits = count_term_cluster_hits(history);

    // stats first, so every SR is current before any integration
    std::map<int, ClusterStats> stats;
    for (const auto& summary : summaries) {
        auto qit = q.find(summary.cluster_id);
        if (qit == q.end())
            continue; // no traffic: skipped
        ClusterStats s;
        s.cluster_id = summary.cluster_id;
        s.q = qit->second;
        s.q_bar = q_bar;
        s.sigma = cluster_popularity(s.q, q_bar);
        s.delta_bar = avg_query_similarity(cluster_queries[summary.cluster_id], p);
        s.beta = user_interest(s.delta_bar, s.sigma);
        s.gamma = std::max<std::uint64_t>(1, summary.term_count);
        s.sr_raw = semantic_radius_raw(s.delta_bar, s.sigma, s.gamma);
        s.sr = opts.policy == RadiusPolicy::static_s3bd
                   ? semantic_radius(s.delta_bar, s.sigma, s.gamma)
                   : policy_radius(opts.policy, s.delta_bar, s.sigma, s.gamma);
        stats[s.cluster_id] = s;
        report.stats.push_back(s);
    }

    if (opts.policy == RadiusPolicy::static_s3bd) {
        // stats are reported but abstracts stay untouched
        for (const auto& [id, s] : stats)
            set.last_stats[id] = s;
        report.clusters_skipped = summaries.size();
        return report;
    }

    for (const auto& summary : summaries) {
        int cluster_id = summary.cluster_id;
        if (!stats.count(cluster_id)) {
            report.clusters_skipped++;
            continue;
        }
        std::uint64_t fp = fingerprint_for_cluster(history, cluster_id);
        auto fp_it = set.history_fingerprint.find(cluster_id);
        if (fp_it != set.history_fingerprint.end() && fp_it->second == fp) {
            report.clusters_skipped++;
            set.last_stats[cluster_id] = stats[cluster_id];
            continue;
        }

        MarkovModel model = build_markov(history, cluster_id);
        Convergence conv = converge(model, opts.eps, opts.max_iter);
        if (!conv.converged)
            log::info("markov model for cluster " + std::to_string(cluster_id) +
                      " did not converge in " + std::to_string(conv.iterations) + " iterations");
        model.state_prob = conv.probs;
        // default: strictly above uniform; a single-state chain would make
        // that 1.0 and unreachable, so floor m at 2
        double theta = opts.theta >= 0.0
                           ? opts.theta
                           : 1.0 / static_cast<double>(std::max<std::size_t>(2, model.size()));

        for (const auto& [term, weight] : qualified_terms(model, theta)) {
            int target = select_abstract(term, weight, set.abstracts, hits, p);
            Abstract* abstract = set.find(target);
            auto target_stats = stats.find(target);
            const ClusterStats& st =
                target_stats != stats.end() ? target_stats->second : stats[cluster_id];
            auto decision = integrate_term(term, weight, *abstract, st, p);
            switch (decision.kind) {
            case IntegrationDecision::Kind::added: report.added++; break;
            case IntegrationDecision::Kind::replaced: report.replaced++; break;
            case IntegrationDecision::Kind::discarded: report.discarded++; break;
            }
        }
        set.history_fingerprint[cluster_id] = fp;
        set.last_stats[cluster_id] = stats[cluster_id];
    }

    // refresh hit counters from the full history
    for (auto& a : set.abstracts)
        for (auto& e : a.entries) {
            auto it = hits.find({e.term, a.cluster_id});
            e.hits = it == hits.end() ? 0 : it->second;
        }
    return report;
}

std::vector<Abstract> init_abstracts(
    const std::map<int, std::vector<std::pair<corpus::TermToken, std::size_t>>>& cluster_doc_assoc,
    std::size_t n, const std::map<std::string, std::string>& seed_terms) {
    if (n == 0)
        throw std::invalid_argument("init_abstracts: n must be >= 1");
    std::vector<Abstract> out;
    for (const auto& [cluster_id, assoc] : cluster_doc_assoc) {
        struct Named {
            std::string term;
            std::size_t doc_count;
        };
        std::vector<Named> named;
        named.reserve(assoc.size());
        for (const auto& [token, doc_count] : assoc) {
            auto it = seed_terms.find(token.hex());
            if (it == seed_terms.end())
                continue; // no plaintext known on the edge; cannot sample it
            named.push_back({it->second, doc_count});
        }
        std::sort(named.begin(), named.end(), [](const Named& a, const Named& b) {
            if (a.doc_count != b.doc_count) return a.doc_count > b.doc_count;
            return a.term < b.term;
        });
        if (named.size() > n)
            named.resize(n);

        Abstract a;
        a.cluster_id = cluster_id;
        double weight = 1.0 / static_cast<double>(n);
        for (auto& m : named)
            a.entries.push_back({std::move(m.term), weight, 0});
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace prunesearch::analytics
