#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prunesearch/corpus.hpp"
#include "prunesearch/history.hpp"
#include "prunesearch/semantics.hpp"

namespace prunesearch::analytics {

struct ClusterStats {
    int cluster_id = 0;
    std::uint64_t q = 0;     // queries that hit this cluster
    double q_bar = 0.0;      // mean queries per cluster
    double sigma = 0.0;      // popularity (q - q_bar) / q_bar
    double delta_bar = 0.0;  // mean pairwise query similarity
    double beta = 0.0;       // user interest 1/(delta_bar + sigma)
    std::uint64_t gamma = 1; // cluster term count
    double sr = 0.0;         // semantic radius, clamped
    double sr_raw = 0.0;     // before the output clamp, for diagnostics
};

// (q - q_bar) / q_bar; throws std::invalid_argument("no query traffic")
// when q_bar is zero.
double cluster_popularity(std::uint64_t q, double q_bar);

// Mean over unordered query pairs; a pair's similarity matches each term of
// the shorter query to its best counterpart in the other. One query -> 1.0.
double avg_query_similarity(std::span<const std::vector<std::string>> queries,
                            const semantics::SimilarityProvider& p);

// 1/(delta_bar + sigma), denominator clamped to >= 0.1.
double user_interest(double delta_bar, double sigma);

inline constexpr double kRadiusDenominatorFloor = 0.1;
inline constexpr double kRadiusMin = 0.05;
inline constexpr double kRadiusMax = 0.95;

// 1/(delta_bar + sigma + log10(gamma)), denominator clamped to >= 0.1.
double semantic_radius_raw(double delta_bar, double sigma, std::uint64_t gamma);
// semantic_radius_raw clamped into [0.05, 0.95].
double semantic_radius(double delta_bar, double sigma, std::uint64_t gamma);

// Alternate radius rules compared by the benchmark harness.
enum class RadiusPolicy { static_s3bd, beta_only, gamma_delta, edge_based };

std::string_view to_string(RadiusPolicy p);
std::optional<RadiusPolicy> radius_policy_from_string(std::string_view s);
double policy_radius(RadiusPolicy policy, double delta_bar, double sigma, std::uint64_t gamma);

struct AbstractEntry {
    std::string term;
    double weight = 0.0;     // future-appearance probability
    std::uint64_t hits = 0;  // times searched while this cluster was hit
};

struct Abstract {
    int cluster_id = 0;
    std::vector<AbstractEntry> entries;

    const AbstractEntry* find(std::string_view term) const;
    AbstractEntry* find(std::string_view term);
};

// (term, cluster_id) -> times the term was searched while the cluster was hit
using TermClusterHits = std::map<std::pair<std::string, int>, std::uint64_t>;

TermClusterHits count_term_cluster_hits(std::span<const SearchRecord> history);

// Abstract with maximum mean similarity to the term; ties prefer the
// cluster hit most often for this term, then the lowest cluster id.
// Empty abstracts score 0.
int select_abstract(std::string_view term, double weight, std::span<const Abstract> abstracts,
                    const TermClusterHits& hits, const semantics::SimilarityProvider& p);

struct IntegrationDecision {
    enum class Kind { added, replaced, discarded } kind = Kind::discarded;
    std::string replaced_term; // set when kind == replaced
};

// Adds the term when it falls outside the semantic radius of every member;
// otherwise it competes on weight with the most similar member. A term
// already present only has its weight refreshed.
IntegrationDecision integrate_term(std::string_view term, double weight, Abstract& abstract,
                                   const ClusterStats& stats,
                                   const semantics::SimilarityProvider& p);

struct ClusterSummaryLite {
    int cluster_id = 0;
    std::uint64_t term_count = 1; // gamma
};

// Edge-tier abstract state: abstracts plus the per-cluster history
// fingerprints that make maintenance idempotent, and the last stats
// snapshot for reporting.
struct AbstractSet {
    std::vector<Abstract> abstracts;
    std::map<int, std::uint64_t> history_fingerprint;
    std::map<int, ClusterStats> last_stats;

    Abstract* find(int cluster_id);
    std::size_t total_terms() const;

    void save(const std::filesystem::path& path) const; // abstracts.json
    static AbstractSet load(const std::filesystem::path& path);
};

struct MaintenanceReport {
    std::vector<ClusterStats> stats;
    std::size_t added = 0;
    std::size_t replaced = 0;
    std::size_t discarded = 0;
    std::size_t clusters_skipped = 0; // no history, or unchanged fingerprint
};

struct MaintenanceOptions {
    RadiusPolicy policy = RadiusPolicy::edge_based;
    double theta = -1.0; // qualification threshold; < 0 means 1/m
    double eps = 1e-8;
    std::size_t max_iter = 10000;
};

// Recomputes ClusterStats from the full history, then per changed cluster
// runs build_markov -> converge -> qualified_terms and integrates each
// qualified term into the abstract chosen by select_abstract. Re-running on
// unchanged history is a no-op.
MaintenanceReport maintain_abstracts(std::span<const SearchRecord> history, AbstractSet& set,
                                     std::span<const ClusterSummaryLite> summaries,
                                     const semantics::SimilarityProvider& p,
                                     const MaintenanceOptions& opts = {});

// Initial abstracts: per cluster the n tokens with the longest posting
// lists (ties by plaintext), weight 1/n and zero hits. Tokens without a
// seed plaintext are skipped.
std::vector<Abstract> init_abstracts(
    const std::map<int, std::vector<std::pair<corpus::TermToken, std::size_t>>>& cluster_doc_assoc,
    std::size_t n, const std::map<std::string, std::string>& seed_terms);

} // namespace prunesearch::analytics
