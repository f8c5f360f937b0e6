#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prunesearch/abstracts.hpp"
#include "prunesearch/cloud_index.hpp"
#include "prunesearch/history.hpp"
#include "prunesearch/semantics.hpp"

namespace prunesearch::edge {

struct ProcessedQuery {
    std::string raw;
    std::vector<std::string> terms;    // stemmed, stop words removed
    std::vector<std::string> expanded; // terms plus similar vocabulary
    std::string session_id;
};

struct PruneDecision {
    std::vector<std::pair<int, double>> scored; // cluster_id ascending
    std::vector<int> chosen;                    // top-k, best first
};

// lowercase -> strip punctuation -> drop stop words -> stem -> expand.
// Throws QueryError("query reduced to empty") when nothing survives.
ProcessedQuery process_query(std::string_view raw, std::string_view session_id,
                             const semantics::SimilarityProvider& p, std::size_t expand_n = 2);

// score(abstract) = mean over expanded query terms of the best similarity
// to any entry; a verbatim entry match counts 1.0 even out of vocabulary.
PruneDecision prune(const ProcessedQuery& q, std::span<const analytics::Abstract> abstracts,
                    std::size_t k, const semantics::SimilarityProvider& p);

// The cloud as seen from the edge: either the in-process store or an HTTP
// client, so tests can compare the two paths directly.
class CloudBackend {
  public:
    virtual ~CloudBackend() = default;
    virtual cloud::RankedResult search(std::span<const corpus::TermToken> tokens,
                                       std::span<const int> cluster_ids) = 0;
    virtual std::vector<cloud::ClusterSummary> cluster_info() = 0;
    virtual void upload(const corpus::UploadBatch& batch) = 0;
};

class LocalCloudBackend final : public CloudBackend {
  public:
    explicit LocalCloudBackend(cloud::CloudStore& store) : store_(store) {}
    cloud::RankedResult search(std::span<const corpus::TermToken> tokens,
                               std::span<const int> cluster_ids) override;
    std::vector<cloud::ClusterSummary> cluster_info() override;
    void upload(const corpus::UploadBatch& batch) override;

  private:
    cloud::CloudStore& store_;
};

struct EdgeConfig {
    crypto::SecretKey key;
    std::size_t prune_k = 3;
    std::size_t expand_n = 2;
    std::size_t maintenance_every = 100; // searches between maintenance runs; 0 disables
    analytics::RadiusPolicy policy = analytics::RadiusPolicy::edge_based;
    std::size_t abstract_seed_n = 10;
};

struct SearchOutcome {
    cloud::RankedResult result;
    std::vector<int> chosen_clusters;
    double edge_ms = 0.0;  // query processing + pruning
    double cloud_ms = 0.0; // backend round trip
};

// Online query path plus the offline maintenance trigger. History is
// recorded in memory (and mirrored to a file when attached); abstracts are
// swapped atomically after each maintenance run.
class EdgeEngine {
  public:
    EdgeEngine(EdgeConfig config, semantics::SimilarityProvider provider,
               analytics::AbstractSet abstracts, CloudBackend& backend);

    SearchOutcome execute_search(std::string_view raw, std::string_view session_id);

    // seeds abstracts from cloud metadata and the seed map (top doc-assoc terms)
    void init_abstracts_from_cloud(const std::map<std::string, std::string>& seed_terms);

    analytics::MaintenanceReport run_maintenance();

    analytics::AbstractSet abstracts_snapshot() const;
    std::vector<analytics::SearchRecord> history_snapshot() const;
    std::size_t history_size() const;

    void attach_history_file(std::filesystem::path path);
    void preload_history(std::vector<analytics::SearchRecord> records);

    // injectable clock for reproducible timestamps
    void set_clock(std::function<std::int64_t()> now_ms);

    const EdgeConfig& config() const { return config_; }
    const semantics::SimilarityProvider& provider() const { return provider_; }

  private:
    EdgeConfig config_;
    semantics::SimilarityProvider provider_;
    CloudBackend& backend_;

    mutable std::mutex mutex_; // guards abstracts_, history_, counters
    std::mutex maintenance_mutex_; // maintenance is a single exclusive writer
    analytics::AbstractSet abstracts_;
    std::vector<analytics::SearchRecord> history_;
    std::size_t searches_since_maintenance_ = 0;
    std::unique_ptr<analytics::HistoryLog> history_file_;
    std::function<std::int64_t()> now_ms_;
};

} // namespace prunesearch::edge
