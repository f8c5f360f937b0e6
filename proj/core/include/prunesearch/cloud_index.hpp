#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "prunesearch/corpus.hpp"

namespace prunesearch::cloud {

using corpus::TermToken;
using corpus::UploadBatch;

struct EncryptedIndex {
    std::map<TermToken, std::set<std::string>> postings;
    std::map<std::string, crypto::Bytes> doc_store;

    // throws std::invalid_argument naming the duplicate doc id
    void apply(const UploadBatch& batch);
};

struct Cluster {
    int cluster_id = 0;
    TermToken centroid;
    std::set<TermToken> members; // includes centroid
};

struct ClusterSet {
    std::vector<Cluster> clusters;
    std::size_t orphan_count = 0; // tokens with zero relatedness to every centroid

    std::size_t k() const { return clusters.size(); }
    std::optional<int> cluster_of(const TermToken& token) const;
};

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
};

struct RankedResult {
    std::vector<RankedEntry> entries;
};

std::string to_json_string(const RankedResult& r);
RankedResult ranked_result_from_json(std::string_view body);

// |postings[t1] & postings[t2]|; throws std::invalid_argument naming an
// unknown token.
std::size_t semantic_relatedness(const TermToken& t1, const TermToken& t2,
                                 const EncryptedIndex& idx);

// Tokens whose uniquely-associated documents outnumber their shared ones,
// ranked by margin; tops up with the best ineligible tokens when fewer
// than k qualify. Throws when k exceeds the token count or k == 0.
std::vector<TermToken> select_centroids(const EncryptedIndex& idx, std::size_t k);

// Single-pass assignment of every non-centroid token to the centroid of
// maximum relatedness; ties and zero-relatedness tokens go to the lowest
// cluster id.
ClusterSet cluster_terms(const EncryptedIndex& idx, std::span<const TermToken> centroids);

// Optional refinement: recompute each centroid as the member with maximum
// summed intra-cluster relatedness, then reassign. `iters` full rounds.
ClusterSet kmeans_refine(const EncryptedIndex& idx, ClusterSet cs, int iters);

// Matches only tokens that are members of the named clusters;
// score(doc) = sum over matched query tokens of 1/|postings[token]|.
// Throws QueryError("empty query") and std::out_of_range on bad ids.
RankedResult search_clusters(std::span<const TermToken> query_tokens,
                             std::span<const int> cluster_ids, const ClusterSet& cs,
                             const EncryptedIndex& idx);

// Directory layout: meta.json, postings.jsonl, clusters.jsonl, docs/*.bin.
void persist(const ClusterSet& cs, const EncryptedIndex& idx, const std::filesystem::path& dir);
std::pair<ClusterSet, EncryptedIndex> load(const std::filesystem::path& dir);

struct TokenCount {
    TermToken token;
    std::size_t doc_count = 0;
};

struct ClusterSummary {
    int cluster_id = 0;
    TermToken centroid;
    std::vector<TokenCount> members;
};

// Thread-safe owner of the index + clusters used by the cloud service.
// Searches run under a shared lock; uploads and re-clustering take the
// writer lock.
class CloudStore {
  public:
    CloudStore() = default;
    explicit CloudStore(std::pair<ClusterSet, EncryptedIndex> state);

    void upload(const UploadBatch& batch);
    void recluster(std::size_t k, int kmeans_iters = 0);
    RankedResult search(std::span<const TermToken> tokens, std::span<const int> cluster_ids) const;
    std::vector<ClusterSummary> summaries() const;
    void persist_to(const std::filesystem::path& dir) const;

    std::size_t doc_count() const;
    std::size_t token_count() const;
    std::size_t cluster_count() const;

  private:
    mutable std::shared_mutex mutex_;
    EncryptedIndex index_;
    ClusterSet clusters_;
};

} // namespace prunesearch::cloud
