#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "prunesearch/abstracts.hpp"
#include "prunesearch/cloud_index.hpp"
#include "prunesearch/corpus.hpp"
#include "prunesearch/edge.hpp"
#include "prunesearch/semantics.hpp"

namespace prunesearch::bench {

struct BenchmarkQuery {
    std::string text; // three keywords joined by spaces
    std::string source_doc;
    std::set<int> relevant_clusters; // clusters holding >= 1 token of the keywords
};

std::string to_json_line(const BenchmarkQuery& q);
BenchmarkQuery benchmark_query_from_json(std::string_view line);

// Per document: extract per_doc_keywords, group sequentially by per_query.
// Documents with fewer than per_query keywords contribute nothing. Ground
// truth comes from tokenizing each query the way the edge would and looking
// the tokens up in `token_to_cluster`.
std::vector<BenchmarkQuery> synthesize_queries(
    std::span<const corpus::Document> docs, const crypto::SecretKey& key,
    const std::map<std::string, int>& token_to_cluster, std::size_t per_doc_keywords = 15,
    std::size_t per_query = 3, std::uint64_t seed = 42);

// Seeded shuffle, then split at round(n * train_fraction); disjoint and
// exhaustive.
std::pair<std::vector<BenchmarkQuery>, std::vector<BenchmarkQuery>> split_benchmark(
    std::vector<BenchmarkQuery> queries, double train_fraction, std::uint64_t seed);

// Distinct terms of the corpus after the extraction pipeline's
// normalization; the denominator of abstract overhead.
std::size_t count_distinct_terms(std::span<const corpus::Document> docs);

struct BenchTimings {
    double mean_search_ms = 0.0;
    double mean_edge_ms = 0.0;
    double mean_cloud_ms = 0.0;
};

struct BenchReport {
    std::string policy;
    std::uint64_t seed = 0;
    std::size_t cluster_k = 0;
    std::size_t prune_k = 0;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::size_t hit_count = 0;
    double pruning_accuracy = 0.0;
    std::size_t abstract_terms = 0;
    std::size_t distinct_corpus_terms = 0;
    double abstract_overhead = 0.0;
    std::size_t maintenance_runs = 0;
    std::size_t terms_added = 0;
    std::size_t terms_replaced = 0;
    BenchTimings timings;

    // timings are wall clock and excluded from determinism comparisons
    std::string to_json_string(bool include_timings = true) const;
};

void append_csv_row(const std::filesystem::path& csv, const BenchReport& report);

enum class Transport { local, http };

struct BenchConfig {
    std::filesystem::path corpus_dir;
    crypto::SecretKey key;
    semantics::SimilarityProvider provider;
    analytics::RadiusPolicy policy = analytics::RadiusPolicy::edge_based;
    Transport transport = Transport::local;
    std::uint64_t seed = 42;
    std::size_t cluster_k = 10;
    std::size_t prune_k = 3;
    std::size_t per_doc_keywords = 15;
    std::size_t per_query = 3;
    double train_fraction = 0.7;
    std::size_t abstract_seed_n = 10;
    std::size_t maintenance_every = 100;
    std::size_t session_length = 5;
    int kmeans_iters = 0;
    std::optional<std::filesystem::path> wire_log;      // http transport only
    std::optional<std::filesystem::path> artifacts_dir; // abstracts.json + report.json
};

// Full methodology for one policy: ingest + cluster + seed abstracts,
// replay the training split with periodic maintenance, then measure pruning
// accuracy, abstract overhead and edge/cloud timing on the test split.
BenchReport run_benchmark(const BenchConfig& config);

} // namespace prunesearch::bench
