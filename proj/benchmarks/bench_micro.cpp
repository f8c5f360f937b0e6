// Microbenchmarks for the hot paths: term tokenization, Markov convergence,
// pruning and restricted search. Run with --benchmark_filter=... as usual.

#include <random>

#include <benchmark/benchmark.h>

#include "prunesearch/abstracts.hpp"
#include "prunesearch/cloud_index.hpp"
#include "prunesearch/corpus.hpp"
#include "prunesearch/edge.hpp"
#include "prunesearch/markov.hpp"
#include "prunesearch/text.hpp"

using namespace prunesearch;

namespace {

crypto::SecretKey bench_key() {
    return crypto::SecretKey::from_hex(std::string(64, '9'));
}

std::vector<double> random_stochastic(std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    std::vector<double> p(m * m);
    for (std::size_t i = 0; i < m; i++) {
        double sum = 0;
        for (std::size_t j = 0; j < m; j++) {
            p[i * m + j] = dist(rng);
            sum += p[i * m + j];
        }
        for (std::size_t j = 0; j < m; j++)
            p[i * m + j] /= sum;
    }
    return p;
}

cloud::EncryptedIndex random_index(std::size_t tokens, std::size_t docs, std::uint64_t seed) {
    auto key = bench_key();
    std::mt19937_64 rng(seed);
    cloud::EncryptedIndex idx;
    for (std::size_t t = 0; t < tokens; t++) {
        std::set<std::string> ids;
        std::size_t n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; i++)
            ids.insert("d" + std::to_string(rng() % docs));
        idx.postings[corpus::tokenize_term("w" + std::to_string(t), key)] = ids;
        for (const auto& d : ids)
            idx.doc_store.emplace(d, crypto::Bytes{1});
    }
    return idx;
}

void BM_TokenizeTerm(benchmark::State& state) {
    auto key = bench_key();
    std::size_t i = 0;
    for (auto _ : state) {
        auto token = corpus::tokenize_term("benchterm" + std::to_string(i++ % 512), key);
        benchmark::DoNotOptimize(token);
    }
}
BENCHMARK(BM_TokenizeTerm);

void BM_PorterStem(benchmark::State& state) {
    std::vector<std::string> words{"generalizations", "oscillators", "routing",
                                   "relational",      "protocols",   "conflated"};
    std::size_t i = 0;
    for (auto _ : state) {
        auto stem = text::stem(words[i++ % words.size()]);
        benchmark::DoNotOptimize(stem);
    }
}
BENCHMARK(BM_PorterStem);

void BM_MarkovConverge(benchmark::State& state) {
    std::size_t m = static_cast<std::size_t>(state.range(0));
    analytics::MarkovModel model;
    model.states.resize(m, "s");
    model.transition = random_stochastic(m, 17);
    model.state_prob.assign(m, 1.0 / static_cast<double>(m));
    for (auto _ : state) {
        auto conv = analytics::converge(model, 1e-8, 10000);
        benchmark::DoNotOptimize(conv.probs);
    }
}
BENCHMARK(BM_MarkovConverge)->Arg(10)->Arg(50)->Arg(200);

void BM_ClusterTerms(benchmark::State& state) {
    auto idx = random_index(static_cast<std::size_t>(state.range(0)), 400, 23);
    auto centroids = cloud::select_centroids(idx, 10);
    for (auto _ : state) {
        auto cs = cloud::cluster_terms(idx, centroids);
        benchmark::DoNotOptimize(cs.clusters);
    }
}
BENCHMARK(BM_ClusterTerms)->Arg(200)->Arg(1000);

void BM_SearchClusters(benchmark::State& state) {
    auto key = bench_key();
    auto idx = random_index(1000, 400, 29);
    auto cs = cloud::cluster_terms(idx, cloud::select_centroids(idx, 10));
    std::vector<corpus::TermToken> query{corpus::tokenize_term("w3", key),
                                         corpus::tokenize_term("w77", key),
                                         corpus::tokenize_term("w912", key)};
    std::vector<int> chosen{0, 1, 2};
    for (auto _ : state) {
        auto result = cloud::search_clusters(query, chosen, cs, idx);
        benchmark::DoNotOptimize(result.entries);
    }
}
BENCHMARK(BM_SearchClusters);

void BM_Prune(benchmark::State& state) {
    std::vector<std::pair<std::string, std::string>> edges{{"root", "-"}};
    std::vector<analytics::Abstract> abstracts(10);
    for (int c = 0; c < 10; c++) {
        std::string topic = "t" + std::to_string(c);
        edges.emplace_back(topic, "root");
        abstracts[static_cast<std::size_t>(c)].cluster_id = c;
        for (int w = 0; w < 30; w++) {
            std::string word = topic + "w" + std::to_string(w);
            edges.emplace_back(word, topic);
            abstracts[static_cast<std::size_t>(c)].entries.push_back({word, 0.1, 0});
        }
    }
    auto provider =
        semantics::SimilarityProvider::from_taxonomy(semantics::Taxonomy::from_edges(edges));
    edge::ProcessedQuery q;
    q.terms = {"t3w1", "t3w2", "t7w5"};
    q.expanded = q.terms;
    for (auto _ : state) {
        auto decision = edge::prune(q, abstracts, 3, provider);
        benchmark::DoNotOptimize(decision.chosen);
    }
}
BENCHMARK(BM_Prune);

} // namespace

BENCHMARK_MAIN();
