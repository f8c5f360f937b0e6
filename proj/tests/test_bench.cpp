#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "prunesearch/bench.hpp"

using namespace prunesearch;

namespace {

crypto::SecretKey test_key() {
    return crypto::SecretKey::from_hex(std::string(64, 'e'));
}

// 15 distinct keywords per doc so each contributes exactly 5 queries
std::string doc_text(const std::string& topic, int salt) {
    std::string text;
    for (int i = 0; i < 15; i++)
        text += topic + std::to_string((salt * 15 + i) % 18) + " ";
    return text;
}

struct TempCorpus {
    std::filesystem::path dir;

    TempCorpus() {
        dir = std::filesystem::temp_directory_path() /
              ("prunesearch_bench_" + std::to_string(::getpid()));
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        for (int d = 0; d < 4; d++) {
            std::ofstream out(dir / ("netdoc" + std::to_string(d) + ".txt"));
            out << doc_text("netword", d);
        }
        for (int d = 0; d < 4; d++) {
            std::ofstream out(dir / ("musdoc" + std::to_string(d) + ".txt"));
            out << doc_text("musword", d);
        }
        // a stub too short to contribute queries
        std::ofstream stub(dir / "stub.txt");
        stub << "alpha beta";
    }
    ~TempCorpus() { std::filesystem::remove_all(dir); }
};

semantics::SimilarityProvider word_provider() {
    std::vector<std::pair<std::string, std::string>> edges{{"root", "-"}};
    for (int i = 0; i < 18; i++) {
        edges.emplace_back("netword" + std::to_string(i), "net");
        edges.emplace_back("musword" + std::to_string(i), "mus");
    }
    edges.emplace_back("net", "root");
    edges.emplace_back("mus", "root");
    return semantics::SimilarityProvider::from_taxonomy(semantics::Taxonomy::from_edges(edges));
}

} // namespace

TEST_CASE("synthesize_queries yields five queries per 15-keyword doc") {
    TempCorpus corpus;
    auto docs = corpus::load_corpus_dir(corpus.dir);
    REQUIRE(docs.size() == 9);

    auto key = test_key();
    auto cipher = crypto::make_aes_gcm_provider(key);
    auto batch = corpus::build_upload(docs, 15, key, *cipher);
    cloud::CloudStore store;
    store.upload(batch);
    store.recluster(2);

    std::map<std::string, int> token_to_cluster;
    for (const auto& s : store.summaries())
        for (const auto& m : s.members)
            token_to_cluster.emplace(m.token.hex(), s.cluster_id);

    auto queries = bench::synthesize_queries(docs, key, token_to_cluster, 15, 3, 42);
    CHECK(queries.size() == 40); // 8 docs x 5; the stub contributes none

    for (const auto& q : queries) {
        // exactly three keywords
        CHECK(std::count(q.text.begin(), q.text.end(), ' ') == 2);
        CHECK(!q.relevant_clusters.empty());
    }

    SUBCASE("synthesis is deterministic") {
        auto again = bench::synthesize_queries(docs, key, token_to_cluster, 15, 3, 42);
        REQUIRE(again.size() == queries.size());
        for (std::size_t i = 0; i < queries.size(); i++) {
            CHECK(again[i].text == queries[i].text);
            CHECK(again[i].relevant_clusters == queries[i].relevant_clusters);
        }
    }
    SUBCASE("json line round trip") {
        auto line = bench::to_json_line(queries[0]);
        auto back = bench::benchmark_query_from_json(line);
        CHECK(back.text == queries[0].text);
        CHECK(back.relevant_clusters == queries[0].relevant_clusters);
    }
}

TEST_CASE("split_benchmark shuffles and splits deterministically") {
    std::vector<bench::BenchmarkQuery> queries(500);
    for (int i = 0; i < 500; i++)
        queries[static_cast<std::size_t>(i)].text = "q" + std::to_string(i);

    auto [train, test] = bench::split_benchmark(queries, 0.7, 42);
    CHECK(train.size() == 350);
    CHECK(test.size() == 150);

    std::set<std::string> all;
    for (auto& q : train) all.insert(q.text);
    for (auto& q : test) all.insert(q.text);
    CHECK(all.size() == 500); // disjoint and exhaustive

    auto [train2, test2] = bench::split_benchmark(queries, 0.7, 42);
    CHECK(train2.size() == train.size());
    for (std::size_t i = 0; i < train.size(); i++)
        CHECK(train2[i].text == train[i].text);

    auto [train3, test3] = bench::split_benchmark(queries, 0.7, 43);
    bool different = false;
    for (std::size_t i = 0; i < train.size(); i++)
        if (train3[i].text != train[i].text)
            different = true;
    CHECK(different);

    CHECK_THROWS_AS(bench::split_benchmark(queries, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(bench::split_benchmark(queries, 1.0, 1), std::invalid_argument);
}

TEST_CASE("count_distinct_terms matches a hand count") {
    std::vector<corpus::Document> docs{
        {"a", "router uplink router", ""},
        {"b", "uplink gateway the of", ""},
    };
    CHECK(bench::count_distinct_terms(docs) == 3); // router, uplink, gateway
}

TEST_CASE("run_benchmark smoke: bounds, determinism, trivial accuracy") {
    TempCorpus corpus;
    bench::BenchConfig config;
    config.corpus_dir = corpus.dir;
    config.key = test_key();
    config.provider = word_provider();
    config.policy = analytics::RadiusPolicy::static_s3bd;
    config.cluster_k = 2;
    config.prune_k = 2; // = cluster count: every query must hit
    config.abstract_seed_n = 5;
    config.maintenance_every = 10;
    config.seed = 42;

    auto report = bench::run_benchmark(config);
    CHECK(report.train_count + report.test_count == 40);
    CHECK(report.pruning_accuracy >= 0.0);
    CHECK(report.pruning_accuracy <= 1.0);
    CHECK(report.abstract_overhead >= 0.0);
    CHECK(report.abstract_overhead <= 1.0);
    // prune_k == cluster_k makes every query a trivial hit
    CHECK(report.pruning_accuracy == doctest::Approx(1.0));

    SUBCASE("static policy is reproducible modulo timings") {
        auto again = bench::run_benchmark(config);
        CHECK(again.to_json_string(false) == report.to_json_string(false));
    }
    SUBCASE("edge_based runs maintenance") {
        config.policy = analytics::RadiusPolicy::edge_based;
        config.prune_k = 1;
        auto r = bench::run_benchmark(config);
        CHECK(r.maintenance_runs > 0);
        CHECK(r.policy == "edge_based");
    }
    SUBCASE("csv appends a row") {
        auto csv = corpus.dir / "out.csv";
        bench::append_csv_row(csv, report);
        bench::append_csv_row(csv, report);
        std::ifstream in(csv);
        std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(std::count(all.begin(), all.end(), '\n') == 3); // header + 2 rows
    }
}

TEST_CASE("run_benchmark over http transport with wire capture") {
    TempCorpus corpus;
    auto dir = std::filesystem::temp_directory_path() / "prunesearch_bench_wire";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    bench::BenchConfig config;
    config.corpus_dir = corpus.dir;
    config.key = test_key();
    config.provider = word_provider();
    config.policy = analytics::RadiusPolicy::edge_based;
    config.transport = bench::Transport::http;
    config.cluster_k = 2;
    config.prune_k = 1;
    config.abstract_seed_n = 5;
    config.maintenance_every = 10;
    config.wire_log = dir / "wire.jsonl";

    auto report = bench::run_benchmark(config);
    CHECK(report.test_count > 0);

    std::ifstream in(*config.wire_log);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(!all.empty());
    // every fixture keyword stays on the edge
    for (int i = 0; i < 18; i++) {
        CHECK(all.find("netword" + std::to_string(i)) == std::string::npos);
        CHECK(all.find("musword" + std::to_string(i)) == std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
