#include "prunesearch/bench.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prunesearch/log.hpp"
#include "prunesearch/text.hpp"
#include "prunesearch/transport.hpp"

using json = nlohmann::json;

namespace prunesearch::bench {

std::string to_json_line(const BenchmarkQuery& q) {
    return json{{"text", q.text},
                {"source_doc", q.source_doc},
                {"relevant_clusters", q.relevant_clusters}}
        .dump();
}

BenchmarkQuery benchmark_query_from_json(std::string_view line) {
    json j = json::parse(line);
    BenchmarkQuery q;
    q.text = j.at("text").get<std::string>();
    q.source_doc = j.at("source_doc").get<std::string>();
    for (const auto& c : j.at("relevant_clusters"))
        q.relevant_clusters.insert(c.get<int>());
    return q;
}

std::vector<BenchmarkQuery> synthesize_queries(std::span<const corpus::Document> docs,
                                               const crypto::SecretKey& key,
                                               const std::map<std::string, int>& token_to_cluster,
                                               std::size_t per_doc_keywords, std::size_t per_query,
                                               std::uint64_t seed) {
    (void)seed; // synthesis is order-deterministic; the seed matters for the split
    if (per_query == 0)
        throw std::invalid_argument("per_query must be >= 1");
    std::vector<BenchmarkQuery> out;
    for (const auto& doc : docs) {
        auto keywords = corpus::extract_keywords(doc, per_doc_keywords);
        if (keywords.size() < per_query) {
            log::info("bench synth: skipping '" + doc.doc_id + "' (" +
                      std::to_string(keywords.size()) + " keywords)");
            continue;
        }
        std::size_t groups = keywords.size() / per_query;
        for (std::size_t g = 0; g < groups; g++) {
            BenchmarkQuery q;
            q.source_doc = doc.doc_id;
            std::string text;
            for (std::size_t i = 0; i < per_query; i++) {
                if (i) text += ' ';
                text += keywords[g * per_query + i].term;
            }
            q.text = std::move(text);
            // ground truth through the same pipeline the edge applies
            for (const auto& term : text::pipeline(q.text)) {
                auto it = token_to_cluster.find(corpus::tokenize_term(term, key).hex());
                if (it != token_to_cluster.end())
                    q.relevant_clusters.insert(it->second);
            }
            if (q.relevant_clusters.empty()) {
                log::info("bench synth: query '" + q.text + "' resolves to no cluster; skipped");
                continue;
            }
            out.push_back(std::move(q));
        }
    }
    return out;
}

std::pair<std::vector<BenchmarkQuery>, std::vector<BenchmarkQuery>> split_benchmark(
    std::vector<BenchmarkQuery> queries, double train_fraction, std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw std::invalid_argument("train_fraction must be in (0, 1)");
    std::mt19937_64 rng(seed);
    std::shuffle(queries.begin(), queries.end(), rng);
    std::size_t cut = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(queries.size())));
    cut = std::min(cut, queries.size());
    std::vector<BenchmarkQuery> train(queries.begin(), queries.begin() + static_cast<long>(cut));
    std::vector<BenchmarkQuery> test(queries.begin() + static_cast<long>(cut), queries.end());
    return {std::move(train), std::move(test)};
}

std::size_t count_distinct_terms(std::span<const corpus::Document> docs) {
    std::set<std::string> distinct;
    for (const auto& doc : docs)
        for (auto& term : text::pipeline(doc.text))
            distinct.insert(std::move(term));
    return distinct.size();
}

std::string BenchReport::to_json_string(bool include_timings) const {
    json j{{"policy", policy},
           {"seed", seed},
           {"cluster_k", cluster_k},
           {"prune_k", prune_k},
           {"train_count", train_count},
           {"test_count", test_count},
           {"hit_count", hit_count},
           {"pruning_accuracy", pruning_accuracy},
           {"abstract_terms", abstract_terms},
           {"distinct_corpus_terms", distinct_corpus_terms},
           {"abstract_overhead", abstract_overhead},
           {"maintenance_runs", maintenance_runs},
           {"terms_added", terms_added},
           {"terms_replaced", terms_replaced}};
    if (include_timings)
        j["timings"] = json{{"mean_search_ms", timings.mean_search_ms},
                            {"mean_edge_ms", timings.mean_edge_ms},
                            {"mean_cloud_ms", timings.mean_cloud_ms}};
    return j.dump(2);
}

void append_csv_row(const std::filesystem::path& csv, const BenchReport& r) {
    bool fresh = !std::filesystem::exists(csv);
    std::ofstream out(csv, std::ios::app);
    if (!out)
        throw PersistError("cannot write csv: " + csv.string());
    if (fresh)
        out << "policy,seed,cluster_k,prune_k,train,test,hits,accuracy,abstract_terms,"
               "distinct_terms,overhead,mean_search_ms,mean_edge_ms,mean_cloud_ms\n";
    out << r.policy << ',' << r.seed << ',' << r.cluster_k << ',' << r.prune_k << ','
        << r.train_count << ',' << r.test_count << ',' << r.hit_count << ','
        << r.pruning_accuracy << ',' << r.abstract_terms << ',' << r.distinct_corpus_terms << ','
        << r.abstract_overhead << ',' << r.timings.mean_search_ms << ','
        << r.timings.mean_edge_ms << ',' << r.timings.mean_cloud_ms << "\n";
}

BenchReport run_benchmark(const BenchConfig& config) {
    auto docs = corpus::load_corpus_dir(config.corpus_dir);
    if (docs.empty())
        throw std::invalid_argument("bench: corpus is empty: " + config.corpus_dir.string());

    auto cipher = crypto::make_aes_gcm_provider(config.key);
    corpus::SeedMap seeds;
    auto batch = corpus::build_upload(docs, config.per_doc_keywords, config.key, *cipher, &seeds);

    // one in-process store either way; http mode fronts it with a real server
    cloud::CloudStore store;
    std::unique_ptr<transport::WireLog> wire_log;
    if (config.wire_log)
        wire_log = std::make_unique<transport::WireLog>(*config.wire_log);

    std::unique_ptr<transport::CloudServer> server;
    std::unique_ptr<edge::CloudBackend> backend;
    if (config.transport == Transport::http) {
        server = std::make_unique<transport::CloudServer>(store);
        server->start("127.0.0.1");
        backend = std::make_unique<transport::CloudClient>(server->base_url(),
                                                           std::chrono::seconds(10),
                                                           wire_log.get());
    } else {
        backend = std::make_unique<edge::LocalCloudBackend>(store);
    }

    backend->upload(batch);
    store.recluster(config.cluster_k, config.kmeans_iters); // cloud-side admin step

    std::map<std::string, int> token_to_cluster;
    for (const auto& summary : backend->cluster_info())
        for (const auto& member : summary.members)
            token_to_cluster.emplace(member.token.hex(), summary.cluster_id);

    auto queries = synthesize_queries(docs, config.key, token_to_cluster,
                                      config.per_doc_keywords, config.per_query, config.seed);
    auto [train, test] = split_benchmark(std::move(queries), config.train_fraction, config.seed);

    edge::EdgeConfig edge_config;
    edge_config.key = config.key;
    edge_config.prune_k = config.prune_k;
    edge_config.maintenance_every = 0; // the harness drives maintenance itself
    edge_config.policy = config.policy;
    edge_config.abstract_seed_n = config.abstract_seed_n;

    edge::EdgeEngine engine(edge_config, config.provider, analytics::AbstractSet{}, *backend);
    engine.init_abstracts_from_cloud(seeds.token_hex_to_term());

    // deterministic logical clock; one tick per query keeps sessions intact
    std::int64_t tick = 0;
    engine.set_clock([&tick] { return tick; });

    BenchReport report;
    report.policy = std::string(analytics::to_string(config.policy));
    report.seed = config.seed;
    report.cluster_k = config.cluster_k;
    report.prune_k = config.prune_k;
    report.train_count = train.size();
    report.test_count = test.size();

    const bool maintain = config.policy != analytics::RadiusPolicy::static_s3bd;
    std::size_t since_maintenance = 0;
    for (std::size_t i = 0; i < train.size(); i++) {
        tick = static_cast<std::int64_t>(i) * 1000;
        std::string session = "train-s" + std::to_string(i / config.session_length);
        engine.execute_search(train[i].text, session);
        if (maintain && config.maintenance_every > 0 &&
            ++since_maintenance >= config.maintenance_every) {
            since_maintenance = 0;
            engine.run_maintenance();
            report.maintenance_runs++;
        }
    }
    if (maintain) {
        auto final_report = engine.run_maintenance();
        report.maintenance_runs++;
        report.terms_added = final_report.added;
        report.terms_replaced = final_report.replaced;
    }

    double sum_edge = 0.0, sum_cloud = 0.0;
    for (std::size_t i = 0; i < test.size(); i++) {
        tick = static_cast<std::int64_t>(train.size() + i) * 1000;
        std::string session = "test-s" + std::to_string(i / config.session_length);
        auto outcome = engine.execute_search(test[i].text, session);
        sum_edge += outcome.edge_ms;
        sum_cloud += outcome.cloud_ms;
        bool hit = std::any_of(outcome.chosen_clusters.begin(), outcome.chosen_clusters.end(),
                               [&](int c) { return test[i].relevant_clusters.count(c) > 0; });
        if (hit)
            report.hit_count++;
    }
    if (!test.empty()) {
        report.timings.mean_edge_ms = sum_edge / static_cast<double>(test.size());
        report.timings.mean_cloud_ms = sum_cloud / static_cast<double>(test.size());
        report.timings.mean_search_ms =
            report.timings.mean_edge_ms + report.timings.mean_cloud_ms;
        report.pruning_accuracy =
            static_cast<double>(report.hit_count) / static_cast<double>(test.size());
    }

    auto abstracts = engine.abstracts_snapshot();
    report.abstract_terms = abstracts.total_terms();
    report.distinct_corpus_terms = count_distinct_terms(docs);
    report.abstract_overhead = report.distinct_corpus_terms == 0
                                   ? 0.0
                                   : static_cast<double>(report.abstract_terms) /
                                         static_cast<double>(report.distinct_corpus_terms);

    if (config.artifacts_dir) {
        std::filesystem::create_directories(*config.artifacts_dir);
        abstracts.save(*config.artifacts_dir / "abstracts.json");
        std::ofstream out(*config.artifacts_dir / "report.json");
        out << report.to_json_string() << "\n";
    }
    if (server)
        server->stop();
    return report;
}

} // namespace prunesearch::bench
