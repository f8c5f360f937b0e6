// prunesearch command line: corpus ingestion, cloud-side clustering, the two
// services, interactive search, abstract inspection and the benchmark
// harness. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prunesearch/bench.hpp"
#include "prunesearch/cloud_index.hpp"
#include "prunesearch/corpus.hpp"
#include "prunesearch/edge.hpp"
#include "prunesearch/transport.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace prunesearch;

namespace {

semantics::SimilarityProvider load_provider(const std::string& taxonomy,
                                            const std::string& embeddings) {
    if (!taxonomy.empty())
        return semantics::SimilarityProvider::from_taxonomy(semantics::Taxonomy::load(taxonomy));
    if (!embeddings.empty())
        return semantics::SimilarityProvider::from_embeddings(
            semantics::EmbeddingTable::load(embeddings));
    throw std::runtime_error("a --taxonomy or --embeddings file is required");
}

struct EdgeFileConfig {
    std::string key_path;
    std::string taxonomy_path;
    std::string embeddings_path;
    std::string state_dir;
    std::string cloud_addr;
    std::size_t prune_k = 3;
    std::size_t expand_n = 2;
    std::size_t maintenance_every = 100;
    std::string policy = "edge_based";
};

EdgeFileConfig load_edge_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read config: " + path.string());
    json j = json::parse(in);
    EdgeFileConfig c;
    c.key_path = j.at("key_path").get<std::string>();
    c.taxonomy_path = j.value("taxonomy_path", "");
    c.embeddings_path = j.value("embeddings_path", "");
    c.state_dir = j.value("state_dir", "");
    c.cloud_addr = j.value("cloud_addr", "");
    c.prune_k = j.value("prune_k", 3u);
    c.expand_n = j.value("expand_n", 2u);
    c.maintenance_every = j.value("maintenance_every", 100u);
    c.policy = j.value("policy", "edge_based");
    return c;
}

edge::EdgeConfig to_engine_config(const EdgeFileConfig& c) {
    edge::EdgeConfig config;
    config.key = crypto::SecretKey::from_file(c.key_path);
    config.prune_k = c.prune_k;
    config.expand_n = c.expand_n;
    config.maintenance_every = c.maintenance_every;
    auto policy = analytics::radius_policy_from_string(c.policy);
    if (!policy)
        throw std::runtime_error("unknown policy: " + c.policy);
    config.policy = *policy;
    return config;
}

analytics::AbstractSet load_abstracts_if_any(const fs::path& state_dir) {
    auto path = state_dir / "abstracts.json";
    if (fs::exists(path))
        return analytics::AbstractSet::load(path);
    return {};
}

volatile std::sig_atomic_t g_stop = 0;
void handle_stop(int) { g_stop = 1; }

void wait_for_signal() {
    std::signal(SIGINT, handle_stop);
    std::signal(SIGTERM, handle_stop);
    while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
}

int run(int argc, char** argv) {
    CLI::App app{"edge-pruned encrypted search"};
    app.require_subcommand(1);

    // --- ingest ---
    auto* ingest = app.add_subcommand("ingest", "extract, tokenize and encrypt a corpus dir");
    std::string in_dir, key_path, index_dir, cloud_addr, edge_state;
    std::size_t keywords_per_doc = 15;
    ingest->add_option("dir", in_dir, "directory of .txt documents")->required();
    ingest->add_option("--key", key_path, "32-byte or 64-hex key file")->required();
    ingest->add_option("--index", index_dir, "local index directory to create/extend");
    ingest->add_option("--cloud-addr", cloud_addr, "upload to a running cloud instead");
    ingest->add_option("--edge-state", edge_state, "edge state dir for the seed term map");
    ingest->add_option("--keywords-per-doc", keywords_per_doc, "keywords extracted per doc");

    // --- cluster ---
    auto* cluster = app.add_subcommand("cluster", "cluster the encrypted index by co-occurrence");
    std::size_t cluster_k = 10;
    int kmeans_iters = 0;
    std::size_t abstract_terms = 10;
    cluster->add_option("--index", index_dir, "index directory")->required();
    cluster->add_option("--k", cluster_k, "number of clusters");
    cluster->add_option("--kmeans-iters", kmeans_iters, "optional refinement rounds");
    cluster->add_option("--edge-state", edge_state,
                        "also seed initial abstracts into this edge state dir");
    cluster->add_option("--abstract-terms", abstract_terms, "terms per initial abstract");

    // --- serve-cloud ---
    auto* serve_cloud = app.add_subcommand("serve-cloud", "run the cloud tier");
    std::string bind = "127.0.0.1:8877";
    serve_cloud->add_option("--bind", bind, "host:port");
    serve_cloud->add_option("--index", index_dir, "index directory")->required();

    // --- serve-edge ---
    auto* serve_edge = app.add_subcommand("serve-edge", "run the edge tier");
    std::string config_path;
    serve_edge->add_option("--bind", bind, "host:port");
    serve_edge->add_option("--config", config_path, "edge config JSON")->required();
    serve_edge->add_option("--cloud-addr", cloud_addr, "override config cloud address");

    // --- search ---
    auto* search = app.add_subcommand("search", "run one query through the edge pipeline");
    std::string query, session = "cli", edge_addr;
    search->add_option("query", query, "query text")->required();
    search->add_option("--config", config_path, "edge config JSON");
    search->add_option("--edge-addr", edge_addr, "query a running edge service instead");
    search->add_option("--session", session, "session id");

    // --- abstracts ---
    auto* abstracts_cmd = app.add_subcommand("abstracts", "inspect edge abstracts");
    auto* abstracts_show = abstracts_cmd->add_subcommand("show", "list abstract terms");
    auto* abstracts_stats = abstracts_cmd->add_subcommand("stats", "per-cluster statistics");
    for (auto* sub : {abstracts_show, abstracts_stats})
        sub->add_option("--edge-state", edge_state, "edge state dir")->required();

    // --- replay ---
    auto* replay = app.add_subcommand("replay", "run offline maintenance over a history log");
    std::string history_path, taxonomy_path, embeddings_path, policy_name = "edge_based";
    replay->add_option("history", history_path, "history JSONL file")->required();
    replay->add_option("--edge-state", edge_state, "edge state dir")->required();
    replay->add_option("--index", index_dir, "clustered index dir (for cluster sizes)")
        ->required();
    replay->add_option("--taxonomy", taxonomy_path, "taxonomy TSV");
    replay->add_option("--embeddings", embeddings_path, "embedding table");
    replay->add_option("--policy", policy_name, "radius policy");

    // --- bench ---
    auto* bench_cmd = app.add_subcommand("bench", "benchmark harness");
    auto* bench_synth = bench_cmd->add_subcommand("synth", "synthesize benchmark queries");
    std::string corpus_dir, out_path = "-", train_out = "train.jsonl", test_out = "test.jsonl";
    std::size_t per_query = 3;
    std::uint64_t seed = 42;
    bench_synth->add_option("--corpus", corpus_dir, "corpus dir")->required();
    bench_synth->add_option("--key", key_path, "key file")->required();
    bench_synth->add_option("--index", index_dir, "clustered index dir")->required();
    bench_synth->add_option("--per-doc", keywords_per_doc, "keywords per doc");
    bench_synth->add_option("--per-query", per_query, "keywords per query");
    bench_synth->add_option("--seed", seed, "seed");
    bench_synth->add_option("--out", out_path, "output file ('-' for stdout)");

    auto* bench_split = bench_cmd->add_subcommand("split", "train/test split");
    std::string split_in;
    double train_fraction = 0.7;
    bench_split->add_option("--in", split_in, "queries JSONL")->required();
    bench_split->add_option("--train-out", train_out, "train output");
    bench_split->add_option("--test-out", test_out, "test output");
    bench_split->add_option("--fraction", train_fraction, "train fraction");
    bench_split->add_option("--seed", seed, "seed");

    auto* bench_run = bench_cmd->add_subcommand("run", "full benchmark for one policy");
    std::string csv_path, artifacts_dir, wire_log, transport_name = "local";
    std::size_t prune_k = 3, maintenance_every = 100;
    bench_run->add_option("--corpus", corpus_dir, "corpus dir")->required();
    bench_run->add_option("--key", key_path, "key file")->required();
    bench_run->add_option("--taxonomy", taxonomy_path, "taxonomy TSV");
    bench_run->add_option("--embeddings", embeddings_path, "embedding table");
    bench_run->add_option("--policy", policy_name, "static_s3bd|beta_only|gamma_delta|edge_based")
        ->required();
    bench_run->add_option("--seed", seed, "seed");
    bench_run->add_option("--k", cluster_k, "cluster count");
    bench_run->add_option("--prune-k", prune_k, "clusters searched per query");
    bench_run->add_option("--maintenance-every", maintenance_every,
                          "searches between maintenance runs");
    bench_run->add_option("--transport", transport_name, "local|http");
    bench_run->add_option("--wire-log", wire_log, "capture cloud-bound traffic (http only)");
    bench_run->add_option("--csv", csv_path, "append a CSV row");
    bench_run->add_option("--out-dir", artifacts_dir, "write abstracts.json and report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (ingest->parsed()) {
        auto key = crypto::SecretKey::from_file(key_path);
        auto cipher = crypto::make_aes_gcm_provider(key);
        auto docs = corpus::load_corpus_dir(in_dir);
        corpus::SeedMap seeds;
        auto batch = corpus::build_upload(docs, keywords_per_doc, key, *cipher, &seeds);
        if (!cloud_addr.empty()) {
            transport::CloudClient client(cloud_addr);
            client.upload(batch);
            std::cout << "uploaded " << batch.encrypted_docs.size() << " docs to " << cloud_addr
                      << "\n";
        } else if (!index_dir.empty()) {
            cloud::EncryptedIndex idx;
            cloud::ClusterSet cs;
            if (fs::exists(fs::path(index_dir) / "meta.json"))
                std::tie(cs, idx) = cloud::load(index_dir);
            idx.apply(batch);
            cloud::persist(cs, idx, index_dir);
            std::cout << "indexed " << batch.encrypted_docs.size() << " docs ("
                      << idx.postings.size() << " tokens) into " << index_dir << "\n";
        } else {
            throw std::runtime_error("need --index or --cloud-addr");
        }
        if (!edge_state.empty()) {
            fs::create_directories(edge_state);
            corpus::SeedMap merged;
            auto seed_path = fs::path(edge_state) / "seeds.json";
            if (fs::exists(seed_path))
                merged = corpus::SeedMap::load(seed_path);
            for (auto& [term, token] : seeds.term_to_token)
                merged.term_to_token.emplace(term, token);
            merged.save(seed_path);
        }
        return 0;
    }

    if (cluster->parsed()) {
        auto [cs, idx] = cloud::load(index_dir);
        auto centroids = cloud::select_centroids(idx, cluster_k);
        cs = cloud::cluster_terms(idx, centroids);
        if (kmeans_iters > 0)
            cs = cloud::kmeans_refine(idx, cs, kmeans_iters);
        cloud::persist(cs, idx, index_dir);
        std::cout << "clustered " << idx.postings.size() << " tokens into " << cs.clusters.size()
                  << " clusters (" << cs.orphan_count << " orphans)\n";
        if (!edge_state.empty()) {
            fs::create_directories(edge_state);
            auto seeds = corpus::SeedMap::load(fs::path(edge_state) / "seeds.json");
            std::map<int, std::vector<std::pair<corpus::TermToken, std::size_t>>> assoc;
            for (const auto& c : cs.clusters)
                for (const auto& m : c.members) {
                    auto it = idx.postings.find(m);
                    assoc[c.cluster_id].emplace_back(m, it == idx.postings.end()
                                                            ? 0
                                                            : it->second.size());
                }
            analytics::AbstractSet set;
            set.abstracts =
                analytics::init_abstracts(assoc, abstract_terms, seeds.token_hex_to_term());
            set.save(fs::path(edge_state) / "abstracts.json");
            std::cout << "seeded " << set.total_terms() << " abstract terms into " << edge_state
                      << "\n";
        }
        return 0;
    }

    if (serve_cloud->parsed()) {
        cloud::CloudStore store(cloud::load(index_dir));
        auto colon = bind.rfind(':');
        if (colon == std::string::npos)
            throw std::runtime_error("--bind must be host:port");
        transport::CloudServer server(store);
        server.start(bind.substr(0, colon), std::stoi(bind.substr(colon + 1)));
        std::cout << "cloud tier on " << server.base_url() << " (" << store.doc_count()
                  << " docs, " << store.cluster_count() << " clusters)\n";
        wait_for_signal();
        server.stop();
        return 0;
    }

    if (serve_edge->parsed()) {
        auto file_config = load_edge_config(config_path);
        if (!cloud_addr.empty())
            file_config.cloud_addr = cloud_addr;
        if (file_config.cloud_addr.empty())
            throw std::runtime_error("no cloud address in config or --cloud-addr");
        auto provider = load_provider(file_config.taxonomy_path, file_config.embeddings_path);
        transport::CloudClient backend(file_config.cloud_addr);

        fs::path state(file_config.state_dir.empty() ? "edge-state" : file_config.state_dir);
        fs::create_directories(state);
        edge::EdgeEngine engine(to_engine_config(file_config), provider,
                                load_abstracts_if_any(state), backend);
        if (engine.abstracts_snapshot().abstracts.empty()) {
            auto seeds = corpus::SeedMap::load(state / "seeds.json");
            engine.init_abstracts_from_cloud(seeds.token_hex_to_term());
        }
        if (fs::exists(state / "history.jsonl"))
            engine.preload_history(analytics::HistoryLog::read_all(state / "history.jsonl"));
        engine.attach_history_file(state / "history.jsonl");

        auto colon = bind.rfind(':');
        if (colon == std::string::npos)
            throw std::runtime_error("--bind must be host:port");
        transport::EdgeServer server(engine, backend);
        server.start(bind.substr(0, colon), std::stoi(bind.substr(colon + 1)));
        std::cout << "edge tier on " << server.base_url() << " -> " << file_config.cloud_addr
                  << "\n";
        wait_for_signal();
        engine.abstracts_snapshot().save(state / "abstracts.json");
        server.stop();
        return 0;
    }

    if (search->parsed()) {
        if (!edge_addr.empty()) {
            transport::EdgeClient client(edge_addr);
            auto response = client.query(query, session);
            std::cout << json{{"result", json::parse(response.result_json)},
                              {"chosen_clusters", response.chosen_clusters}}
                             .dump(2)
                      << "\n";
            return 0;
        }
        if (config_path.empty())
            throw std::runtime_error("need --config or --edge-addr");
        auto file_config = load_edge_config(config_path);
        if (!cloud_addr.empty())
            file_config.cloud_addr = cloud_addr;
        auto provider = load_provider(file_config.taxonomy_path, file_config.embeddings_path);
        transport::CloudClient backend(file_config.cloud_addr);
        fs::path state(file_config.state_dir);
        edge::EdgeEngine engine(to_engine_config(file_config), provider,
                                load_abstracts_if_any(state), backend);
        if (engine.abstracts_snapshot().abstracts.empty()) {
            auto seeds = corpus::SeedMap::load(state / "seeds.json");
            engine.init_abstracts_from_cloud(seeds.token_hex_to_term());
        }
        if (fs::exists(state / "history.jsonl"))
            engine.attach_history_file(state / "history.jsonl");
        auto outcome = engine.execute_search(query, session);
        std::cout << json{{"result", json::parse(cloud::to_json_string(outcome.result))},
                          {"chosen_clusters", outcome.chosen_clusters},
                          {"edge_ms", outcome.edge_ms},
                          {"cloud_ms", outcome.cloud_ms}}
                         .dump(2)
                  << "\n";
        return 0;
    }

    if (abstracts_show->parsed() || abstracts_stats->parsed()) {
        auto set = analytics::AbstractSet::load(fs::path(edge_state) / "abstracts.json");
        if (abstracts_show->parsed()) {
            for (const auto& a : set.abstracts) {
                std::cout << "cluster " << a.cluster_id << " (" << a.entries.size()
                          << " terms)\n";
                for (const auto& e : a.entries)
                    std::cout << "  " << e.term << "  weight=" << e.weight << " hits=" << e.hits
                              << "\n";
            }
        } else {
            std::cout << "cluster\tq\tsigma\tdelta_bar\tbeta\tgamma\tsr\tsr_raw\tterms\n";
            for (const auto& [id, s] : set.last_stats) {
                const auto* a = set.find(id);
                std::cout << id << '\t' << s.q << '\t' << s.sigma << '\t' << s.delta_bar << '\t'
                          << s.beta << '\t' << s.gamma << '\t' << s.sr << '\t' << s.sr_raw
                          << '\t' << (a ? a->entries.size() : 0) << "\n";
            }
        }
        return 0;
    }

    if (replay->parsed()) {
        auto policy = analytics::radius_policy_from_string(policy_name);
        if (!policy)
            throw std::runtime_error("unknown policy: " + policy_name);
        auto provider = load_provider(taxonomy_path, embeddings_path);
        auto history = analytics::HistoryLog::read_all(history_path);
        auto set = analytics::AbstractSet::load(fs::path(edge_state) / "abstracts.json");
        auto [cs, idx] = cloud::load(index_dir);
        std::vector<analytics::ClusterSummaryLite> summaries;
        for (const auto& c : cs.clusters)
            summaries.push_back({c.cluster_id, c.members.size()});
        analytics::MaintenanceOptions opts;
        opts.policy = *policy;
        auto report = analytics::maintain_abstracts(history, set, summaries, provider, opts);
        set.save(fs::path(edge_state) / "abstracts.json");
        std::cout << json{{"records", history.size()},
                          {"added", report.added},
                          {"replaced", report.replaced},
                          {"discarded", report.discarded},
                          {"clusters_skipped", report.clusters_skipped}}
                         .dump(2)
                  << "\n";
        return 0;
    }

    if (bench_synth->parsed()) {
        auto key = crypto::SecretKey::from_file(key_path);
        auto docs = corpus::load_corpus_dir(corpus_dir);
        auto [cs, idx] = cloud::load(index_dir);
        std::map<std::string, int> token_to_cluster;
        for (const auto& c : cs.clusters)
            for (const auto& m : c.members)
                token_to_cluster.emplace(m.hex(), c.cluster_id);
        auto queries = bench::synthesize_queries(docs, key, token_to_cluster, keywords_per_doc,
                                                 per_query, seed);
        std::ofstream file_out;
        std::ostream* out = &std::cout;
        if (out_path != "-") {
            file_out.open(out_path);
            out = &file_out;
        }
        for (const auto& q : queries)
            *out << bench::to_json_line(q) << "\n";
        std::cerr << "synthesized " << queries.size() << " queries\n";
        return 0;
    }

    if (bench_split->parsed()) {
        std::ifstream in(split_in);
        if (!in)
            throw std::runtime_error("cannot read " + split_in);
        std::vector<bench::BenchmarkQuery> queries;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty())
                queries.push_back(bench::benchmark_query_from_json(line));
        auto [train, test] = bench::split_benchmark(std::move(queries), train_fraction, seed);
        std::ofstream t(train_out), e(test_out);
        for (const auto& q : train)
            t << bench::to_json_line(q) << "\n";
        for (const auto& q : test)
            e << bench::to_json_line(q) << "\n";
        std::cout << "train=" << train.size() << " test=" << test.size() << "\n";
        return 0;
    }

    if (bench_run->parsed()) {
        auto policy = analytics::radius_policy_from_string(policy_name);
        if (!policy)
            throw std::runtime_error("unknown policy: " + policy_name);
        bench::BenchConfig config;
        config.corpus_dir = corpus_dir;
        config.key = crypto::SecretKey::from_file(key_path);
        config.provider = load_provider(taxonomy_path, embeddings_path);
        config.policy = *policy;
        config.seed = seed;
        config.cluster_k = cluster_k;
        config.prune_k = prune_k;
        config.maintenance_every = maintenance_every;
        if (transport_name == "http")
            config.transport = bench::Transport::http;
        else if (transport_name != "local")
            throw std::runtime_error("--transport must be local or http");
        if (!wire_log.empty())
            config.wire_log = wire_log;
        if (!artifacts_dir.empty())
            config.artifacts_dir = artifacts_dir;
        auto report = bench::run_benchmark(config);
        std::cout << report.to_json_string() << "\n";
        if (!csv_path.empty())
            bench::append_csv_row(csv_path, report);
        return 0;
    }

    return 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
