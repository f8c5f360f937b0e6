#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prunesearch/transport.hpp"

using namespace prunesearch;
using json = nlohmann::json;

namespace {

crypto::SecretKey test_key() {
    return crypto::SecretKey::from_hex(std::string(64, 'd'));
}

std::vector<corpus::Document> topic_corpus() {
    return {
        {"n0a", "router", ""},  {"n0b", "router", ""},        {"n0c", "router", ""},
        {"n0d", "router", ""},  {"n1", "router switch", ""},  {"n2", "router uplink", ""},
        {"n3", "router gateway", ""},
        {"m0a", "opera", ""},   {"m0b", "opera", ""},         {"m0c", "opera", ""},
        {"m1", "opera singer", ""},
        {"m2", "opera stage", ""},
    };
}

semantics::SimilarityProvider topic_provider() {
    std::vector<std::pair<std::string, std::string>> edges{
        {"root", "-"},         {"network", "root"},   {"router", "network"},
        {"switch", "network"}, {"uplink", "network"}, {"gateway", "network"},
        {"music", "root"},     {"opera", "music"},    {"singer", "music"},
        {"stage", "music"},
    };
    return semantics::SimilarityProvider::from_taxonomy(semantics::Taxonomy::from_edges(edges));
}

struct ServerFixture {
    crypto::SecretKey key = test_key();
    cloud::CloudStore store;
    corpus::SeedMap seeds;
    corpus::UploadBatch batch;
    transport::CloudServer server{store};

    ServerFixture() {
        auto cipher = crypto::make_aes_gcm_provider(key);
        batch = corpus::build_upload(topic_corpus(), 15, key, *cipher, &seeds);
        server.start("127.0.0.1");
    }
};

} // namespace

TEST_CASE("upload then search over the wire") {
    ServerFixture fx;
    transport::CloudClient client(fx.server.base_url());

    client.upload(fx.batch);
    fx.store.recluster(2);
    CHECK(fx.store.doc_count() == 12);

    auto summaries = client.cluster_info();
    CHECK(summaries.size() == 2);

    // remote result equals the in-process result byte for byte
    std::vector<corpus::TermToken> tokens{corpus::tokenize_term("router", fx.key),
                                          corpus::tokenize_term("switch", fx.key)};
    std::vector<int> clusters{0, 1};
    auto remote = client.search(tokens, clusters);
    auto local = fx.store.search(tokens, clusters);
    CHECK(cloud::to_json_string(remote) == cloud::to_json_string(local));
    REQUIRE(!remote.entries.empty());

    SUBCASE("uploaded doc is findable") {
        bool n1 = false;
        for (auto& e : remote.entries)
            if (e.doc_id == "n1")
                n1 = true;
        CHECK(n1);
    }
    SUBCASE("unknown cluster id maps to 404") {
        std::vector<int> bad{9};
        CHECK_THROWS_AS(client.search(tokens, bad), TransportError);
        try {
            client.search(tokens, bad);
        } catch (const TransportError& e) {
            CHECK(e.kind == TransportError::Kind::status);
            CHECK(std::string(e.what()).find("404") != std::string::npos);
        }
    }
    SUBCASE("duplicate upload is rejected") {
        CHECK_THROWS_AS(client.upload(fx.batch), TransportError);
    }
}

TEST_CASE("wire schema rules") {
    ServerFixture fx;
    transport::CloudClient client(fx.server.base_url());
    client.upload(fx.batch);
    fx.store.recluster(2);

    httplib::Client raw(fx.server.base_url());

    SUBCASE("plaintext 'terms' field is refused") {
        json body{{"version", "1"},
                  {"kind", "search"},
                  {"request_id", "t1"},
                  {"payload", {{"terms", {"router"}}, {"clusters", {0}}}}};
        auto res = raw.Post("/v1/search", body.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        auto parsed = json::parse(res->body);
        CHECK(parsed.at("kind") == "error");
        CHECK(parsed.at("request_id") == "t1");
    }
    SUBCASE("malformed json is a 400") {
        auto res = raw.Post("/v1/search", "{nope", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
    }
    SUBCASE("unknown kind is an error response and the connection survives") {
        json body{{"version", "1"}, {"kind", "mystery"}, {"request_id", "t2"},
                  {"payload", json::object()}};
        auto res = raw.Post("/v1/search", body.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        // same connection again
        auto res2 = raw.Get("/v1/clusters");
        REQUIRE(res2);
        CHECK(res2->status == 200);
    }
    SUBCASE("empty token list is refused") {
        json body{{"version", "1"}, {"kind", "search"}, {"request_id", "t3"},
                  {"payload", {{"tokens", json::array()}, {"clusters", {0}}}}};
        auto res = raw.Post("/v1/search", body.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
    }
}

TEST_CASE("client maps connection failures to typed errors") {
    transport::CloudClient client("http://127.0.0.1:1", std::chrono::seconds(1));
    CHECK_THROWS_AS(client.cluster_info(), TransportError);
}

TEST_CASE("oversized upload is rejected client side") {
    // never reaches the network: the serialized body crosses 64 MiB
    transport::CloudClient client("http://127.0.0.1:1", std::chrono::seconds(1));
    corpus::UploadBatch batch;
    batch.encrypted_docs.emplace_back("big", crypto::Bytes(34 * 1024 * 1024, 0x5a));
    try {
        client.upload(batch);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.kind == TransportError::Kind::oversized);
    }
}

TEST_CASE("wire log captures cloud-bound traffic without plaintext") {
    auto dir = std::filesystem::temp_directory_path() / "prunesearch_wire_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto log_path = dir / "wire.jsonl";

    ServerFixture fx;
    transport::WireLog wire(log_path);
    transport::CloudClient client(fx.server.base_url(), std::chrono::seconds(10), &wire);
    client.upload(fx.batch);
    fx.store.recluster(2);
    std::vector<corpus::TermToken> tokens{corpus::tokenize_term("gateway", fx.key)};
    std::vector<int> clusters{0, 1};
    client.search(tokens, clusters);

    std::ifstream in(log_path);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(!all.empty());
    for (auto kw : {"router", "switch", "uplink", "gateway", "singer"})
        CHECK_MESSAGE(all.find(kw) == std::string::npos, "leaked keyword: ", kw);
    std::filesystem::remove_all(dir);
}

TEST_CASE("edge server round trip equals in-process search") {
    ServerFixture fx;
    transport::CloudClient cloud_client(fx.server.base_url());
    cloud_client.upload(fx.batch);
    fx.store.recluster(2);

    edge::EdgeConfig config;
    config.key = fx.key;
    config.prune_k = 1;
    config.maintenance_every = 0;

    // served engine and reference engine share configuration and state
    transport::CloudClient backend_a(fx.server.base_url());
    edge::EdgeEngine served(config, topic_provider(), analytics::AbstractSet{}, backend_a);
    served.init_abstracts_from_cloud(fx.seeds.token_hex_to_term());

    transport::CloudClient backend_b(fx.server.base_url());
    edge::EdgeEngine reference(config, topic_provider(), analytics::AbstractSet{}, backend_b);
    reference.init_abstracts_from_cloud(fx.seeds.token_hex_to_term());

    transport::EdgeServer edge_server(served, backend_a);
    edge_server.start("127.0.0.1");
    transport::EdgeClient edge_client(edge_server.base_url());

    std::vector<std::string> queries{"router uplink", "opera stage", "switch", "singer opera"};
    for (const auto& q : queries) {
        auto remote = edge_client.query(q, "s1");
        auto local = reference.execute_search(q, "s1");
        CHECK(remote.result_json == cloud::to_json_string(local.result));
        CHECK(remote.chosen_clusters == local.chosen_clusters);
    }

    SUBCASE("malformed body is a 400") {
        httplib::Client raw(edge_server.base_url());
        auto res = raw.Post("/v1/query", "not json", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
    }
    SUBCASE("concurrent identical queries agree") {
        auto expected = edge_client.query("router switch", "w").result_json;
        std::vector<std::string> out(6);
        std::vector<std::thread> threads;
        for (int i = 0; i < 6; i++)
            threads.emplace_back([&, i] {
                transport::EdgeClient c(edge_server.base_url());
                out[static_cast<std::size_t>(i)] = c.query("router switch", "w").result_json;
            });
        for (auto& t : threads)
            t.join();
        for (auto& r : out)
            CHECK(r == expected);
    }
    SUBCASE("cloud down mid-request surfaces as 502") {
        fx.server.stop();
        try {
            edge_client.query("router", "s2");
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(std::string(e.what()).find("502") != std::string::npos);
        }
    }
    edge_server.stop();
}

TEST_CASE("edge server refuses to start without its cloud") {
    transport::CloudClient dead("http://127.0.0.1:1", std::chrono::seconds(1));
    edge::EdgeConfig config;
    config.key = test_key();
    edge::EdgeEngine engine(config, topic_provider(), analytics::AbstractSet{}, dead);
    transport::EdgeServer server(engine, dead);
    CHECK_THROWS_AS(server.start("127.0.0.1"), TransportError);
}
