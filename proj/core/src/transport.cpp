#include "prunesearch/transport.hpp"

#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prunesearch/log.hpp"

using json = nlohmann::json;

namespace prunesearch::transport {

namespace {

json envelope(std::string_view kind, std::string_view request_id, json payload) {
    return json{{"version", kWireVersion},
                {"kind", kind},
                {"request_id", request_id},
                {"payload", std::move(payload)}};
}

std::string error_body(std::string_view request_id, std::string_view message) {
    return envelope("error", request_id, json{{"message", message}}).dump();
}

void reply_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

// parses the request envelope, enforcing version and kind
struct ParsedEnvelope {
    std::string request_id;
    json payload;
};

ParsedEnvelope parse_envelope(const std::string& body, std::string_view expected_kind) {
    json j = json::parse(body);
    std::string request_id = j.value("request_id", "");
    if (j.value("version", "") != kWireVersion)
        throw QueryError("unsupported wire version");
    if (j.value("kind", "") != expected_kind)
        throw QueryError("unexpected kind '" + j.value("kind", "") + "', want '" +
                         std::string(expected_kind) + "'");
    return {std::move(request_id), j.at("payload")};
}

json summaries_to_json(const std::vector<cloud::ClusterSummary>& summaries) {
    json clusters = json::array();
    for (const auto& s : summaries) {
        json members = json::array();
        for (const auto& m : s.members)
            members.push_back(json{{"token", m.token.hex()}, {"doc_count", m.doc_count}});
        clusters.push_back(json{{"cluster_id", s.cluster_id},
                                {"centroid", s.centroid.hex()},
                                {"size", s.members.size()},
                                {"members", std::move(members)}});
    }
    return json{{"clusters", std::move(clusters)}};
}

std::vector<cloud::ClusterSummary> summaries_from_json(const json& payload) {
    std::vector<cloud::ClusterSummary> out;
    for (const auto& c : payload.at("clusters")) {
        cloud::ClusterSummary s;
        s.cluster_id = c.at("cluster_id").get<int>();
        s.centroid = corpus::TermToken::from_hex(c.at("centroid").get<std::string>());
        for (const auto& m : c.at("members"))
            s.members.push_back({corpus::TermToken::from_hex(m.at("token").get<std::string>()),
                                 m.at("doc_count").get<std::size_t>()});
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

WireLog::WireLog(std::filesystem::path path) : path_(std::move(path)) {}

void WireLog::record(std::string_view method, std::string_view path, std::string_view body) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out)
        throw PersistError("cannot append to wire log: " + path_.string());
    out << json{{"method", method}, {"path", path}, {"body", body}}.dump() << "\n";
}

// ---------------------------------------------------------------------------
// CloudServer

struct CloudServer::Impl {
    httplib::Server server;
    std::thread thread;
};

CloudServer::CloudServer(cloud::CloudStore& store)
    : impl_(std::make_unique<Impl>()), store_(store) {}

CloudServer::~CloudServer() { stop(); }

std::string CloudServer::base_url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

void CloudServer::start(const std::string& host, int port) {
    auto& server = impl_->server;
    server.set_payload_max_length(kMaxBodyBytes);

    server.Post("/v1/upload", [this](const httplib::Request& req, httplib::Response& res) {
        std::string request_id = req.get_header_value("x-request-id");
        try {
            auto batch = corpus::parse_upload_jsonl(req.body);
            store_.upload(batch);
            reply_json(res, 200,
                       envelope("upload_result", request_id,
                                json{{"docs", batch.encrypted_docs.size()},
                                     {"postings", batch.postings.size()}})
                           .dump());
        } catch (const std::invalid_argument& e) {
            reply_json(res, 409, error_body(request_id, e.what()));
        } catch (const std::exception& e) {
            reply_json(res, 400, error_body(request_id, e.what()));
        }
    });

    server.Post("/v1/search", [this](const httplib::Request& req, httplib::Response& res) {
        std::string request_id;
        try {
            auto env = parse_envelope(req.body, "search");
            request_id = env.request_id;
            if (env.payload.contains("terms"))
                throw QueryError("plaintext 'terms' not accepted; send tokens");
            std::vector<corpus::TermToken> tokens;
            for (const auto& t : env.payload.at("tokens"))
                tokens.push_back(corpus::TermToken::from_hex(t.get<std::string>()));
            std::vector<int> clusters = env.payload.at("clusters").get<std::vector<int>>();
            auto result = store_.search(tokens, clusters);
            json payload{{"result", json::parse(cloud::to_json_string(result))}};
            reply_json(res, 200, envelope("search_result", request_id, payload).dump());
        } catch (const std::out_of_range& e) {
            reply_json(res, 404, error_body(request_id, e.what()));
        } catch (const std::exception& e) {
            reply_json(res, 400, error_body(request_id, e.what()));
        }
    });

    server.Get("/v1/clusters", [this](const httplib::Request& req, httplib::Response& res) {
        std::string request_id = req.get_header_value("x-request-id");
        try {
            reply_json(res, 200,
                       envelope("cluster_info", request_id, summaries_to_json(store_.summaries()))
                           .dump());
        } catch (const std::exception& e) {
            reply_json(res, 500, error_body(request_id, e.what()));
        }
    });

    host_ = host;
    if (port == 0) {
        port_ = server.bind_to_any_port(host);
        if (port_ <= 0)
            throw TransportError(TransportError::Kind::connect, "cannot bind " + host);
    } else {
        if (!server.bind_to_port(host, port))
            throw TransportError(TransportError::Kind::connect,
                                 "cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    log::info("cloud server listening on " + base_url());
}

void CloudServer::stop() {
    if (impl_ && impl_->server.is_running())
        impl_->server.stop();
    if (impl_ && impl_->thread.joinable())
        impl_->thread.join();
}

// ---------------------------------------------------------------------------
// CloudClient

namespace {

httplib::Client make_client(const std::string& base_url, std::chrono::seconds timeout) {
    httplib::Client client(base_url);
    client.set_connection_timeout(timeout.count(), 0);
    client.set_read_timeout(timeout.count(), 0);
    client.set_write_timeout(timeout.count(), 0);
    return client;
}

[[noreturn]] void throw_transport(const httplib::Result& result, const std::string& what) {
    auto err = result.error();
    auto kind = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                        err == httplib::Error::Write
                    ? TransportError::Kind::timeout
                    : TransportError::Kind::connect;
    throw TransportError(kind, what + ": " + httplib::to_string(err));
}

json expect_kind(const std::string& body, std::string_view kind) {
    json j = json::parse(body);
    if (j.value("kind", "") == "error")
        throw TransportError(TransportError::Kind::status,
                             j.at("payload").value("message", "remote error"));
    if (j.value("kind", "") != kind)
        throw TransportError(TransportError::Kind::protocol,
                             "unexpected response kind: " + j.value("kind", ""));
    return j.at("payload");
}

} // namespace

CloudClient::CloudClient(std::string base_url, std::chrono::seconds timeout, WireLog* wire_log)
    : base_url_(std::move(base_url)), timeout_(timeout), wire_log_(wire_log) {}

cloud::RankedResult CloudClient::search(std::span<const corpus::TermToken> tokens,
                                        std::span<const int> cluster_ids) {
    json token_array = json::array();
    for (const auto& t : tokens)
        token_array.push_back(t.hex());
    json body = envelope("search", "c" + std::to_string(next_request_id_++),
                         json{{"tokens", std::move(token_array)},
                              {"clusters", std::vector<int>(cluster_ids.begin(), cluster_ids.end())}});
    std::string text = body.dump();
    if (wire_log_)
        wire_log_->record("POST", "/v1/search", text);

    auto client = make_client(base_url_, timeout_);
    auto result = client.Post("/v1/search", text, "application/json");
    if (!result)
        throw_transport(result, "search");
    if (result->status != 200) {
        json j = json::parse(result->body, nullptr, false);
        std::string msg = j.is_object() && j.contains("payload")
                              ? j["payload"].value("message", result->body)
                              : result->body;
        throw TransportError(TransportError::Kind::status,
                             "search failed (" + std::to_string(result->status) + "): " + msg);
    }
    auto payload = expect_kind(result->body, "search_result");
    return cloud::ranked_result_from_json(payload.at("result").dump());
}

std::vector<cloud::ClusterSummary> CloudClient::cluster_info() {
    auto client = make_client(base_url_, timeout_);
    if (wire_log_)
        wire_log_->record("GET", "/v1/clusters", "");
    auto result = client.Get("/v1/clusters");
    if (!result)
        throw_transport(result, "cluster_info");
    if (result->status != 200)
        throw TransportError(TransportError::Kind::status,
                             "cluster_info failed (" + std::to_string(result->status) + ")");
    return summaries_from_json(expect_kind(result->body, "cluster_info"));
}

void CloudClient::upload(const corpus::UploadBatch& batch) {
    std::string body = corpus::serialize_jsonl(batch);
    if (body.size() > kMaxBodyBytes)
        throw TransportError(TransportError::Kind::oversized,
                             "upload body exceeds 64 MiB (" + std::to_string(body.size()) +
                                 " bytes)");
    if (wire_log_)
        wire_log_->record("POST", "/v1/upload", body);
    auto client = make_client(base_url_, timeout_);
    httplib::Headers headers{{"x-request-id", "u" + std::to_string(next_request_id_++)}};
    auto result = client.Post("/v1/upload", headers, body, "application/jsonl");
    if (!result)
        throw_transport(result, "upload");
    if (result->status != 200) {
        json j = json::parse(result->body, nullptr, false);
        std::string msg = j.is_object() && j.contains("payload")
                              ? j["payload"].value("message", result->body)
                              : result->body;
        throw TransportError(TransportError::Kind::status,
                             "upload failed (" + std::to_string(result->status) + "): " + msg);
    }
}

// ---------------------------------------------------------------------------
// EdgeServer

struct EdgeServer::Impl {
    httplib::Server server;
    std::thread thread;
};

EdgeServer::EdgeServer(edge::EdgeEngine& engine, edge::CloudBackend& cloud_probe)
    : impl_(std::make_unique<Impl>()), engine_(engine), cloud_probe_(cloud_probe) {}

EdgeServer::~EdgeServer() { stop(); }

std::string EdgeServer::base_url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

void EdgeServer::start(const std::string& host, int port) {
    // startup health check: the edge refuses to serve without its cloud
    try {
        cloud_probe_.cluster_info();
    } catch (const std::exception& e) {
        throw TransportError(TransportError::Kind::connect,
                             std::string("cloud unreachable at startup: ") + e.what());
    }

    auto& server = impl_->server;
    server.Post("/v1/query", [this](const httplib::Request& req, httplib::Response& res) {
        std::string request_id;
        try {
            auto env = parse_envelope(req.body, "query");
            request_id = env.request_id;
            std::string query = env.payload.at("query").get<std::string>();
            std::string session = env.payload.value("session_id", "default");
            auto outcome = engine_.execute_search(query, session);
            json payload{{"result", json::parse(cloud::to_json_string(outcome.result))},
                         {"chosen_clusters", outcome.chosen_clusters}};
            reply_json(res, 200, envelope("search_result", request_id, payload).dump());
        } catch (const TransportError& e) {
            reply_json(res, 502, error_body(request_id, e.what()));
        } catch (const QueryError& e) {
            reply_json(res, 400, error_body(request_id, e.what()));
        } catch (const std::exception& e) {
            reply_json(res, 400, error_body(request_id, e.what()));
        }
    });

    server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200, json{{"status", "ok"}}.dump());
    });

    host_ = host;
    if (port == 0) {
        port_ = server.bind_to_any_port(host);
        if (port_ <= 0)
            throw TransportError(TransportError::Kind::connect, "cannot bind " + host);
    } else {
        if (!server.bind_to_port(host, port))
            throw TransportError(TransportError::Kind::connect,
                                 "cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    log::info("edge server listening on " + base_url());
}

void EdgeServer::stop() {
    if (impl_ && impl_->server.is_running())
        impl_->server.stop();
    if (impl_ && impl_->thread.joinable())
        impl_->thread.join();
}

// ---------------------------------------------------------------------------
// EdgeClient

EdgeClient::EdgeClient(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {}

QueryResponse EdgeClient::query(std::string_view raw, std::string_view session_id) {
    json body = envelope("query", "e" + std::to_string(next_request_id_++),
                         json{{"query", raw}, {"session_id", session_id}});
    auto client = make_client(base_url_, timeout_);
    auto result = client.Post("/v1/query", body.dump(), "application/json");
    if (!result)
        throw_transport(result, "query");
    if (result->status != 200) {
        json j = json::parse(result->body, nullptr, false);
        std::string msg = j.is_object() && j.contains("payload")
                              ? j["payload"].value("message", result->body)
                              : result->body;
        throw TransportError(TransportError::Kind::status,
                             "query failed (" + std::to_string(result->status) + "): " + msg);
    }
    auto payload = expect_kind(result->body, "search_result");
    QueryResponse out;
    out.result_json = payload.at("result").dump();
    out.result = cloud::ranked_result_from_json(out.result_json);
    out.chosen_clusters = payload.at("chosen_clusters").get<std::vector<int>>();
    return out;
}

} // namespace prunesearch::transport
