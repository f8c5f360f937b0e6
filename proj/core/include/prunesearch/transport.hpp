#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "prunesearch/cloud_index.hpp"
#include "prunesearch/edge.hpp"

namespace prunesearch::transport {

inline constexpr std::string_view kWireVersion = "1";
inline constexpr std::size_t kMaxBodyBytes = 64ull * 1024 * 1024;

// Append-only capture of cloud-bound requests, one JSON line per request.
// Tests scan it to prove no plaintext term ever leaves the edge.
class WireLog {
  public:
    explicit WireLog(std::filesystem::path path);
    void record(std::string_view method, std::string_view path, std::string_view body);
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

// HTTP face of a CloudStore:
//   POST /v1/upload    UploadBatch JSON-lines body
//   POST /v1/search    envelope {tokens:[hex], clusters:[id]}
//   GET  /v1/clusters  cluster metadata (ids, sizes, per-token doc counts)
class CloudServer {
  public:
    explicit CloudServer(cloud::CloudStore& store);
    ~CloudServer();

    // port 0 picks a free port; blocks until the server accepts connections
    void start(const std::string& host, int port = 0);
    void stop();
    int port() const { return port_; }
    std::string base_url() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    cloud::CloudStore& store_;
    std::string host_;
    int port_ = 0;
};

// Typed client for the cloud endpoints; doubles as the edge's backend.
class CloudClient final : public edge::CloudBackend {
  public:
    explicit CloudClient(std::string base_url,
                         std::chrono::seconds timeout = std::chrono::seconds(10),
                         WireLog* wire_log = nullptr);

    cloud::RankedResult search(std::span<const corpus::TermToken> tokens,
                               std::span<const int> cluster_ids) override;
    std::vector<cloud::ClusterSummary> cluster_info() override;
    void upload(const corpus::UploadBatch& batch) override; // no retry

  private:
    std::string base_url_;
    std::chrono::seconds timeout_;
    WireLog* wire_log_;
    std::uint64_t next_request_id_ = 1;
};

// HTTP face of an EdgeEngine: POST /v1/query {query, session_id}.
// Requires the cloud to answer a health probe at startup.
class EdgeServer {
  public:
    EdgeServer(edge::EdgeEngine& engine, edge::CloudBackend& cloud_probe);
    ~EdgeServer();

    void start(const std::string& host, int port = 0);
    void stop();
    int port() const { return port_; }
    std::string base_url() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    edge::EdgeEngine& engine_;
    edge::CloudBackend& cloud_probe_;
    std::string host_;
    int port_ = 0;
};

struct QueryResponse {
    cloud::RankedResult result;
    std::vector<int> chosen_clusters;
    std::string result_json; // verbatim "result" object text from the wire
};

class EdgeClient {
  public:
    explicit EdgeClient(std::string base_url,
                        std::chrono::seconds timeout = std::chrono::seconds(10));

    QueryResponse query(std::string_view raw, std::string_view session_id);

  private:
    std::string base_url_;
    std::chrono::seconds timeout_;
    std::uint64_t next_request_id_ = 1;
};

} // namespace prunesearch::transport
