#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace prunesearch::analytics {

struct SearchRecord {
    std::string session_id;
    std::int64_t timestamp_ms = 0;
    std::string raw_query;
    std::vector<std::string> terms; // original (unexpanded) plaintext terms
    std::vector<int> hit_clusters;
    std::uint64_t result_count = 0;
};

std::string to_json_line(const SearchRecord& r);
SearchRecord search_record_from_json(std::string_view line);

// Append-only JSON-lines log; append is thread-safe.
class HistoryLog {
  public:
    explicit HistoryLog(std::filesystem::path path);

    void append(const SearchRecord& r);
    static std::vector<SearchRecord> read_all(const std::filesystem::path& path);
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

} // namespace prunesearch::analytics
