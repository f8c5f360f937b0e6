#include "prunesearch/history.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "prunesearch/errors.hpp"

using json = nlohmann::json;

namespace prunesearch::analytics {

std::string to_json_line(const SearchRecord& r) {
    return json{{"session_id", r.session_id},
                {"timestamp_ms", r.timestamp_ms},
                {"raw_query", r.raw_query},
                {"terms", r.terms},
                {"hit_clusters", r.hit_clusters},
                {"result_count", r.result_count}}
        .dump();
}

SearchRecord search_record_from_json(std::string_view line) {
    json j = json::parse(line);
    SearchRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    r.raw_query = j.at("raw_query").get<std::string>();
    r.terms = j.at("terms").get<std::vector<std::string>>();
    r.hit_clusters = j.at("hit_clusters").get<std::vector<int>>();
    r.result_count = j.at("result_count").get<std::uint64_t>();
    return r;
}

HistoryLog::HistoryLog(std::filesystem::path path) : path_(std::move(path)) {}

void HistoryLog::append(const SearchRecord& r) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out)
        throw PersistError("cannot append to history log: " + path_.string());
    out << to_json_line(r) << "\n";
}

std::vector<SearchRecord> HistoryLog::read_all(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PersistError("cannot read history log: " + path.string());
    std::vector<SearchRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty())
            out.push_back(search_record_from_json(line));
    }
    return out;
}

} // namespace prunesearch::analytics
