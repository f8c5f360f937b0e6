#include "prunesearch/cloud_index.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prunesearch/log.hpp"

using json = nlohmann::json;

namespace prunesearch::cloud {

namespace {
constexpr int kIndexVersion = 1;
constexpr const char* kIndexMagic = "prunesearch-index";

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    std::size_t n = 0;
    for (const auto& x : small)
        n += large.count(x);
    return n;
}
} // namespace

void EncryptedIndex::apply(const UploadBatch& batch) {
    for (auto& [doc_id, _] : batch.encrypted_docs)
        if (doc_store.count(doc_id))
            throw std::invalid_argument("duplicate doc_id: " + doc_id);
    // posting doc ids must resolve against stored docs (this batch or earlier)
    std::set<std::string> incoming;
    for (auto& [doc_id, _] : batch.encrypted_docs)
        incoming.insert(doc_id);
    for (auto& [token, doc_ids] : batch.postings) {
        (void)token;
        for (auto& doc_id : doc_ids)
            if (!incoming.count(doc_id) && !doc_store.count(doc_id))
                throw std::invalid_argument("posting references unknown doc_id: " + doc_id);
    }
    for (auto& [doc_id, ciphertext] : batch.encrypted_docs)
        doc_store.emplace(doc_id, ciphertext);
    for (auto& [token, doc_ids] : batch.postings)
        postings[token].insert(doc_ids.begin(), doc_ids.end());
}

std::optional<int> ClusterSet::cluster_of(const TermToken& token) const {
    for (const auto& c : clusters)
        if (c.members.count(token))
            return c.cluster_id;
    return std::nullopt;
}

std::string to_json_string(const RankedResult& r) {
    json entries = json::array();
    for (const auto& e : r.entries)
        entries.push_back(json{{"doc_id", e.doc_id}, {"score", e.score}});
    return json{{"entries", entries}}.dump();
}

RankedResult ranked_result_from_json(std::string_view body) {
    json j = json::parse(body);
    RankedResult r;
    for (auto& e : j.at("entries"))
        r.entries.push_back({e.at("doc_id").get<std::string>(), e.at("score").get<double>()});
    return r;
}

std::size_t semantic_relatedness(const TermToken& t1, const TermToken& t2,
                                 const EncryptedIndex& idx) {
    auto i1 = idx.postings.find(t1);
    if (i1 == idx.postings.end())
        throw std::invalid_argument("unknown token: " + t1.hex());
    auto i2 = idx.postings.find(t2);
    if (i2 == idx.postings.end())
        throw std::invalid_argument("unknown token: " + t2.hex());
    return intersection_size(i1->second, i2->second);
}

std::vector<TermToken> select_centroids(const EncryptedIndex& idx, std::size_t k) {
    if (k == 0)
        throw std::invalid_argument("k must be >= 1");
    if (k > idx.postings.size())
        throw std::invalid_argument("k exceeds token count (" +
                                    std::to_string(idx.postings.size()) + ")");

    // tokens per document, to find docs where a token stands alone
    std::map<std::string, std::size_t> doc_token_counts;
    for (auto& [token, doc_ids] : idx.postings)
        for (auto& d : doc_ids)
            doc_token_counts[d]++;

    struct Candidate {
        TermToken token;
        long long margin; // unique - shared
        bool eligible;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(idx.postings.size());
    for (auto& [token, doc_ids] : idx.postings) {
        long long unique = 0;
        for (auto& d : doc_ids)
            if (doc_token_counts[d] == 1)
                unique++;
        long long shared = static_cast<long long>(doc_ids.size()) - unique;
        candidates.push_back({token, unique - shared, unique > shared});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.eligible != b.eligible) return a.eligible;
        if (a.margin != b.margin) return a.margin > b.margin;
        return a.token < b.token; // comparing bytes == comparing hex
    });

    std::vector<TermToken> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; i++)
        out.push_back(candidates[i].token);
    return out;
}

ClusterSet cluster_terms(const EncryptedIndex& idx, std::span<const TermToken> centroids) {
    if (centroids.empty())
        throw std::invalid_argument("no centroids");
    std::set<TermToken> distinct(centroids.begin(), centroids.end());
    if (distinct.size() != centroids.size())
        throw std::invalid_argument("centroids must be distinct");

    ClusterSet cs;
    cs.clusters.resize(centroids.size());
    for (std::size_t i = 0; i < centroids.size(); i++) {
        cs.clusters[i].cluster_id = static_cast<int>(i);
        cs.clusters[i].centroid = centroids[i];
        cs.clusters[i].members.insert(centroids[i]);
    }

    for (auto& [token, _] : idx.postings) {
        if (distinct.count(token))
            continue;
        std::size_t best = 0, best_rel = 0;
        for (std::size_t i = 0; i < centroids.size(); i++) {
            std::size_t rel = semantic_relatedness(token, centroids[i], idx);
            if (rel > best_rel) { // strict: ties keep the lowest id
                best_rel = rel;
                best = i;
            }
        }
        if (best_rel == 0)
            cs.orphan_count++;
        cs.clusters[best].members.insert(token);
    }
    if (cs.orphan_count > 0)
        log::info("cluster_terms: " + std::to_string(cs.orphan_count) +
                  " orphan tokens assigned to cluster 0");
    return cs;
}

ClusterSet kmeans_refine(const EncryptedIndex& idx, ClusterSet cs, int iters) {
    for (int round = 0; round < iters; round++) {
        std::vector<TermToken> centroids;
        centroids.reserve(cs.clusters.size());
        for (const auto& c : cs.clusters) {
            // member with maximum summed intra-cluster relatedness
            TermToken best = c.centroid;
            long long best_sum = -1;
            for (const auto& m : c.members) {
                long long sum = 0;
                for (const auto& other : c.members)
                    if (!(other == m))
                        sum += static_cast<long long>(semantic_relatedness(m, other, idx));
                if (sum > best_sum || (sum == best_sum && m < best)) {
                    best_sum = sum;
                    best = m;
                }
            }
            centroids.push_back(best);
        }
        // distinct-ness can collapse if two clusters elect the same token;
        // keep the previous centroid for the later cluster
        std::set<TermToken> seen;
        for (std::size_t i = 0; i < centroids.size(); i++)
            if (!seen.insert(centroids[i]).second)
                centroids[i] = cs.clusters[i].centroid;
        ClusterSet next = cluster_terms(idx, centroids);
        bool changed = false;
        for (std::size_t i = 0; i < next.clusters.size(); i++)
            if (next.clusters[i].members != cs.clusters[i].members)
                changed = true;
        cs = std::move(next);
        if (!changed)
            break;
    }
    return cs;
}

RankedResult search_clusters(std::span<const TermToken> query_tokens,
                             std::span<const int> cluster_ids, const ClusterSet& cs,
                             const EncryptedIndex& idx) {
    if (query_tokens.empty())
        throw QueryError("empty query");

    std::set<TermToken> searchable;
    for (int id : cluster_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= cs.clusters.size())
            throw std::out_of_range("unknown cluster id: " + std::to_string(id));
        const auto& members = cs.clusters[static_cast<std::size_t>(id)].members;
        searchable.insert(members.begin(), members.end());
    }

    // dedupe, then accumulate in sorted token order so float sums are
    // reproducible
    std::set<TermToken> distinct(query_tokens.begin(), query_tokens.end());
    std::map<std::string, double> scores;
    for (const auto& token : distinct) {
        if (!searchable.count(token))
            continue;
        auto it = idx.postings.find(token);
        if (it == idx.postings.end() || it->second.empty())
            continue;
        double w = 1.0 / static_cast<double>(it->second.size());
        for (const auto& doc_id : it->second)
            scores[doc_id] += w;
    }

    RankedResult r;
    r.entries.reserve(scores.size());
    for (auto& [doc_id, score] : scores)
        r.entries.push_back({doc_id, score});
    std::stable_sort(r.entries.begin(), r.entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.doc_id < b.doc_id;
                     });
    return r;
}

namespace {
std::string doc_blob_name(const std::string& doc_id) {
    return crypto::to_hex({reinterpret_cast<const std::uint8_t*>(doc_id.data()), doc_id.size()}) +
           ".bin";
}
} // namespace

void persist(const ClusterSet& cs, const EncryptedIndex& idx, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "docs");

    {
        json meta{{"magic", kIndexMagic},
                  {"version", kIndexVersion},
                  {"k", cs.clusters.size()},
                  {"doc_count", idx.doc_store.size()},
                  {"token_count", idx.postings.size()},
                  {"orphan_count", cs.orphan_count}};
        std::ofstream out(dir / "meta.json");
        if (!out)
            throw PersistError("cannot write " + (dir / "meta.json").string());
        out << meta.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "postings.jsonl");
        for (auto& [token, doc_ids] : idx.postings)
            out << json{{"token", token.hex()}, {"doc_ids", doc_ids}}.dump() << "\n";
    }
    {
        std::ofstream out(dir / "clusters.jsonl");
        for (auto& c : cs.clusters) {
            json members = json::array();
            for (auto& m : c.members)
                members.push_back(m.hex());
            out << json{{"cluster_id", c.cluster_id},
                        {"centroid", c.centroid.hex()},
                        {"members", members}}
                       .dump()
                << "\n";
        }
    }
    for (auto& [doc_id, ciphertext] : idx.doc_store) {
        std::ofstream out(dir / "docs" / doc_blob_name(doc_id), std::ios::binary);
        out.write(reinterpret_cast<const char*>(ciphertext.data()),
                  static_cast<std::streamsize>(ciphertext.size()));
        if (!out)
            throw PersistError("cannot write doc blob for " + doc_id);
    }
}

std::pair<ClusterSet, EncryptedIndex> load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in)
        throw PersistError("cannot read " + (dir / "meta.json").string());
    json meta;
    try {
        meta = json::parse(meta_in);
    } catch (const json::exception& e) {
        throw PersistError("meta.json: " + std::string(e.what()));
    }
    if (meta.value("magic", "") != kIndexMagic)
        throw PersistError("bad magic header in " + (dir / "meta.json").string());
    if (meta.value("version", -1) != kIndexVersion)
        throw PersistError("unsupported index version " + meta.value("version", json{}).dump());

    EncryptedIndex idx;
    {
        std::ifstream in(dir / "postings.jsonl");
        if (!in)
            throw PersistError("cannot read " + (dir / "postings.jsonl").string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            auto& ids = idx.postings[TermToken::from_hex(j.at("token").get<std::string>())];
            for (auto& d : j.at("doc_ids"))
                ids.insert(d.get<std::string>());
        }
    }
    ClusterSet cs;
    cs.orphan_count = meta.value("orphan_count", 0u);
    {
        std::ifstream in(dir / "clusters.jsonl");
        if (!in)
            throw PersistError("cannot read " + (dir / "clusters.jsonl").string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            Cluster c;
            c.cluster_id = j.at("cluster_id").get<int>();
            c.centroid = TermToken::from_hex(j.at("centroid").get<std::string>());
            for (auto& m : j.at("members"))
                c.members.insert(TermToken::from_hex(m.get<std::string>()));
            cs.clusters.push_back(std::move(c));
        }
    }
    if (cs.clusters.size() != meta.at("k").get<std::size_t>())
        throw PersistError("clusters.jsonl truncated: expected " +
                           std::to_string(meta.at("k").get<std::size_t>()) + " clusters, got " +
                           std::to_string(cs.clusters.size()));
    std::sort(cs.clusters.begin(), cs.clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.cluster_id < b.cluster_id; });

    for (auto& [token, doc_ids] : idx.postings) {
        (void)token;
        for (auto& doc_id : doc_ids) {
            if (idx.doc_store.count(doc_id)) continue;
            std::ifstream in(dir / "docs" / doc_blob_name(doc_id), std::ios::binary);
            if (!in)
                throw PersistError("missing doc blob for " + doc_id);
            crypto::Bytes body((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
            idx.doc_store.emplace(doc_id, std::move(body));
        }
    }
    if (idx.doc_store.size() != meta.at("doc_count").get<std::size_t>()) {
        // docs without postings still live in docs/; sweep the directory
        for (auto& entry : fs::directory_iterator(dir / "docs")) {
            if (!entry.is_regular_file()) continue;
            auto hex = entry.path().stem().string();
            auto raw = crypto::from_hex(hex);
            std::string doc_id(raw.begin(), raw.end());
            if (idx.doc_store.count(doc_id)) continue;
            std::ifstream in(entry.path(), std::ios::binary);
            crypto::Bytes body((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
            idx.doc_store.emplace(std::move(doc_id), std::move(body));
        }
    }
    if (idx.postings.size() != meta.at("token_count").get<std::size_t>())
        throw PersistError("postings.jsonl truncated");
    if (idx.doc_store.size() != meta.at("doc_count").get<std::size_t>())
        throw PersistError("doc store incomplete");
    return {std::move(cs), std::move(idx)};
}

CloudStore::CloudStore(std::pair<ClusterSet, EncryptedIndex> state)
    : index_(std::move(state.second)), clusters_(std::move(state.first)) {}

void CloudStore::upload(const UploadBatch& batch) {
    std::unique_lock lock(mutex_);
    index_.apply(batch);
}

void CloudStore::recluster(std::size_t k, int kmeans_iters) {
    std::unique_lock lock(mutex_);
    auto centroids = select_centroids(index_, k);
    clusters_ = cluster_terms(index_, centroids);
    if (kmeans_iters > 0)
        clusters_ = kmeans_refine(index_, std::move(clusters_), kmeans_iters);
}

RankedResult CloudStore::search(std::span<const TermToken> tokens,
                                std::span<const int> cluster_ids) const {
    std::shared_lock lock(mutex_);
    return search_clusters(tokens, cluster_ids, clusters_, index_);
}

std::vector<ClusterSummary> CloudStore::summaries() const {
    std::shared_lock lock(mutex_);
    std::vector<ClusterSummary> out;
    out.reserve(clusters_.clusters.size());
    for (const auto& c : clusters_.clusters) {
        ClusterSummary s;
        s.cluster_id = c.cluster_id;
        s.centroid = c.centroid;
        for (const auto& m : c.members) {
            auto it = index_.postings.find(m);
            s.members.push_back({m, it == index_.postings.end() ? 0 : it->second.size()});
        }
        out.push_back(std::move(s));
    }
    return out;
}

void CloudStore::persist_to(const std::filesystem::path& dir) const {
    std::shared_lock lock(mutex_);
    persist(clusters_, index_, dir);
}

std::size_t CloudStore::doc_count() const {
    std::shared_lock lock(mutex_);
    return index_.doc_store.size();
}

std::size_t CloudStore::token_count() const {
    std::shared_lock lock(mutex_);
    return index_.postings.size();
}

std::size_t CloudStore::cluster_count() const {
    std::shared_lock lock(mutex_);
    return clusters_.clusters.size();
}

} // namespace prunesearch::cloud
