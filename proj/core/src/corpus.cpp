#include "prunesearch/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "prunesearch/text.hpp"

using json = nlohmann::json;

namespace prunesearch::corpus {

TermToken TermToken::from_hex(std::string_view hex) {
    auto bytes = crypto::from_hex(hex);
    if (bytes.size() != 32)
        throw CryptoError("token hex must decode to 32 bytes");
    TermToken t;
    std::copy(bytes.begin(), bytes.end(), t.bytes.begin());
    return t;
}

TermToken tokenize_term(std::string_view term, const crypto::SecretKey& key) {
    if (term.empty())
        throw QueryError("empty term");
    TermToken t;
    t.bytes = crypto::hmac_sha256(
        key.token_key(), {reinterpret_cast<const std::uint8_t*>(term.data()), term.size()});
    return t;
}

std::map<std::string, std::string> SeedMap::token_hex_to_term() const {
    std::map<std::string, std::string> out;
    for (auto& [term, token] : term_to_token)
        out.emplace(token.hex(), term);
    return out;
}

void SeedMap::save(const std::filesystem::path& path) const {
    json j = json::object();
    for (auto& [term, token] : term_to_token)
        j[term] = token.hex();
    std::ofstream out(path);
    if (!out)
        throw PersistError("cannot write seed map: " + path.string());
    out << j.dump(2) << "\n";
}

SeedMap SeedMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PersistError("cannot read seed map: " + path.string());
    json j = json::parse(in);
    SeedMap m;
    for (auto& [term, hex] : j.items())
        m.term_to_token.emplace(term, TermToken::from_hex(hex.get<std::string>()));
    return m;
}

std::vector<KeywordRecord> extract_keywords(const Document& doc, std::size_t k) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (auto& term : text::pipeline(doc.text))
        counts[term]++;

    std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > k) ranked.resize(k);

    std::vector<KeywordRecord> out;
    out.reserve(ranked.size());
    for (auto& [term, freq] : ranked)
        out.push_back(KeywordRecord{term, freq, {doc.doc_id}});
    return out;
}

std::pair<std::string, crypto::Bytes> encrypt_document(const Document& doc,
                                                       crypto::CipherProvider& cipher) {
    std::span<const std::uint8_t> plain{reinterpret_cast<const std::uint8_t*>(doc.text.data()),
                                        doc.text.size()};
    return {doc.doc_id, cipher.encrypt(plain)};
}

UploadBatch build_upload(std::span<const Document> docs, std::size_t k_per_doc,
                         const crypto::SecretKey& key, crypto::CipherProvider& cipher,
                         SeedMap* seed_out) {
    UploadBatch batch;
    std::set<std::string> seen;
    for (const auto& doc : docs) {
        if (!seen.insert(doc.doc_id).second)
            throw std::invalid_argument("duplicate doc_id: " + doc.doc_id);
        batch.encrypted_docs.push_back(encrypt_document(doc, cipher));
        for (auto& kw : extract_keywords(doc, k_per_doc)) {
            TermToken token = tokenize_term(kw.term, key);
            batch.postings[token].insert(doc.doc_id);
            if (seed_out)
                seed_out->term_to_token.emplace(kw.term, token);
        }
    }
    return batch;
}

std::vector<Document> load_corpus_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw PersistError("corpus dir not found: " + dir.string());
    std::vector<Document> docs;
    for (auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt")
            continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        docs.push_back(Document{entry.path().stem().string(), std::move(body),
                                entry.path().string()});
    }
    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    return docs;
}

std::string serialize_jsonl(const UploadBatch& batch) {
    std::ostringstream out;
    for (auto& [doc_id, ciphertext] : batch.encrypted_docs) {
        json j{{"type", "doc"}, {"doc_id", doc_id}, {"ciphertext", crypto::to_hex(ciphertext)}};
        out << j.dump() << "\n";
    }
    for (auto& [token, doc_ids] : batch.postings) {
        json j{{"type", "posting"}, {"token", token.hex()}, {"doc_ids", doc_ids}};
        out << j.dump() << "\n";
    }
    return out.str();
}

UploadBatch parse_upload_jsonl(std::string_view body) {
    UploadBatch batch;
    std::istringstream in{std::string(body)};
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        json j = json::parse(line); // nlohmann throws on malformed input
        const std::string type = j.at("type").get<std::string>();
        if (type == "doc") {
            batch.encrypted_docs.emplace_back(j.at("doc_id").get<std::string>(),
                                              crypto::from_hex(j.at("ciphertext").get<std::string>()));
        } else if (type == "posting") {
            TermToken token = TermToken::from_hex(j.at("token").get<std::string>());
            auto& ids = batch.postings[token];
            for (auto& d : j.at("doc_ids"))
                ids.insert(d.get<std::string>());
        } else {
            throw PersistError("line " + std::to_string(line_no) + ": unknown record type '" +
                               type + "'");
        }
    }
    return batch;
}

} // namespace prunesearch::corpus
