#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prunesearch/crypto.hpp"

namespace prunesearch::corpus {

struct Document {
    std::string doc_id;
    std::string text;
    std::string source_path;
};

struct KeywordRecord {
    std::string term; // lowercase, stemmed
    std::uint64_t frequency = 0;
    std::set<std::string> doc_ids;
};

// Deterministic keyed-PRF image of a term; the only term form the cloud sees.
struct TermToken {
    crypto::Key256 bytes{};

    std::string hex() const { return crypto::to_hex(bytes); }
    static TermToken from_hex(std::string_view hex);

    auto operator<=>(const TermToken&) const = default;
};

// throws QueryError on empty term
TermToken tokenize_term(std::string_view term, const crypto::SecretKey& key);

struct UploadBatch {
    std::vector<std::pair<std::string, crypto::Bytes>> encrypted_docs;
    std::map<TermToken, std::set<std::string>> postings;

    bool empty() const { return encrypted_docs.empty() && postings.empty(); }
};

// Plaintext term -> token map kept on the trusted tier. Built during upload,
// consumed when abstracts are seeded.
struct SeedMap {
    std::map<std::string, TermToken> term_to_token;

    std::map<std::string, std::string> token_hex_to_term() const;
    void save(const std::filesystem::path& path) const;
    static SeedMap load(const std::filesystem::path& path);
};

// Top-k terms of one document by frequency (desc), ties lexicographic.
// Stop words removed and terms stemmed first. Empty result is not an error.
std::vector<KeywordRecord> extract_keywords(const Document& doc, std::size_t k);

std::pair<std::string, crypto::Bytes> encrypt_document(const Document& doc,
                                                       crypto::CipherProvider& cipher);

// Extracts keywords from every document, tokenizes them and encrypts the
// bodies. Throws std::invalid_argument naming the duplicate on repeated
// doc ids. `seed_out`, when given, collects the plaintext->token map.
UploadBatch build_upload(std::span<const Document> docs, std::size_t k_per_doc,
                         const crypto::SecretKey& key, crypto::CipherProvider& cipher,
                         SeedMap* seed_out = nullptr);

// Directory of .txt files; filename sans extension is the doc id.
std::vector<Document> load_corpus_dir(const std::filesystem::path& dir);

// JSON-lines: {"type":"doc",...} / {"type":"posting",...}
std::string serialize_jsonl(const UploadBatch& batch);
UploadBatch parse_upload_jsonl(std::string_view body);

} // namespace prunesearch::corpus
