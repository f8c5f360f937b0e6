#include "prunesearch/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "prunesearch/errors.hpp"

namespace prunesearch::semantics {

Taxonomy Taxonomy::from_edges(std::span<const std::pair<std::string, std::string>> edges) {
    Taxonomy t;
    for (auto& [child, parent] : edges) {
        if (child.empty())
            throw PersistError("taxonomy: empty term");
        t.nodes_.insert(child);
        if (parent == "-") continue;
        t.nodes_.insert(parent);
        auto [it, inserted] = t.parent_.emplace(child, parent);
        if (!inserted && it->second != parent)
            throw PersistError("taxonomy: '" + child + "' has two parents");
    }
    t.finalize();
    return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PersistError("cannot read taxonomy: " + path.string());
    std::vector<std::pair<std::string, std::string>> edges;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw PersistError("taxonomy line " + std::to_string(line_no) + ": missing tab");
        edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return from_edges(edges);
}

void Taxonomy::finalize() {
    for (const auto& node : nodes_) {
        // walk to the root, failing on cycles
        int d = 1;
        std::string_view cur = node;
        std::set<std::string_view> seen{cur};
        while (true) {
            auto it = parent_.find(cur);
            if (it == parent_.end()) break;
            cur = it->second;
            if (!seen.insert(cur).second)
                throw PersistError("taxonomy: cycle through '" + node + "'");
            d++;
        }
        depth_[node] = d;
    }
    std::set<std::string_view> parents;
    for (auto& [child, parent] : parent_)
        parents.insert(parent);
    for (const auto& node : nodes_)
        if (!parents.count(node))
            leaves_.push_back(node);
}

bool Taxonomy::contains(std::string_view term) const { return nodes_.count(std::string(term)) > 0; }

int Taxonomy::depth(std::string_view term) const {
    auto it = depth_.find(term);
    return it == depth_.end() ? 0 : it->second;
}

const std::string* Taxonomy::parent(std::string_view term) const {
    auto it = parent_.find(term);
    return it == parent_.end() ? nullptr : &it->second;
}

namespace {

// node and every ancestor up to its root, nearest first
std::vector<std::string_view> ancestor_chain(std::string_view term, const Taxonomy& t) {
    std::vector<std::string_view> chain;
    std::string_view cur = term;
    chain.push_back(cur);
    while (const std::string* p = t.parent(cur)) {
        cur = *p;
        chain.push_back(cur);
    }
    return chain;
}

} // namespace

double wu_palmer(std::string_view a, std::string_view b, const Taxonomy& t) {
    if (!t.contains(a) || !t.contains(b))
        return 0.0;
    auto chain_a = ancestor_chain(a, t);
    std::set<std::string_view> ancestors_a(chain_a.begin(), chain_a.end());
    // deepest common subsumer = first hit walking up from b
    std::string_view lcs{};
    for (std::string_view node : ancestor_chain(b, t)) {
        if (ancestors_a.count(node)) {
            lcs = node;
            break;
        }
    }
    if (lcs.empty())
        return 0.0;
    double da = t.depth(a), db = t.depth(b), dl = t.depth(lcs);
    return 2.0 * dl / (da + db);
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PersistError("cannot read embeddings: " + path.string());
    EmbeddingTable e;
    std::string line;
    if (!std::getline(in, line))
        throw PersistError("embeddings: empty file");
    e.dim = std::stoul(line);
    if (e.dim == 0)
        throw PersistError("embeddings: dim must be positive");
    size_t line_no = 1;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string term;
        ss >> term;
        std::vector<double> v(e.dim);
        for (auto& x : v)
            if (!(ss >> x))
                throw PersistError("embeddings line " + std::to_string(line_no) +
                                   ": expected " + std::to_string(e.dim) + " floats");
        double norm2 = 0;
        for (double x : v) norm2 += x * x;
        if (norm2 == 0.0)
            throw PersistError("embeddings line " + std::to_string(line_no) + ": zero vector");
        e.vectors.emplace(std::move(term), std::move(v));
    }
    return e;
}

double cosine_sim(std::string_view a, std::string_view b, const EmbeddingTable& e) {
    auto ia = e.vectors.find(a);
    auto ib = e.vectors.find(b);
    if (ia == e.vectors.end() || ib == e.vectors.end())
        return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < e.dim; i++) {
        dot += ia->second[i] * ib->second[i];
        na += ia->second[i] * ia->second[i];
        nb += ib->second[i] * ib->second[i];
    }
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, 0.0, 1.0);
}

SimilarityProvider SimilarityProvider::from_taxonomy(Taxonomy t) {
    SimilarityProvider p;
    p.mode_ = Mode::taxonomy;
    p.taxonomy_ = std::make_shared<const Taxonomy>(std::move(t));
    p.vocab_ = p.taxonomy_->leaves();
    return p;
}

SimilarityProvider SimilarityProvider::from_embeddings(EmbeddingTable e) {
    SimilarityProvider p;
    p.mode_ = Mode::embedding;
    p.embeddings_ = std::make_shared<const EmbeddingTable>(std::move(e));
    for (auto& [term, _] : p.embeddings_->vectors)
        p.vocab_.push_back(term);
    return p;
}

double SimilarityProvider::similarity(std::string_view a, std::string_view b) const {
    if (mode_ == Mode::taxonomy)
        return taxonomy_ ? wu_palmer(a, b, *taxonomy_) : 0.0;
    return embeddings_ ? cosine_sim(a, b, *embeddings_) : 0.0;
}

bool SimilarityProvider::contains(std::string_view term) const {
    if (mode_ == Mode::taxonomy)
        return taxonomy_ && taxonomy_->contains(term);
    return embeddings_ && embeddings_->vectors.count(term) > 0;
}

std::vector<std::string> expand_query(std::span<const std::string> terms, std::size_t n,
                                      const SimilarityProvider& p) {
    std::vector<std::string> out;
    std::set<std::string_view> present;
    for (const auto& t : terms)
        if (present.insert(t).second)
            out.push_back(t);
    if (n == 0)
        return out;

    size_t original_count = out.size();
    for (size_t i = 0; i < original_count; i++) {
        const std::string term = out[i];
        std::vector<std::pair<double, std::string_view>> candidates;
        for (const auto& cand : p.expansion_vocabulary()) {
            if (cand == term || present.count(cand)) continue;
            double s = p.similarity(term, cand);
            if (s >= 0.5)
                candidates.emplace_back(s, cand);
        }
        std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        if (candidates.size() > n) candidates.resize(n);
        for (auto& [_, cand] : candidates) {
            if (present.insert(cand).second)
                out.emplace_back(cand);
        }
    }
    return out;
}

} // namespace prunesearch::semantics
