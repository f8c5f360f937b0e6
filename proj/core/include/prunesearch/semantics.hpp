#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prunesearch/errors.hpp"

namespace prunesearch::semantics {

// Rooted forest of terms. Root depth is 1; depth(child) = depth(parent) + 1.
class Taxonomy {
  public:
    // edges: (child, parent); parent "-" marks a root
    static Taxonomy from_edges(std::span<const std::pair<std::string, std::string>> edges);
    // one "child<TAB>parent" per line; roots listed as "term<TAB>-"
    static Taxonomy load(const std::filesystem::path& path);

    bool contains(std::string_view term) const;
    int depth(std::string_view term) const; // 0 when absent
    const std::string* parent(std::string_view term) const;
    const std::set<std::string>& nodes() const { return nodes_; }
    const std::vector<std::string>& leaves() const { return leaves_; }

  private:
    void finalize(); // validates acyclicity, computes depths and leaves
    std::map<std::string, std::string, std::less<>> parent_;
    std::map<std::string, int, std::less<>> depth_;
    std::set<std::string> nodes_;
    std::vector<std::string> leaves_;
};

// 2*depth(lcs) / (depth(a)+depth(b)); 0.0 when either term is out of
// vocabulary or the two share no ancestor.
double wu_palmer(std::string_view a, std::string_view b, const Taxonomy& t);

struct EmbeddingTable {
    std::size_t dim = 0;
    std::map<std::string, std::vector<double>, std::less<>> vectors;

    // first line "dim", then "term v1 .. vdim" per line
    static EmbeddingTable load(const std::filesystem::path& path);
};

// max(0, cosine) of the two vectors; 0.0 on out-of-vocabulary terms.
double cosine_sim(std::string_view a, std::string_view b, const EmbeddingTable& e);

class SimilarityProvider {
  public:
    enum class Mode { taxonomy, embedding };

    // empty provider: everything is out of vocabulary
    SimilarityProvider() = default;

    static SimilarityProvider from_taxonomy(Taxonomy t);
    static SimilarityProvider from_embeddings(EmbeddingTable e);

    Mode mode() const { return mode_; }
    double similarity(std::string_view a, std::string_view b) const;
    bool contains(std::string_view term) const;

    // candidate pool for query expansion: taxonomy leaves, or every
    // embedded term
    const std::vector<std::string>& expansion_vocabulary() const { return vocab_; }

    const Taxonomy* taxonomy() const { return taxonomy_.get(); }

  private:
    Mode mode_ = Mode::taxonomy;
    std::shared_ptr<const Taxonomy> taxonomy_;
    std::shared_ptr<const EmbeddingTable> embeddings_;
    std::vector<std::string> vocab_;
};

// Original terms first (order kept), then for each term up to n expansion
// candidates with similarity >= 0.5, deduplicated.
std::vector<std::string> expand_query(std::span<const std::string> terms, std::size_t n,
                                      const SimilarityProvider& p);

} // namespace prunesearch::semantics
