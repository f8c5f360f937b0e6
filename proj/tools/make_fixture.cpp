// Deterministic synthetic-corpus generator: 10 topics x 20 documents plus a
// matching taxonomy, shaped so clustering, pruning and abstract maintenance
// all have recoverable structure at desk scale.
//
// Taxonomy layout (depths in brackets):
//
//   root[1] -> domain[2] -> field_T[3]        one field node per topic T
//                             anchor_T[4]      + depth-padding chain below
//                             neartop x5[4]    + depth-padding chains
//                             exch tops[4]     one top word from each sibling
//                                              topic of the domain, padded too
//                             pod_i[4] -> satellite_i[5]   (18 pods)
//
// Word strata per topic:
//   - anchor (freq 6): alone in five "tag" docs and inside three more, the
//     unique eligible centroid of its topic;
//   - tops, 9 per topic (freq 3, one at freq 2): highest document counts,
//     provably the initial abstract together with the anchor. Five sit in
//     the home field; four are "exchange" vocabulary listed in sibling
//     fields (cross-listed terms shared by neighboring topics);
//   - satellites (18, freq 5/4/3): every satellite scores exactly 2*3/9
//     against the five home neartops and against each sibling's single
//     exchange top, so a satellite query ties across all five topics of the
//     domain and the pruner cannot break the tie; the *mean* similarity to
//     the home abstract is higher (five neartops vs one exchange top), so
//     select_abstract still routes satellites home;
//   - noise (freq 1, 150 per doc): unique long-tail filler; two per doc slip
//     into the keyword list behind a low-frequency top and thin out the
//     home cluster's qualification mean.
//
// The depth-padding chains push every top/anchor four levels down (leaf at
// depth 8), which keeps them out of query expansion (a satellite's
// similarity to a padded leaf is 6/13 < 0.5) without touching the
// similarities above.
//
// Plain-doc keyword trios:
//   [sat sat sat][sat sat sat][mix mix mix][mix mix mix][top nse nse]
// giving two pure-satellite queries per doc (the statically unroutable
// class), two top-carried queries and one noise-tailed query.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prunesearch/text.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kTopics = 10;
constexpr int kTagDocs = 5;
constexpr int kAnchoredDocs = 3;
constexpr int kPlainDocs = 12;
constexpr int kTopPool = 9; // 5 near + 4 exchange
constexpr int kNearTops = 5;
constexpr int kSatellitePool = 18;
constexpr int kPureSatsPerDoc = 6; // 3 at freq 5, 3 at freq 4
constexpr int kMixedSatsPerDoc = 2;
constexpr int kTopsPerDoc = 4;     // frequency 3
constexpr int kTailTopsPerDoc = 1; // frequency 2, heads the noise trio
constexpr int kNoisePerDoc = 170;
constexpr int kPadDepth = 4; // chain below each top/anchor; leaf lands at depth 8

const std::vector<std::vector<int>> kDomains = {{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}};

const char* kSyllables[] = {"mon", "tor", "vel", "rus", "pol", "gan", "sil", "ken",
                            "dur", "zam", "bor", "lyn", "quo", "nim", "wok", "tel",
                            "gri", "hus", "pra", "vos", "mul", "jor", "heg", "tum"};
constexpr std::uint64_t kSyllableCount = 24;

std::string syl(std::uint64_t n) { return kSyllables[n % kSyllableCount]; }

bool usable(const std::string& w, std::set<std::string>& taken) {
    using namespace prunesearch;
    if (w.size() < 6) return false;
    if (text::is_stop_word(w)) return false;
    if (text::stem(w) != w) return false; // keywords must be stem fixed points
    bool non_hex = false;
    for (char c : w)
        if (c < 'a' || c > 'f') non_hex = true; // must never hide inside token hex
    if (!non_hex) return false;
    return taken.insert(w).second;
}

std::string fresh_word(std::mt19937_64& rng, std::set<std::string>& taken) {
    for (int attempt = 0; attempt < 4000; attempt++) {
        std::string w = syl(rng()) + syl(rng()) + syl(rng());
        if (attempt > 1000)
            w += syl(rng());
        if (usable(w, taken))
            return w;
    }
    throw std::runtime_error("vocabulary space exhausted");
}

struct TopicVocab {
    std::string anchor;
    std::vector<std::string> tops; // [0..4] near, [5..8] exchanged to siblings
    std::vector<std::string> satellites;
};

std::vector<std::string> window(const std::vector<std::string>& pool, int start, int count) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; i++)
        out.push_back(pool[static_cast<std::size_t>(start + i) % pool.size()]);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate the committed synthetic benchmark corpus"};
    std::string out_dir = "tests/fixtures";
    app.add_option("--out", out_dir, "output directory (corpus/ and taxonomy.tsv)");
    CLI11_PARSE(app, argc, argv);

    std::mt19937_64 rng(20240817);
    std::set<std::string> taken;

    std::vector<TopicVocab> topics(kTopics);
    for (auto& t : topics) {
        t.anchor = fresh_word(rng, taken);
        for (int i = 0; i < kTopPool; i++)
            t.tops.push_back(fresh_word(rng, taken));
        for (int i = 0; i < kSatellitePool; i++)
            t.satellites.push_back(fresh_word(rng, taken));
    }

    fs::path root(out_dir);
    fs::create_directories(root / "corpus");

    {
        std::ofstream tax(root / "taxonomy.tsv");
        tax << "root\t-\n";
        // keeps tops and anchors out of the leaf set (and so out of query
        // expansion) without changing similarities computed through the field
        auto pad = [&tax](const std::string& word) {
            std::string parent = word;
            for (int i = 1; i <= kPadDepth; i++) {
                std::string child = word + "pad" + std::to_string(i);
                tax << child << "\t" << parent << "\n";
                parent = child;
            }
        };
        for (std::size_t d = 0; d < kDomains.size(); d++) {
            std::string domain = "domain" + std::to_string(d);
            tax << domain << "\troot\n";
            for (int t : kDomains[d]) {
                const auto& vocab = topics[static_cast<std::size_t>(t)];
                std::string field = "field" + std::to_string(t);
                tax << field << "\t" << domain << "\n";
                tax << vocab.anchor << "\t" << field << "\n";
                pad(vocab.anchor);
                for (int i = 0; i < kNearTops; i++) {
                    tax << vocab.tops[static_cast<std::size_t>(i)] << "\t" << field << "\n";
                    pad(vocab.tops[static_cast<std::size_t>(i)]);
                }
                // exchange tops: each sibling lists exactly one of its top
                // words in this topic's field (cross-listed vocabulary)
                for (int s : kDomains[d]) {
                    if (s == t)
                        continue;
                    const auto& sibling = topics[static_cast<std::size_t>(s)];
                    // which of the sibling's exchange slots points at t
                    int slot = kNearTops;
                    for (int other : kDomains[d]) {
                        if (other == s)
                            continue;
                        if (other == t)
                            break;
                        slot++;
                    }
                    tax << sibling.tops[static_cast<std::size_t>(slot)] << "\t" << field << "\n";
                    pad(sibling.tops[static_cast<std::size_t>(slot)]);
                }
                for (int i = 0; i < kSatellitePool; i++) {
                    std::string pod = "pod" + std::to_string(t) + "x" + std::to_string(i);
                    tax << pod << "\t" << field << "\n";
                    tax << vocab.satellites[static_cast<std::size_t>(i)] << "\t" << pod << "\n";
                }
            }
        }
    }

    std::size_t docs_written = 0;
    std::size_t words_written = 0;
    for (int t = 0; t < kTopics; t++) {
        const auto& vocab = topics[static_cast<std::size_t>(t)];
        int doc_no = 0;

        auto write_doc = [&](const std::string& kind, std::vector<std::string> words) {
            std::string name =
                "topic" + std::to_string(t) + "_" + kind + "_" + std::to_string(doc_no);
            std::ofstream out(root / "corpus" / (name + ".txt"));
            int col = 0;
            for (const auto& w : words) {
                out << w;
                col++;
                out << (col % 12 == 0 ? '\n' : ' ');
            }
            out << "\n";
            docs_written++;
            words_written += words.size();
            doc_no++;
        };

        for (int i = 0; i < kTagDocs; i++)
            write_doc("tag", std::vector<std::string>(6, vocab.anchor));

        for (int i = 0; i < kAnchoredDocs + kPlainDocs; i++) {
            bool anchored = i < kAnchoredDocs;
            std::vector<std::string> words;
            if (anchored)
                words.insert(words.end(), 6, vocab.anchor);
            // one 8-word satellite window: 3 at freq 5, 3 at freq 4 (two pure
            // trios), 2 at freq 3 riding with the tops
            auto sats = window(vocab.satellites, 7 * i, kPureSatsPerDoc + kMixedSatsPerDoc);
            for (int s = 0; s < 3; s++)
                words.insert(words.end(), 5, sats[static_cast<std::size_t>(s)]);
            for (int s = 3; s < 6; s++)
                words.insert(words.end(), 4, sats[static_cast<std::size_t>(s)]);
            for (int s = 6; s < 8; s++)
                words.insert(words.end(), 3, sats[static_cast<std::size_t>(s)]);
            for (const auto& w : window(vocab.tops, 5 * i, kTopsPerDoc))
                words.insert(words.end(), 3, w);
            // one top outside the frequency-3 window heads the noise trio
            for (const auto& w : window(vocab.tops, 5 * i + kTopsPerDoc, kTailTopsPerDoc))
                words.insert(words.end(), 2, w);
            for (int n = 0; n < kNoisePerDoc; n++)
                words.push_back(fresh_word(rng, taken));
            std::shuffle(words.begin(), words.end(), rng);
            write_doc(anchored ? "adoc" : "doc", std::move(words));
        }
    }

    std::cout << "wrote " << docs_written << " documents (" << words_written
              << " words) under " << (root / "corpus").string() << "\n";
    std::cout << "vocabulary: " << taken.size() << " distinct generated words\n";
    return 0;
}
