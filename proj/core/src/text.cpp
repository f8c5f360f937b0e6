#include "prunesearch/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace prunesearch::text {

namespace {

const std::unordered_set<std::string_view>& stop_words() {
    // ~120 common English function words, incl. contraction bases left over
    // after apostrophes are stripped ("don't" -> "dont").
    static const std::unordered_set<std::string_view> words = {
        "a",      "about",  "above",  "after",   "again",  "against", "all",
        "am",     "an",     "and",    "any",     "are",    "arent",   "as",
        "at",     "be",     "because","been",    "before", "being",   "below",
        "between","both",   "but",    "by",      "cannot", "cant",    "could",
        "did",    "didnt",  "do",     "does",    "doesnt", "doing",   "dont",
        "down",   "during", "each",   "few",     "for",    "from",    "further",
        "had",    "has",    "have",   "having",  "he",     "her",     "here",
        "hers",   "him",    "his",    "how",     "i",      "if",      "in",
        "into",   "is",     "isnt",   "it",      "its",    "itself",  "just",
        "me",     "more",   "most",   "my",      "myself", "no",      "nor",
        "not",    "now",    "of",     "off",     "on",     "once",    "only",
        "or",     "other",  "our",    "ours",    "out",    "over",    "own",
        "same",   "she",    "should", "so",      "some",   "such",    "than",
        "that",   "the",    "their",  "theirs",  "them",   "then",    "there",
        "these",  "they",   "this",   "those",   "through","to",      "too",
        "under",  "until",  "up",     "very",    "was",    "wasnt",   "we",
        "were",   "what",   "when",   "where",   "which",  "while",   "who",
        "whom",   "why",    "will",   "with",    "wont",   "would",   "you",
        "your",   "yours",  "yourself",
    };
    return words;
}

// --- Porter stemmer -------------------------------------------------------
//
// Straight port of the 1980 algorithm over a mutable char buffer.
// `end` is the index of the last letter of the current stem.

struct Stemmer {
    std::string b;
    int end = 0; // last char of stem
    int j = 0;   // rule boundary set by ends()

    bool is_consonant(int i) const {
        switch (b[static_cast<size_t>(i)]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !is_consonant(i - 1);
        default:
            return true;
        }
    }

    // measure of the stem b[0..j]
    int m() const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j) return n;
            if (!is_consonant(i)) break;
            i++;
        }
        i++;
        while (true) {
            while (true) {
                if (i > j) return n;
                if (is_consonant(i)) break;
                i++;
            }
            i++;
            n++;
            while (true) {
                if (i > j) return n;
                if (!is_consonant(i)) break;
                i++;
            }
            i++;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j; i++)
            if (!is_consonant(i)) return true;
        return false;
    }

    bool double_consonant(int i) const {
        if (i < 1) return false;
        if (b[static_cast<size_t>(i)] != b[static_cast<size_t>(i - 1)]) return false;
        return is_consonant(i);
    }

    // consonant-vowel-consonant ending, last consonant not w, x or y
    bool cvc(int i) const {
        if (i < 2 || !is_consonant(i) || is_consonant(i - 1) || !is_consonant(i - 2))
            return false;
        char ch = b[static_cast<size_t>(i)];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s) {
        int len = static_cast<int>(s.size());
        if (len > end + 1) return false;
        if (b.compare(static_cast<size_t>(end - len + 1), static_cast<size_t>(len), s) != 0)
            return false;
        j = end - len;
        return true;
    }

    void set_to(std::string_view s) {
        b.replace(static_cast<size_t>(j + 1), std::string::npos, s);
        end = j + static_cast<int>(s.size());
        b.resize(static_cast<size_t>(end + 1));
    }

    void replace_if_m_gt0(std::string_view s) {
        if (m() > 0) set_to(s);
    }

    void step1ab() {
        if (b[static_cast<size_t>(end)] == 's') {
            if (ends("sses")) end -= 2;
            else if (ends("ies")) set_to("i");
            else if (b[static_cast<size_t>(end - 1)] != 's') end--;
        }
        if (ends("eed")) {
            if (m() > 0) end--;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            end = j;
            if (ends("at")) set_to("ate");
            else if (ends("bl")) set_to("ble");
            else if (ends("iz")) set_to("ize");
            else if (double_consonant(end)) {
                char ch = b[static_cast<size_t>(end)];
                if (ch != 'l' && ch != 's' && ch != 'z') end--;
            } else if (m() == 1 && cvc(end)) {
                j = end;
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b[static_cast<size_t>(end)] = 'i';
    }

    void step2() {
        switch (b[static_cast<size_t>(end - 1)]) {
        case 'a':
            if (ends("ational")) { replace_if_m_gt0("ate"); break; }
            if (ends("tional")) { replace_if_m_gt0("tion"); break; }
            break;
        case 'c':
            if (ends("enci")) { replace_if_m_gt0("ence"); break; }
            if (ends("anci")) { replace_if_m_gt0("ance"); break; }
            break;
        case 'e':
            if (ends("izer")) { replace_if_m_gt0("ize"); break; }
            break;
        case 'l':
            if (ends("bli")) { replace_if_m_gt0("ble"); break; }
            if (ends("alli")) { replace_if_m_gt0("al"); break; }
            if (ends("entli")) { replace_if_m_gt0("ent"); break; }
            if (ends("eli")) { replace_if_m_gt0("e"); break; }
            if (ends("ousli")) { replace_if_m_gt0("ous"); break; }
            break;
        case 'o':
            if (ends("ization")) { replace_if_m_gt0("ize"); break; }
            if (ends("ation")) { replace_if_m_gt0("ate"); break; }
            if (ends("ator")) { replace_if_m_gt0("ate"); break; }
            break;
        case 's':
            if (ends("alism")) { replace_if_m_gt0("al"); break; }
            if (ends("iveness")) { replace_if_m_gt0("ive"); break; }
            if (ends("fulness")) { replace_if_m_gt0("ful"); break; }
            if (ends("ousness")) { replace_if_m_gt0("ous"); break; }
            break;
        case 't':
            if (ends("aliti")) { replace_if_m_gt0("al"); break; }
            if (ends("iviti")) { replace_if_m_gt0("ive"); break; }
            if (ends("biliti")) { replace_if_m_gt0("ble"); break; }
            break;
        case 'g':
            if (ends("logi")) { replace_if_m_gt0("log"); break; }
            break;
        }
    }

    void step3() {
        switch (b[static_cast<size_t>(end)]) {
        case 'e':
            if (ends("icate")) { replace_if_m_gt0("ic"); break; }
            if (ends("ative")) { replace_if_m_gt0(""); break; }
            if (ends("alize")) { replace_if_m_gt0("al"); break; }
            break;
        case 'i':
            if (ends("iciti")) { replace_if_m_gt0("ic"); break; }
            break;
        case 'l':
            if (ends("ical")) { replace_if_m_gt0("ic"); break; }
            if (ends("ful")) { replace_if_m_gt0(""); break; }
            break;
        case 's':
            if (ends("ness")) { replace_if_m_gt0(""); break; }
            break;
        }
    }

    void step4() {
        switch (b[static_cast<size_t>(end - 1)]) {
        case 'a': if (ends("al")) break; return;
        case 'c': if (ends("ance") || ends("ence")) break; return;
        case 'e': if (ends("er")) break; return;
        case 'i': if (ends("ic")) break; return;
        case 'l': if (ends("able") || ends("ible")) break; return;
        case 'n':
            if (ends("ant") || ends("ement") || ends("ment") || ends("ent")) break;
            return;
        case 'o':
            if (ends("ion") && j >= 0 &&
                (b[static_cast<size_t>(j)] == 's' || b[static_cast<size_t>(j)] == 't'))
                break;
            if (ends("ou")) break;
            return;
        case 's': if (ends("ism")) break; return;
        case 't': if (ends("ate") || ends("iti")) break; return;
        case 'u': if (ends("ous")) break; return;
        case 'v': if (ends("ive")) break; return;
        case 'z': if (ends("ize")) break; return;
        default: return;
        }
        if (m() > 1) end = j;
    }

    void step5() {
        j = end;
        if (b[static_cast<size_t>(end)] == 'e') {
            int a = m();
            if (a > 1 || (a == 1 && !cvc(end - 1))) end--;
        }
        if (b[static_cast<size_t>(end)] == 'l' && double_consonant(end) && m() > 1)
            end--;
    }

    std::string run(std::string_view word) {
        b.assign(word);
        end = static_cast<int>(b.size()) - 1;
        if (end <= 1) return b;
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        b.resize(static_cast<size_t>(end + 1));
        return b;
    }
};

bool is_ascii_alnum(unsigned char c) {
    return std::isalnum(c) != 0;
}

} // namespace

std::string normalize(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (c >= 0x80) {
            out.push_back(static_cast<char>(c));
        } else if (is_ascii_alnum(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
        } else if (c == '\'') {
            // drop apostrophes so "don't" folds to "dont"
        } else {
            out.push_back(' ');
        }
    }
    return out;
}

std::vector<std::string> split_words(std::string_view normalized) {
    std::vector<std::string> words;
    size_t i = 0;
    while (i < normalized.size()) {
        while (i < normalized.size() && normalized[i] == ' ') i++;
        size_t start = i;
        while (i < normalized.size() && normalized[i] != ' ') i++;
        if (i > start) words.emplace_back(normalized.substr(start, i - start));
    }
    return words;
}

bool is_stop_word(std::string_view word) {
    return stop_words().count(word) > 0;
}

std::string stem(std::string_view word) {
    Stemmer s;
    return s.run(word);
}

std::vector<std::string> pipeline(std::string_view raw) {
    std::vector<std::string> terms;
    for (auto& w : split_words(normalize(raw))) {
        if (is_stop_word(w)) continue;
        terms.push_back(stem(w));
    }
    return terms;
}

} // namespace prunesearch::text
