#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "raqam/errors.hpp"
#include "raqam/text.hpp"

namespace raqam {

inline constexpr const char* kSilPhone = "SIL";

enum class VowelLength { none, short_v, long_v };

// Phone inventory with vowel/consonant classification.
//
// Background note: Standard Arabic has 34 phonemes, 6 vowels (three short,
// three long) and 28 consonants; syllables are CV, CVC or CVCC, always start
// with a consonant, and a vowel never touches another vowel. The builtin set
// below only carries the phones needed for the digits task (a romanized
// subset) plus SIL, which is classified as a consonant for bookkeeping.
struct PhoneSet {
    struct Info {
        bool vowel = false;
        VowelLength length = VowelLength::none;  // meaningful for vowels only
    };
    std::map<std::string, Info> phones;

    bool contains(const std::string& label) const { return phones.count(label) != 0; }

    bool is_vowel(const std::string& label) const {
        auto it = phones.find(label);
        if (it == phones.end()) throw UnknownPhone("phone not in set: " + label);
        return it->second.vowel;
    }

    std::size_t size() const { return phones.size(); }
};

// Pronunciation dictionary. `syllables` optionally declares the syllable
// patterns (e.g. {"CV","CVC"}); an empty list means undeclared, in which case
// the syllable count is by definition the vowel count.
struct Lexicon {
    struct Entry {
        std::vector<std::string> phones;
        std::vector<std::string> syllables;
    };
    std::map<std::string, Entry> entries;

    bool contains(const std::string& word) const { return entries.count(word) != 0; }

    const Entry& at(const std::string& word) const {
        auto it = entries.find(word);
        if (it == entries.end()) throw UnknownWord("word not in lexicon: " + word);
        return it->second;
    }

    std::vector<std::string> words() const {
        std::vector<std::string> out;
        out.reserve(entries.size());
        for (const auto& [w, e] : entries) out.push_back(w);
        return out;
    }

    std::size_t size() const { return entries.size(); }
};

// Task grammar. min_words/max_words are advisory bounds carried for callers;
// the word-loop graph itself is unbounded (no counting states are compiled).
struct Grammar {
    enum class Kind { isolated_word, word_loop };
    Kind kind = Kind::isolated_word;
    std::vector<std::string> vocabulary;
    std::optional<int> min_words;
    std::optional<int> max_words;
};

// ---------------------------------------------------------------------------
// Builtin Arabic digits task (romanized)
// ---------------------------------------------------------------------------

// Digit labels in digit order 1..9, 0.
inline const std::vector<std::string>& digit_words() {
    static const std::vector<std::string> words = {
        "WAHID", "ITHNAYN", "THALATHA", "ARBAA", "KHAMSA",
        "SITTA", "SABAA",   "THAMANIYA", "TISAA", "SIFR",
    };
    return words;
}

inline PhoneSet default_phone_set() {
    PhoneSet ps;
    auto vowel = [&](const char* p, VowelLength len) { ps.phones[p] = {true, len}; };
    auto cons = [&](const char* p) { ps.phones[p] = {false, VowelLength::none}; };
    vowel("AA", VowelLength::long_v);
    vowel("IH", VowelLength::short_v);
    vowel("IY", VowelLength::long_v);
    for (const char* c : {"W", "H", "D", "Q", "TH", "N", "Y", "L", "R", "B", "KH", "M", "S", "T", "F"}) cons(c);
    cons(kSilPhone);
    return ps;
}

inline Lexicon default_lexicon() {
    Lexicon lex;
    auto add = [&](const char* w, std::vector<std::string> ph, std::vector<std::string> syl) {
        lex.entries[w] = {std::move(ph), std::move(syl)};
    };
    add("WAHID", {"W", "AA", "H", "IH", "D"}, {"CV", "CVC"});
    add("ITHNAYN", {"Q", "IH", "TH", "N", "AA", "Y", "N"}, {"CVC", "CVCC"});
    add("THALATHA", {"TH", "AA", "L", "AA", "TH", "AA", "H"}, {"CV", "CV", "CVC"});
    add("ARBAA", {"Q", "AA", "R", "B", "AA", "Q", "AA", "H"}, {"CVC", "CV", "CVC"});
    add("KHAMSA", {"KH", "AA", "M", "S", "AA", "H"}, {"CVC", "CVC"});
    add("SITTA", {"S", "IH", "T", "T", "AA", "H"}, {"CVC", "CVC"});
    add("SABAA", {"S", "AA", "B", "Q", "AA", "H"}, {"CVC", "CVC"});
    add("THAMANIYA", {"TH", "AA", "M", "AA", "N", "IY", "Y", "AA", "H"}, {"CV", "CV", "CV", "CVC"});
    add("TISAA", {"T", "IH", "S", "Q", "AA", "H"}, {"CVC", "CVC"});
    add("SIFR", {"S", "IH", "F", "R"}, {"CVCC"});
    return lex;
}

inline Grammar digits_grammar(Grammar::Kind kind = Grammar::Kind::isolated_word) {
    Grammar g;
    g.kind = kind;
    g.vocabulary = digit_words();
    return g;
}

// ---------------------------------------------------------------------------
// Lexicon validation
// ---------------------------------------------------------------------------

struct LexiconViolation {
    std::string word;
    std::string rule;    // stable identifier, e.g. "unknown-phone"
    std::string detail;  // human-readable specifics
};

// Checks the phonotactic rules every entry must satisfy:
//   unknown-phone            phone missing from the phone set
//   vowel-initial            word starts with a vowel
//   bad-syllable-pattern     declared pattern outside {CV, CVC, CVCC}
//   syllable-count-mismatch  declared syllable count != vowel count
//   adjacent-vowels          two vowels in a row
inline std::vector<LexiconViolation> validate_lexicon(const Lexicon& lex, const PhoneSet& ps) {
    static const std::set<std::string> kPatterns = {"CV", "CVC", "CVCC"};
    std::vector<LexiconViolation> out;
    for (const auto& [word, entry] : lex.entries) {
        bool all_known = true;
        for (const auto& p : entry.phones) {
            if (!ps.contains(p)) {
                out.push_back({word, "unknown-phone", p});
                all_known = false;
            }
        }
        for (const auto& pat : entry.syllables) {
            if (!kPatterns.count(pat)) out.push_back({word, "bad-syllable-pattern", pat});
        }
        if (!all_known) continue;  // class-based rules need every phone classified

        int vowels = 0;
        bool prev_vowel = false;
        for (std::size_t i = 0; i < entry.phones.size(); ++i) {
            const bool v = ps.is_vowel(entry.phones[i]);
            if (v) {
                ++vowels;
                if (i == 0) out.push_back({word, "vowel-initial", entry.phones[i]});
                if (prev_vowel)
                    out.push_back({word, "adjacent-vowels", entry.phones[i - 1] + " " + entry.phones[i]});
            }
            prev_vowel = v;
        }
        if (!entry.syllables.empty() && static_cast<int>(entry.syllables.size()) != vowels) {
            out.push_back({word, "syllable-count-mismatch",
                           "declared " + std::to_string(entry.syllables.size()) + ", vowel count " +
                               std::to_string(vowels)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

// Dictionary: one entry per line, `WORD<TAB>PH PH PH`, with an optional third
// tab-separated field declaring syllable patterns (`CV CVC`). Blank lines and
// lines starting with '#' are skipped.
inline Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open lexicon: " + path.string());
    Lexicon lex;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const auto fields = detail::split(detail::trim(line), '\t');
        if (fields.size() < 2 || fields.size() > 3)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected WORD<TAB>PHONES");
        const std::string word = detail::trim(fields[0]);
        if (word.empty()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty word");
        if (lex.contains(word))
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": duplicate word " + word);
        Lexicon::Entry e;
        e.phones = detail::tokens(fields[1]);
        if (e.phones.empty())
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty pronunciation for " + word);
        if (fields.size() == 3) e.syllables = detail::tokens(fields[2]);
        lex.entries[word] = std::move(e);
    }
    if (lex.entries.empty()) throw ParseError("empty lexicon: " + path.string());
    return lex;
}

inline void save_lexicon(const Lexicon& lex, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const auto& [word, e] : lex.entries) {
        out << word << '\t';
        for (std::size_t i = 0; i < e.phones.size(); ++i) out << (i ? " " : "") << e.phones[i];
        if (!e.syllables.empty()) {
            out << '\t';
            for (std::size_t i = 0; i < e.syllables.size(); ++i) out << (i ? " " : "") << e.syllables[i];
        }
        out << '\n';
    }
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

// Phone set: `PHONE<TAB>{V|C}[<TAB>{short|long}]` per line.
inline PhoneSet load_phone_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open phone set: " + path.string());
    PhoneSet ps;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const auto fields = detail::split(detail::trim(line), '\t');
        if (fields.size() < 2 || fields.size() > 3)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected PHONE<TAB>{V|C}");
        const std::string label = detail::trim(fields[0]);
        const std::string cls = detail::trim(fields[1]);
        if (label.empty()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty phone label");
        if (ps.contains(label))
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": duplicate phone " + label);
        PhoneSet::Info info;
        if (cls == "V")
            info.vowel = true;
        else if (cls == "C")
            info.vowel = false;
        else
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": class must be V or C, got " + cls);
        if (fields.size() == 3) {
            const std::string len = detail::trim(fields[2]);
            if (!info.vowel)
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": length given for consonant");
            if (len == "short")
                info.length = VowelLength::short_v;
            else if (len == "long")
                info.length = VowelLength::long_v;
            else
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": length must be short or long");
        } else if (info.vowel) {
            info.length = VowelLength::short_v;
        }
        ps.phones[label] = info;
    }
    if (ps.phones.empty()) throw ParseError("empty phone set: " + path.string());
    return ps;
}

inline void save_phone_set(const PhoneSet& ps, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const auto& [label, info] : ps.phones) {
        out << label << '\t' << (info.vowel ? 'V' : 'C');
        if (info.vowel) out << '\t' << (info.length == VowelLength::long_v ? "long" : "short");
        out << '\n';
    }
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

// Grammar: `KIND=isolated_word|word_loop`, `WORDS=a,b,c`, optional
// `MIN_WORDS=n` / `MAX_WORDS=n` lines.
inline Grammar load_grammar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open grammar: " + path.string());
    Grammar g;
    bool have_kind = false, have_words = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const std::string t = detail::trim(line);
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected KEY=VALUE");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        if (key == "KIND") {
            if (val == "isolated_word")
                g.kind = Grammar::Kind::isolated_word;
            else if (val == "word_loop")
                g.kind = Grammar::Kind::word_loop;
            else
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": unknown grammar kind " + val);
            have_kind = true;
        } else if (key == "WORDS") {
            std::set<std::string> seen;
            for (const auto& raw : detail::split(val, ',')) {
                const std::string w = detail::trim(raw);
                if (w.empty()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty word");
                if (!seen.insert(w).second)
                    throw ParseError(path.string() + ":" + std::to_string(lineno) + ": duplicate word " + w);
                g.vocabulary.push_back(w);
            }
            have_words = true;
        } else if (key == "MIN_WORDS") {
            g.min_words = detail::parse_int(val, "MIN_WORDS");
        } else if (key == "MAX_WORDS") {
            g.max_words = detail::parse_int(val, "MAX_WORDS");
        } else {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": unknown key " + key);
        }
    }
    if (!have_kind) throw ParseError("grammar missing KIND: " + path.string());
    if (!have_words || g.vocabulary.empty()) throw ParseError("grammar missing WORDS: " + path.string());
    return g;
}

inline void save_grammar(const Grammar& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "KIND=" << (g.kind == Grammar::Kind::isolated_word ? "isolated_word" : "word_loop") << '\n';
    out << "WORDS=";
    for (std::size_t i = 0; i < g.vocabulary.size(); ++i) out << (i ? "," : "") << g.vocabulary[i];
    out << '\n';
    if (g.min_words) out << "MIN_WORDS=" << *g.min_words << '\n';
    if (g.max_words) out << "MAX_WORDS=" << *g.max_words << '\n';
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace raqam
