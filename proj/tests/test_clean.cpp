#include <catch2/catch.hpp>

#include "phyto/clean.hpp"
#include "phyto/rng.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace phyto;
using cleanrule::collapse_repeats;
using cleanrule::drop_short_lines;
using cleanrule::remove_spaced_letter_runs;
using cleanrule::remove_stopwords;
using cleanrule::strip_urls_phones;

namespace {

// words of a text as strings, for order-preservation checks
std::vector<std::string> word_list(std::string_view s) {
    std::vector<std::string> out;
    for (const auto& w : text::words(s)) out.emplace_back(w);
    return out;
}

bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& full) {
    std::size_t i = 0;
    for (const auto& w : full) {
        if (i < sub.size() && sub[i] == w) ++i;
    }
    return i == sub.size();
}

std::string random_ocr_text(SplitMix64& rng) {
    static const std::vector<std::string> pieces = {
        "pyrale",  "le",       "seuil",     "est",    "atteint",  "B U L L E T I N",
        "http://ex.fr", "www.bsv.fr", "06 12 34 56 78", "0612345678", "+33 06.12.34.56.78",
        "mildiou...", "alerte!!!", "l'apparition", "peut-être", "colza,", "(page 3)",
        "«risque»",  "5",        "a",         "A",      "B",        "DE",
        "SANTE",     "blé",      "très-haut", "2015",   "x\ny",     "观察",
        // deletions by later rules can expose matches for earlier rules
        "06 le 12 34 56 78", "A B le C D", "I.N.R.A.", "06 12\n34 56 78",
    };
    std::string s;
    const std::size_t n = rng.uniform(0, 40);
    for (std::size_t i = 0; i < n; ++i) {
        if (!s.empty()) s += rng.uniform01() < 0.15 ? "\n" : " ";
        s += pieces[std::size_t(rng.uniform(0, pieces.size() - 1))];
    }
    return s;
}

}  // namespace

TEST_CASE("url and phone removal", "[clean]") {
    CHECK(strip_urls_phones("Visitez http://ex.fr svp") == "Visitez svp");
    CHECK(strip_urls_phones("appelez 06 12 34 56 78 vite") == "appelez vite");
    CHECK(strip_urls_phones("") == "");
    CHECK(strip_urls_phones("voir www.pestobserver.fr aussi") == "voir aussi");
    CHECK(strip_urls_phones("tel 06.12.34.56.78 ou +33 06 12 34 56 78 fin") == "tel ou fin");
    CHECK(strip_urls_phones("compact 0612345678 fin") == "compact fin");
    SECTION("digit runs that are not phones survive") {
        CHECK(strip_urls_phones("l'année 2015 compte 365 jours") == "l'année 2015 compte 365 jours");
        CHECK(strip_urls_phones("code 123456789012 fin") == "code 123456789012 fin");
    }
    SECTION("counts removals") {
        RemovedStats stats;
        strip_urls_phones("http://a.fr et 06 12 34 56 78 et https://b.fr", &stats);
        CHECK(stats.urls == 2);
        CHECK(stats.phones == 1);
    }
}

TEST_CASE("spaced letter run removal", "[clean]") {
    RemovedStats stats;
    CHECK(remove_spaced_letter_runs("B U L L E T I N DE SANTE", &stats) == "DE SANTE");
    CHECK(stats.spaced_runs == 1);
    CHECK(remove_spaced_letter_runs("A B fin") == "A B fin");
    CHECK(remove_spaced_letter_runs("x\nB\nU\nL\nL\nE\nT\nI\nN\ny") == "x\ny");
    SECTION("matches the independent token-run oracle on random inputs") {
        SplitMix64 rng(31);
        for (int i = 0; i < 300; ++i) {
            const std::string input = random_ocr_text(rng);
            const std::string output = remove_spaced_letter_runs(input);
            CHECK(word_list(output) == oracle::spaced_run_survivors(input));
        }
    }
}

TEST_CASE("repeat collapsing", "[clean]") {
    CHECK(collapse_repeats("fini...!!!") == "fini.!");
    CHECK(collapse_repeats("a   b") == "a b");
    CHECK(collapse_repeats("a\n\n\nb") == "a\nb");
    CHECK(collapse_repeats("ça va?? oui!! bien...") == "ça va? oui! bien.");
}

TEST_CASE("stopword removal", "[clean]") {
    const std::set<std::string> stops = {"le", "de"};
    CHECK(remove_stopwords("le seuil de danger", stops) == "seuil danger");
    CHECK(remove_stopwords("texte intact", {}) == "texte intact");
    CHECK(remove_stopwords("Le LE le", {"le"}) == "");
    SECTION("counts and order preservation") {
        RemovedStats stats;
        const std::string out = remove_stopwords("le vol de la pyrale", {"le", "de", "la"}, &stats);
        CHECK(out == "vol pyrale");
        CHECK(stats.stopwords == 3);
    }
}

TEST_CASE("short line dropping", "[clean]") {
    CHECK(drop_short_lines("pyrale 5\nle seuil est atteint", 3) == "le seuil est atteint");
    CHECK(drop_short_lines("a b c", 3) == "a b c");
    CHECK(drop_short_lines("un deux\ntrois quatre cinq", 1) == "un deux\ntrois quatre cinq");
    RemovedStats stats;
    drop_short_lines("a\nbb cc\nx y z", 3, &stats);
    CHECK(stats.short_lines == 2);
}

TEST_CASE("document cleaning composition", "[clean]") {
    const CleaningConfig cfg = CleaningConfig::classification();

    SECTION("vertical header only collapses to the empty document") {
        RawDocument doc;
        doc.id = "v";
        doc.text = "B U L L E T I N";
        const CleanedDocument cleaned = clean_document(doc, cfg);
        CHECK(cleaned.text.empty());
        CHECK(cleaned.is_empty());
        CHECK(cleaned.word_count == 0);
    }

    SECTION("clitic apostrophes split and the clitic is removable as a stopword") {
        RawDocument doc;
        doc.id = "c";
        doc.text = "note l'apparition des premiers pucerons sur la parcelle";
        const CleanedDocument cleaned = clean_document(doc, cfg);
        CHECK(cleaned.text == "note apparition premiers pucerons parcelle");
    }

    SECTION("intra-word hyphen survives punctuation stripping") {
        RawDocument doc;
        doc.id = "h";
        doc.text = "le stade mi-floraison est observé partout cette semaine";
        const CleanedDocument cleaned = clean_document(doc, cfg);
        CHECK(cleaned.text.find("mi-floraison") != std::string::npos);
    }

    SECTION("removed_stats are populated") {
        RawDocument doc;
        doc.id = "s";
        doc.text = "contact http://ex.fr ou 06 12 34 56 78\n"
                   "B U L L E T I N DE LA SANTE DES CULTURES\n"
                   "le seuil est atteint sur la parcelle du nord\n"
                   "page 2\n";
        const CleanedDocument cleaned = clean_document(doc, cfg);
        CHECK(cleaned.removed_stats.urls == 1);
        CHECK(cleaned.removed_stats.phones == 1);
        CHECK(cleaned.removed_stats.spaced_runs == 1);
        CHECK(cleaned.removed_stats.short_lines >= 1);
        CHECK(cleaned.removed_stats.stopwords >= 3);
    }
}

TEST_CASE("cleaning invariants over random inputs", "[clean][property]") {
    const CleaningConfig cfg = CleaningConfig::classification();
    SplitMix64 rng(73);
    for (int i = 0; i < 300; ++i) {
        const std::string input = random_ocr_text(rng);
        const std::string once = clean_text(input, cfg);

        // idempotence
        CHECK(clean_text(once, cfg) == once);
        // monotonic length
        CHECK(once.size() <= input.size());
        // rule soundness on the composed output
        RemovedStats stats;
        CHECK(strip_urls_phones(once, &stats) == once);
        CHECK(stats.urls == 0);
        CHECK(stats.phones == 0);
        CHECK(word_list(remove_spaced_letter_runs(once)) == word_list(once));
        for (const auto& line : text::split_lines(once)) {
            CHECK(text::count_words(line) >= cfg.min_line_words);
        }
        for (const auto& word : text::words(once)) {
            CHECK_FALSE(cfg.stopword_list.contains(utf8::canonical(word)));
        }
    }
}

TEST_CASE("per-rule monotonic length and order preservation", "[clean][property]") {
    SplitMix64 rng(99);
    const std::set<std::string>& stops = default_french_stopwords();
    for (int i = 0; i < 200; ++i) {
        const std::string input = random_ocr_text(rng);
        const std::string norm = text::normalize_whitespace(input);

        for (const auto& [name, output] :
             std::vector<std::pair<std::string, std::string>>{
                 {"urls", strip_urls_phones(norm)},
                 {"runs", remove_spaced_letter_runs(norm)},
                 {"repeats", collapse_repeats(norm)},
                 {"stopwords", remove_stopwords(norm, stops)},
                 {"lines", drop_short_lines(norm, 3)}}) {
            INFO(name << " on: " << norm);
            CHECK(output.size() <= norm.size());
            // token-deleting rules preserve the relative order of survivors
            if (name != "repeats") CHECK(is_subsequence(word_list(output), word_list(norm)));
        }
    }
}

TEST_CASE("cleaning suite over the ocr fixture corpus", "[clean]") {
    const CleaningConfig cfg = CleaningConfig::classification();
    const auto docs = synth::make_ocr_fixtures(100, 2024);
    REQUIRE(docs.size() == 100);

    for (const auto& doc : docs) {
        const CleanedDocument cleaned = clean_document(doc, cfg);
        // idempotence of the full document path
        const RawDocument again{doc.id, doc.source_kind, cleaned.text, {}, {}};
        CHECK(clean_document(again, cfg).text == cleaned.text);
        CHECK(cleaned.text.size() <= doc.text.size());
        CHECK(cleaned.word_count == text::count_words(cleaned.text));
    }
}

TEST_CASE("tweet profile strips urls and phones only", "[clean]") {
    const CleaningConfig cfg = CleaningConfig::tweet();
    CHECK(clean_text("Vu! du mildiou, photos: http://t.co/abc #vigne", cfg) ==
          "Vu! du mildiou, photos: #vigne");
    CHECK(clean_text("rappel   au 06 12 34 56 78, merci...", cfg) == "rappel au , merci...");
    // no stopword, punctuation, case or short-line handling
    CHECK(clean_text("le la les", cfg) == "le la les");
}

TEST_CASE("cleaning config round-trips through json", "[clean]") {
    CleaningConfig cfg = CleaningConfig::lm_corpus();
    cfg.min_line_words = 4;
    const CleaningConfig back = CleaningConfig::from_json(cfg.to_json());
    CHECK(back.min_line_words == 4);
    CHECK_FALSE(back.remove_stopwords);
    CHECK(back.stopword_list == cfg.stopword_list);
    CHECK_THROWS_AS(CleaningConfig::from_json(json{{"min_line_words", 0}}), ConfigError);
}
