#include <catch2/catch.hpp>

#include "phyto/rng.hpp"
#include "phyto/text.hpp"
#include "phyto/utf8.hpp"

using namespace phyto;

TEST_CASE("utf8 validity detection", "[utf8]") {
    CHECK(utf8::is_valid("plain ascii"));
    CHECK(utf8::is_valid("blé sève été"));
    CHECK_FALSE(utf8::is_valid("caf\xe9"));          // latin-1 é
    CHECK_FALSE(utf8::is_valid("\xc3"));             // truncated sequence
    CHECK_FALSE(utf8::is_valid("\xc0\xaf"));         // overlong
    CHECK_FALSE(utf8::is_valid("\xed\xa0\x80"));     // surrogate
}

TEST_CASE("latin-1 fallback reencodes to utf-8", "[utf8]") {
    const std::string latin1 = "caf\xe9 bl\xe9";
    const std::string converted = utf8::latin1_to_utf8(latin1);
    CHECK(utf8::is_valid(converted));
    CHECK(converted == "café blé");
}

TEST_CASE("encode and decode round-trip", "[utf8]") {
    SplitMix64 rng(7);
    for (int i = 0; i < 200; ++i) {
        std::u32string cps;
        const std::size_t n = rng.uniform(0, 40);
        for (std::size_t k = 0; k < n; ++k) {
            char32_t cp;
            do {
                cp = char32_t(rng.uniform(1, 0x2FFF));
            } while (cp >= 0xD800 && cp <= 0xDFFF);
            cps.push_back(cp);
        }
        CHECK(utf8::decode(utf8::encode(cps)) == cps);
    }
}

TEST_CASE("french lowercase", "[utf8]") {
    CHECK(utf8::to_lower(U'A') == U'a');
    CHECK(utf8::to_lower(char32_t(0xC9)) == char32_t(0xE9));    // É → é
    CHECK(utf8::to_lower(char32_t(0x152)) == char32_t(0x153));  // Œ → œ
    CHECK(utf8::to_lower(char32_t(0x178)) == char32_t(0xFF));   // Ÿ → ÿ
    CHECK(utf8::to_lower(char32_t(0xD7)) == char32_t(0xD7));    // × untouched
    CHECK(utf8::to_lower(U'é') == U'é');
}

TEST_CASE("combining marks compose to precomposed french letters", "[utf8]") {
    // "étés" written with combining acute accents
    const std::string decomposed = "e\xcc\x81te\xcc\x81s";
    CHECK(utf8::canonical(decomposed) == "étés");
    // cedilla
    const std::string facade = "fac\xcc\xa7" "ade";
    CHECK(utf8::canonical(facade) == "façade");
}

TEST_CASE("canonical form lowercases, trims and collapses whitespace", "[utf8]") {
    CHECK(utf8::canonical("  Blé ") == "blé");
    CHECK(utf8::canonical("Pyrale\tdu   Maïs") == "pyrale du maïs");
    CHECK(utf8::canonical("MILDIOU") == "mildiou");
    CHECK(utf8::canonical("") == "");
    CHECK(utf8::canonical("   ") == "");
    // nbsp is whitespace
    CHECK(utf8::canonical("bl\xc3\xa9\xc2\xa0tendre") == "blé tendre");
}

TEST_CASE("uppercase letter classification covers accented capitals", "[utf8]") {
    CHECK(utf8::is_upper_letter(U'B'));
    CHECK(utf8::is_upper_letter(char32_t(0xC9)));  // É
    CHECK_FALSE(utf8::is_upper_letter(U'b'));
    CHECK_FALSE(utf8::is_upper_letter(U'é'));
    CHECK_FALSE(utf8::is_upper_letter(U'3'));
    CHECK_FALSE(utf8::is_upper_letter(char32_t(0xD7)));  // ×
}

TEST_CASE("word splitting and counting", "[text]") {
    CHECK(text::count_words("") == 0);
    CHECK(text::count_words("  ") == 0);
    CHECK(text::count_words("le seuil est atteint") == 4);
    CHECK(text::count_words("a\nb\tc") == 3);
    const auto words = text::words(" un  deux\ntrois ");
    REQUIRE(words.size() == 3);
    CHECK(words[0] == "un");
    CHECK(words[2] == "trois");
}

TEST_CASE("whitespace normalization keeps single newlines", "[text]") {
    CHECK(text::normalize_whitespace("a   b") == "a b");
    CHECK(text::normalize_whitespace("a\n\n\nb") == "a\nb");
    CHECK(text::normalize_whitespace("a \n b") == "a\nb");
    CHECK(text::normalize_whitespace("  a b  ") == "a b");
    CHECK(text::normalize_whitespace("") == "");
    CHECK(text::normalize_whitespace("\n\n") == "");
    // idempotent
    SplitMix64 rng(11);
    const std::string alphabet = "ab \n\t.";
    for (int i = 0; i < 200; ++i) {
        std::string s;
        const std::size_t n = rng.uniform(0, 30);
        for (std::size_t k = 0; k < n; ++k) s.push_back(alphabet[rng.uniform(0, alphabet.size() - 1)]);
        const std::string once = text::normalize_whitespace(s);
        CHECK(text::normalize_whitespace(once) == once);
    }
}

TEST_CASE("line splitting", "[text]") {
    const auto lines = text::split_lines("a\nb\n\nc");
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "a");
    CHECK(lines[2] == "");
    CHECK(text::split_lines("").empty());
}
