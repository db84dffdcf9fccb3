#include "selfendorse/text.hpp"

#include <gtest/gtest.h>

#include <clocale>
#include <cwchar>
#include <cwctype>
#include <random>

using namespace selfendorse;

namespace {

using Tokens = std::vector<std::string>;

/// Reference tokenizer built on the C library's UTF-8 decoder and wide
/// character classes; shares no code with the module.
Tokens reference_tokenize(const std::string& text)
{
    static const bool locale_ok = std::setlocale(LC_CTYPE, "C.UTF-8") != nullptr;
    EXPECT_TRUE(locale_ok);
    Tokens out;
    std::wstring current;
    auto flush = [&] {
        if (current.empty()) return;
        std::string bytes;
        std::mbstate_t state{};
        for (wchar_t wc : current) {
            char buf[MB_LEN_MAX];
            const auto n = std::wcrtomb(buf, wc, &state);
            bytes.append(buf, n);
        }
        out.push_back(bytes);
        current.clear();
    };
    std::mbstate_t state{};
    const char* p = text.data();
    const char* end = text.data() + text.size();
    while (p < end) {
        wchar_t wc = 0;
        const auto n = std::mbrtowc(&wc, p, static_cast<std::size_t>(end - p), &state);
        if (n == static_cast<std::size_t>(-1) || n == static_cast<std::size_t>(-2)) {
            flush();
            state = {};
            ++p;
            continue;
        }
        p += n == 0 ? 1 : n;
        if (std::iswalnum(static_cast<wint_t>(wc))) {
            current.push_back(static_cast<wchar_t>(std::towlower(static_cast<wint_t>(wc))));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

// 50 strings: ASCII prose, punctuation of every kind, digits, accented Latin,
// Greek, Cyrillic, CJK, and invalid UTF-8.
const std::vector<std::string> kTokenizeFixture = {
    "Marie Curie won 2 Nobel Prizes.",
    "",
    "A—B",
    "   leading and trailing   ",
    "tabs\tand\nnewlines\r\nmixed",
    "don't stop",
    "e-mail, co-operate; re:think",
    "3.14159 is pi",
    "1,200 dollars",
    "ALL CAPS SHOUT",
    "CamelCaseWord",
    "snake_case_word",
    "x86_64 and ARMv8",
    "(parenthetical) [bracketed] {braced}",
    "\"quoted\" 'single'",
    "semi;colon:colon",
    "slash/separated\\back",
    "hash#tag @mention",
    "100% sure & more",
    "a+b=c",
    "question? exclamation! done.",
    "ellipsis... continues",
    "Café naïve résumé",
    "ÉCOLE À PARIS",
    "München Straße",
    "Łódź and Kraków",
    "České Budějovice",
    "Señor Peña",
    "Αθήνα ΕΛΛΑΔΑ",
    "Москва РОССИЯ",
    "東京都 大阪",
    "ひらがなとカタカナ",
    "mixed東京ascii",
    "emoji \U0001F600 between",
    "bullet • point",
    "curly “quotes” here",
    "non breaking space",
    "en–dash range 1990–2000",
    "trailing punctuation!!!",
    "12th of May, 2021",
    "v2.0.1-beta",
    "A.B.C. initials",
    "Dr. Who and Mr. Smith",
    "invalid \xff byte",
    "truncated \xe2\x82 sequence",
    "UPPERÅngström",
    "zürich-ZÜRICH",
    "tab\tonly",
    "1 2 3 4 5",
    "end",
};

std::string join(const Tokens& tokens)
{
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::string strip_space(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (!is_space(c)) out.push_back(c);
    }
    return out;
}

}  // namespace

TEST(Tokenize, Examples)
{
    EXPECT_EQ(tokenize("Marie Curie won 2 Nobel Prizes."), (Tokens{"marie", "curie", "won", "2", "nobel", "prizes"}));
    EXPECT_EQ(tokenize(""), Tokens{});
    EXPECT_EQ(tokenize("A—B"), (Tokens{"a", "b"}));
    EXPECT_EQ(tokenize("CafÉ ΑΒ"), (Tokens{"café", "αβ"}));
}

TEST(Tokenize, MatchesReferenceOnFixture)
{
    ASSERT_EQ(kTokenizeFixture.size(), 50u);
    for (const auto& text : kTokenizeFixture) {
        EXPECT_EQ(tokenize(text), reference_tokenize(text)) << "input: " << text;
    }
}

TEST(Tokenize, IdempotentUnderRejoin)
{
    for (const auto& text : kTokenizeFixture) {
        const auto once = tokenize(text);
        EXPECT_EQ(tokenize(join(once)), once) << text;
    }
    std::mt19937_64 rng(11);
    const std::string alphabet = "abcXYZ019 .,;!?-'\"é";
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const auto len = rng() % 40;
        for (std::size_t i = 0; i < len; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
        const auto once = tokenize(text);
        EXPECT_EQ(tokenize(join(once)), once);
    }
}

TEST(SplitSentences, Examples)
{
    using S = std::vector<std::string>;
    EXPECT_EQ(split_sentences("She was born in 1867. She died in 1934."), (S{"She was born in 1867.", "She died in 1934."}));
    EXPECT_EQ(split_sentences("Hello"), S{"Hello"});
    EXPECT_EQ(split_sentences(""), S{});
    EXPECT_EQ(split_sentences("   \n "), S{});
    EXPECT_EQ(split_sentences("Really?! Yes."), (S{"Really?!", "Yes."}));
    EXPECT_EQ(split_sentences("He said \"Stop.\" Then left."), (S{"He said \"Stop.\"", "Then left."}));
    EXPECT_EQ(split_sentences("It cost 3.5 million."), S{"It cost 3.5 million."});
}

TEST(SplitSentences, TwentySentenceFixture)
{
    // Hand-annotated: 20 sentences, with abbreviations, initials, decimals,
    // quotes, brackets and mixed terminators.
    const std::string paragraph =
        "Dr. Alice Moreau was born in Lyon in 1902. "
        "Her father, Mr. Paul Moreau, taught at the local school. "
        "She studied physics at the U.S. branch of a French institute. "
        "In 1925 she moved to Paris! "
        "Was she happy there? "
        "Her letters suggest so. "
        "She met J. R. Tolland, a chemist, in 1927. "
        "Together they measured the constant to 3.14159 precision. "
        "\"It was astonishing,\" she wrote. "
        "The result (published in 1931) drew wide attention. "
        "Prof. Tolland later moved to St. Louis. "
        "She stayed in France. "
        "During the war she hid students in her lab... "
        "After 1945 she led the institute. "
        "She received e.g. the Lorne Prize and other honours. "
        "Her students included Ms. Ilse Varga. "
        "She retired in 1967. "
        "Did she stop working? "
        "No! "
        "She published until her death in 1980.";
    const auto sentences = split_sentences(paragraph);
    ASSERT_EQ(sentences.size(), 20u);
    EXPECT_EQ(sentences[0], "Dr. Alice Moreau was born in Lyon in 1902.");
    EXPECT_EQ(sentences[6], "She met J. R. Tolland, a chemist, in 1927.");
    EXPECT_EQ(sentences[8], "\"It was astonishing,\" she wrote.");
    EXPECT_EQ(sentences[10], "Prof. Tolland later moved to St. Louis.");
    EXPECT_EQ(sentences[12], "During the war she hid students in her lab...");
    EXPECT_EQ(sentences[19], "She published until her death in 1980.");
}

TEST(SplitSentences, PreservesEveryNonWhitespaceCharacter)
{
    std::mt19937_64 rng(5);
    const std::vector<std::string> words = {"Dr.", "ran", "fast.", "Why?", "no!", "U.S.", "3.5", "\"ok.\"",
                                            "(a)", "J.", "end", "...", "\n", "\t", "e.g.", "A"};
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const auto n = rng() % 25;
        for (std::size_t i = 0; i < n; ++i) {
            text += words[rng() % words.size()];
            text.push_back(' ');
        }
        const auto sentences = split_sentences(text);
        std::string rejoined;
        for (const auto& s : sentences) {
            EXPECT_FALSE(s.empty());
            EXPECT_EQ(s, trim(s));
            rejoined += s + " ";
        }
        EXPECT_EQ(strip_space(rejoined), strip_space(text)) << text;
    }
}

TEST(TextHelpers, WhitespaceAndContainment)
{
    EXPECT_EQ(trim("  a b \n"), "a b");
    EXPECT_EQ(normalize_whitespace(" a \n\t b  c "), "a b c");
    EXPECT_EQ(to_lower_ascii("AbCÉ"), "abcÉ");
    EXPECT_TRUE(contains_normalized("The City\nof Light", "city of light"));
    EXPECT_FALSE(contains_normalized("Paris", "London"));
    EXPECT_FALSE(contains_normalized("anything", ""));  // an empty alias never counts as found
}
