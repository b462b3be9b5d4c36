#include <gtest/gtest.h>

#include "procmine/text.hpp"

using namespace procmine;

namespace {

std::vector<std::string> texts(const std::vector<Sentence>& ss) {
  std::vector<std::string> out;
  for (const auto& s : ss) out.push_back(s.text);
  return out;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsOnSpace) {
  EXPECT_EQ(tokenize("Power off both power supplies"),
            (std::vector<std::string>{"power", "off", "both", "power", "supplies"}));
}

TEST(Tokenize, KeepsSlashAndDotsInsideTokens) {
  EXPECT_EQ(tokenize("I/O group"), (std::vector<std::string>{"i/o", "group"}));
  EXPECT_EQ(tokenize("Install 7.1.0.4 today."), (std::vector<std::string>{"install", "7.1.0.4", "today"}));
  EXPECT_EQ(tokenize("power-cycle the node"), (std::vector<std::string>{"power-cycle", "the", "node"}));
}

TEST(Tokenize, EmptyAndPunctuationOnly) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize(" ,;: ").empty());
}

TEST(Tokenize, IsDeterministic) {
  const std::string s = "If the LEDs do not show a fault, power off both power supplies.";
  EXPECT_EQ(tokenize(s), tokenize(s));
}

TEST(Segment, SplitsOnTerminalPunctuation) {
  EXPECT_EQ(texts(segment_sentences("Wait 20 seconds. Then replace the power cords.")),
            (std::vector<std::string>{"Wait 20 seconds.", "Then replace the power cords."}));
}

TEST(Segment, SingleSentenceStaysWhole) {
  const auto ss = segment_sentences("If the node error is still reported, replace the node canister.");
  ASSERT_EQ(ss.size(), 1u);
  EXPECT_EQ(ss[0].text, "If the node error is still reported, replace the node canister.");
}

TEST(Segment, VersionNumbersAndAbbreviationsDoNotSplit) {
  EXPECT_EQ(texts(segment_sentences("Use v7.1.0.4 now. Restart.")),
            (std::vector<std::string>{"Use v7.1.0.4 now.", "Restart."}));
  EXPECT_EQ(segment_sentences("Remove the cover, e.g. the left one. Then wait.").size(), 2u);
  EXPECT_EQ(segment_sentences("See Fig. 3 for details.").size(), 1u);
}

TEST(Segment, LowercaseAfterPeriodDoesNotSplit) {
  EXPECT_EQ(segment_sentences("Open the file config.ini and save it.").size(), 1u);
}

TEST(Segment, SpansAreOrderedAndInsideText) {
  const std::string text = "Open the panel. Remove the drive! Is it seated? Close the panel.";
  const auto ss = segment_sentences(text);
  ASSERT_EQ(ss.size(), 4u);
  std::size_t last_end = 0;
  for (const auto& s : ss) {
    EXPECT_LE(last_end, s.char_span.begin);
    EXPECT_LE(s.char_span.end, text.size());
    EXPECT_EQ(text.substr(s.char_span.begin, s.char_span.end - s.char_span.begin), s.text);
    EXPECT_FALSE(s.tokens.empty());
    last_end = s.char_span.end;
  }
}

TEST(Segment, NeverReturnsEmptySentences) {
  for (const char* t : {"", "   ", "...", ". . .", "A. B. C."}) {
    for (const auto& s : segment_sentences(t)) EXPECT_FALSE(trim(s.text).empty()) << t;
  }
}

TEST(Segment, NewlinesAreHardBoundaries) {
  EXPECT_EQ(texts(segment_sentences("Supported versions\nVersion 2 and later")),
            (std::vector<std::string>{"Supported versions", "Version 2 and later"}));
}

TEST(Whitespace, CollapseAndTrim) {
  EXPECT_EQ(collapse_whitespace("  a \t b\n\nc  "), "a b c");
  EXPECT_EQ(trim("  x y  "), "x y");
  EXPECT_EQ(to_lower("MiXeD"), "mixed");
}
