#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "decompeval/errors.hpp"
#include "decompeval/segmentation.hpp"
#include "fixtures.hpp"

namespace decompeval {
namespace {

TEST(SplitSentences, ThreeSentenceResponse) {
  const auto split = split_sentences(fixtures::kSoupResponse);
  const std::vector<std::string> expected = {"Wow that's a lot of soup.",
                                             "Are you talking about the Fort-Reno Concert?",
                                             "I heard flasher will perform there."};
  EXPECT_EQ(split.sentences, expected);
}

TEST(SplitSentences, SingleSentenceWithoutTerminator) {
  EXPECT_EQ(split_sentences("Hello").sentences, std::vector<std::string>{"Hello"});
}

TEST(SplitSentences, AbbreviationInsideSentence) {
  const auto split = split_sentences("He visited Washington D.C. last week. It rained.");
  EXPECT_EQ(split.sentences,
            (std::vector<std::string>{"He visited Washington D.C. last week.", "It rained."}));
}

TEST(SplitSentences, EmptyInputIsDegenerate) {
  EXPECT_THROW(split_sentences(""), DegenerateInputError);
  EXPECT_THROW(split_sentences(" \n\t "), DegenerateInputError);
}

TEST(SplitSentences, SpansIndexOriginalText) {
  const std::string text = "  First one.  Second one!\nThird?  ";
  const auto split = split_sentences(text);
  ASSERT_EQ(split.sentences.size(), 3u);
  ASSERT_EQ(split.spans.size(), 3u);
  std::size_t previous_end = 0;
  for (std::size_t i = 0; i < split.sentences.size(); ++i) {
    const auto [first, last] = split.spans[i];
    EXPECT_LE(previous_end, first);
    EXPECT_EQ(text.substr(first, last - first), split.sentences[i]);
    // Only whitespace lies between consecutive sentences.
    for (std::size_t k = previous_end; k < first; ++k) {
      EXPECT_TRUE(std::isspace(static_cast<unsigned char>(text[k]))) << k;
    }
    previous_end = last;
  }
}

TEST(SplitSentences, ConcatenationRecoversNonWhitespaceText) {
  const std::string text = fixtures::kSoupHistory;
  std::string joined;
  for (const auto& s : split_sentences(text).sentences) joined += s;
  std::string stripped;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) stripped += c;
  }
  std::string joined_stripped;
  for (char c : joined) {
    if (!std::isspace(static_cast<unsigned char>(c))) joined_stripped += c;
  }
  EXPECT_EQ(joined_stripped, stripped);
}

TEST(SplitSentences, HandLabelledCorpus) {
  std::ifstream in(std::filesystem::path(DECOMPEVAL_TEST_DATA) / "abbreviation_corpus.json");
  const auto corpus = nlohmann::json::parse(in);
  std::size_t sentences = 0;
  for (const auto& item : corpus) {
    const auto expected = item.at("sentences").get<std::vector<std::string>>();
    EXPECT_EQ(split_sentences(item.at("text").get<std::string>()).sentences, expected)
        << item.at("text");
    sentences += expected.size();
  }
  EXPECT_EQ(sentences, 30u);
}

TEST(SplitSentences, Deterministic) {
  EXPECT_EQ(split_sentences(fixtures::kSoupHistory).sentences,
            split_sentences(fixtures::kSoupHistory).sentences);
}

TEST(SentenceSplitter, CustomAbbreviations) {
  const std::string text = "See tab. 3 for details. Done.";
  EXPECT_EQ(split_sentences(text).sentences.size(), 3u);
  const SentenceSplitter splitter({"Tab."});
  EXPECT_EQ(splitter.split(text).sentences,
            (std::vector<std::string>{"See tab. 3 for details.", "Done."}));
}

TEST(SentenceSplitter, FromFile) {
  const auto path = std::filesystem::temp_directory_path() / "decompeval_abbrev_test.txt";
  {
    std::ofstream out(path);
    out << "# extra abbreviations\n\nTab.\nwt.\n";
  }
  const auto splitter = SentenceSplitter::from_file(path);
  std::filesystem::remove(path);
  EXPECT_EQ(splitter.abbreviations(), (std::set<std::string>{"tab.", "wt."}));
  EXPECT_EQ(splitter.split("Its wt. is 3 kg. Light.").sentences.size(), 2u);
}

TEST(SentenceSplitter, MissingFileIsConfigError) {
  EXPECT_THROW(SentenceSplitter::from_file("/nonexistent/abbrev.txt"), ConfigError);
}

}  // namespace
}  // namespace decompeval
