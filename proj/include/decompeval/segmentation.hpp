#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace decompeval {

struct SentenceSplit {
  std::vector<std::string> sentences;
  // Byte offsets [first, second) into the original text.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
};

// Rule-based sentence splitter.
//
// A boundary is a run of terminal punctuation (. ! ?), optionally followed by
// closing quotes or brackets, followed by whitespace or end of text. A period
// ending a known abbreviation ("Mr.", "U.S.", ...) does not end a sentence.
class SentenceSplitter {
 public:
  SentenceSplitter();  // built-in English abbreviation list
  explicit SentenceSplitter(std::set<std::string> abbreviations);

  // One abbreviation per line, blank lines and '#' comments ignored.
  static SentenceSplitter from_file(const std::filesystem::path& path);

  // Throws DegenerateInputError on text that is empty after trimming.
  SentenceSplit split(std::string_view text) const;

  const std::set<std::string>& abbreviations() const noexcept { return abbreviations_; }

 private:
  bool is_abbreviation(std::string_view token) const;

  std::set<std::string> abbreviations_;  // stored lowercase
};

SentenceSplit split_sentences(std::string_view text);

const std::set<std::string>& default_abbreviations();

}  // namespace decompeval
