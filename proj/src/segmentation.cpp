#include "decompeval/segmentation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "decompeval/core.hpp"
#include "decompeval/errors.hpp"

namespace decompeval {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a closing quote/bracket starting at `pos`, 0 if none. Handles
// ASCII closers plus UTF-8 right single/double quotation marks.
std::size_t closer_length(std::string_view text, std::size_t pos) {
  const char c = text[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '}') return 1;
  if (pos + 2 < text.size() && static_cast<unsigned char>(c) == 0xE2 &&
      static_cast<unsigned char>(text[pos + 1]) == 0x80) {
    const auto third = static_cast<unsigned char>(text[pos + 2]);
    if (third == 0x99 || third == 0x9D) return 3;
  }
  return 0;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

const std::set<std::string>& default_abbreviations() {
  static const std::set<std::string> list = {
      "mr.",   "mrs.",  "ms.",   "dr.",   "prof.", "sr.",   "jr.",  "st.",  "vs.",
      "etc.",  "e.g.",  "i.e.",  "u.s.",  "u.k.",  "u.n.",  "d.c.", "a.m.", "p.m.",
      "inc.",  "ltd.",  "co.",   "corp.", "mt.",   "ft.",   "gen.", "gov.", "sen.",
      "rep.",  "lt.",   "col.",  "capt.", "approx.", "dept.", "est.", "fig.", "jan.",
      "feb.",  "mar.",  "apr.",  "jun.",  "jul.",  "aug.",  "sep.", "sept.", "oct.",
      "nov.",  "dec.",  "ave.",  "blvd.", "u.s.a.", "ph.d.", "cf.", "al.",
  };
  return list;
}

SentenceSplitter::SentenceSplitter() : abbreviations_(default_abbreviations()) {}

SentenceSplitter::SentenceSplitter(std::set<std::string> abbreviations) {
  for (const auto& entry : abbreviations) abbreviations_.insert(lowercase(entry));
}

SentenceSplitter SentenceSplitter::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read abbreviation list " + path.string());
  std::set<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    auto entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    entries.insert(std::move(entry));
  }
  return SentenceSplitter(std::move(entries));
}

bool SentenceSplitter::is_abbreviation(std::string_view token) const {
  // Strip opening punctuation such as "(e.g." or "\"Mr.".
  while (!token.empty() && (token.front() == '(' || token.front() == '[' ||
                            token.front() == '"' || token.front() == '\'')) {
    token.remove_prefix(1);
  }
  if (token.size() == 2 && std::isupper(static_cast<unsigned char>(token[0]))) {
    return true;  // single-letter initial, "J."
  }
  return abbreviations_.count(lowercase(token)) > 0;
}

SentenceSplit SentenceSplitter::split(std::string_view text) const {
  if (trim(text).empty()) throw DegenerateInputError("cannot split empty text into sentences");

  SentenceSplit result;
  const std::size_t n = text.size();
  std::size_t start = 0;
  while (start < n && is_space(text[start])) ++start;

  auto emit = [&](std::size_t end) {
    while (end > start && is_space(text[end - 1])) --end;
    if (end > start) {
      result.spans.emplace_back(start, end);
      result.sentences.emplace_back(text.substr(start, end - start));
    }
  };

  std::size_t i = start;
  while (i < n) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < n && is_terminal(text[run_end])) ++run_end;
    std::size_t end = run_end;
    while (end < n) {
      const auto len = closer_length(text, end);
      if (len == 0) break;
      end += len;
    }
    const bool at_break = end == n || is_space(text[end]);
    bool boundary = at_break;
    if (boundary && end < n && run_end == i + 1 && text[i] == '.' && end == run_end) {
      std::size_t token_begin = i;
      while (token_begin > start && !is_space(text[token_begin - 1])) --token_begin;
      if (is_abbreviation(text.substr(token_begin, run_end - token_begin))) boundary = false;
    }
    if (boundary) {
      emit(end);
      start = end;
      while (start < n && is_space(text[start])) ++start;
      i = start;
    } else {
      i = end;
    }
  }
  if (start < n) emit(n);
  return result;
}

SentenceSplit split_sentences(std::string_view text) {
  static const SentenceSplitter splitter;
  return splitter.split(text);
}

}  // namespace decompeval
