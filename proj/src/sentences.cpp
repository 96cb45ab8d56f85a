#include "fairsumm/sentences.hpp"

#include <algorithm>
#include <set>

#include "fairsumm/text.hpp"

namespace fairsumm {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a closing quote/bracket at `pos`, 0 if none. Handles ASCII and the
// UTF-8 right single/double quotation marks.
std::size_t closer_length(std::string_view s, std::size_t pos) {
  const char c = s[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (s.substr(pos, 3) == "\xE2\x80\x9D" || s.substr(pos, 3) == "\xE2\x80\x99") return 3;
  return 0;
}

bool opens_sentence(std::string_view s, std::size_t pos) {
  const char c = s[pos];
  if (c >= 'A' && c <= 'Z') return true;
  if (c == '"' || c == '\'') return true;
  return s.substr(pos, 3) == "\xE2\x80\x9C" || s.substr(pos, 3) == "\xE2\x80\x98";
}

const std::set<std::string, std::less<>>& abbreviation_set() {
  static const std::set<std::string, std::less<>> set(sentence_abbreviations().begin(),
                                                      sentence_abbreviations().end());
  return set;
}

bool is_abbreviation(std::string_view s, std::size_t period) {
  std::size_t start = period;
  while (start > 0) {
    const char c = s[start - 1];
    const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '.';
    if (!word) break;
    --start;
  }
  if (start == period) return false;
  const std::string token = text::to_lower_ascii(s.substr(start, period - start));
  return abbreviation_set().contains(token);
}

std::string trimmed(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

const std::vector<std::string>& sentence_abbreviations() {
  static const std::vector<std::string> list = {
      "mr",   "mrs",  "ms",   "dr",   "prof", "sr",   "jr",   "st",   "vs",  "etc",
      "inc",  "ltd",  "co",   "corp", "gen",  "gov",  "sen",  "rep",  "rev", "lt",
      "col",  "sgt",  "capt", "cmdr", "adm",  "maj",  "pres", "supt", "jan",
      "feb",  "mar",  "apr",  "jun",  "jul",  "aug",  "sep",  "sept", "oct", "nov",
      "dec",  "u.s",  "u.k",  "u.n",  "e.g",  "i.e",  "a.m",  "p.m",  "d.c", "ft",
      "mt",   "approx", "dept", "govt", "assn", "bros"};
  return list;
}

SentenceSplit split_sentences(std::string_view text) {
  SentenceSplit out;
  if (std::all_of(text.begin(), text.end(), [](char c) { return is_space(static_cast<unsigned char>(c)); })) {
    return out;
  }

  std::size_t span_begin = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size()) {
      if (is_terminator(text[j])) {
        ++j;
      } else if (const std::size_t n = closer_length(text, j); n > 0) {
        j += n;
      } else {
        break;
      }
    }
    std::size_t k = j;
    while (k < text.size() && is_space(static_cast<unsigned char>(text[k]))) ++k;

    const bool at_end = k == text.size();
    const bool boundary = k > j && (at_end || opens_sentence(text, k)) &&
                          !(text[i] == '.' && j == i + 1 && is_abbreviation(text, i));
    if (boundary && !at_end) {
      out.push_back({trimmed(text.substr(span_begin, j - span_begin)), span_begin, k});
      span_begin = k;
    }
    i = j;
  }
  if (span_begin < text.size()) {
    std::string rest = trimmed(text.substr(span_begin));
    if (!rest.empty()) {
      out.push_back({std::move(rest), span_begin, text.size()});
    } else if (!out.empty()) {
      out.back().end = text.size();
    }
  }
  return out;
}

}  // namespace fairsumm
