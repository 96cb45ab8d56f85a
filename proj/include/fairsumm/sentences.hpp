#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fairsumm {

struct Sentence {
  /// Sentence content with surrounding whitespace trimmed.
  std::string text;
  /// Byte span [begin, end) in the source. Consecutive spans tile the source exactly;
  /// whitespace between sentences belongs to the preceding span.
  std::size_t begin = 0;
  std::size_t end = 0;
};

using SentenceSplit = std::vector<Sentence>;

/// Rule-based splitter. A sentence ends at '.', '!' or '?' (plus any closing quotes
/// or brackets) followed by whitespace and then an uppercase ASCII letter or an
/// opening quote, or at the end of the text. A '.' ending a known abbreviation
/// ("Dr.", "Mr.", "U.S.", ...) never ends a sentence. Text with no non-whitespace
/// content yields no sentences.
SentenceSplit split_sentences(std::string_view text);

/// The fixed abbreviation list (lowercase, without the final period).
const std::vector<std::string>& sentence_abbreviations();

}  // namespace fairsumm
