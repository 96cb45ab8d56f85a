#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fairsumm::text {

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// alphanumeric. Bytes >= 0x80 (UTF-8 continuation/lead bytes) are kept as word
/// characters so non-ASCII words survive intact. Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Number of whitespace-separated tokens (Python's str.split() semantics on ASCII whitespace).
std::size_t whitespace_word_count(std::string_view text);

/// Entity key: NFKC, case-folded, leading/trailing punctuation stripped, internal
/// whitespace collapsed to a single space. No alias resolution.
std::string normalise_key(std::string_view surface);

/// True when the normalised form of `needle` occurs in the normalised form of `haystack`.
bool contains_normalised(std::string_view haystack, std::string_view normalised_needle);

std::string to_lower_ascii(std::string_view s);

/// 64-bit FNV-1a. Stable across platforms; used by the hash-partition stubs.
std::uint64_t fnv1a64(std::string_view data) noexcept;

/// Lowercase hex SHA-256 digest (64 characters).
std::string sha256_hex(std::string_view data);

}  // namespace fairsumm::text
