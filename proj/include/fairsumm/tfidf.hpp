#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fairsumm {

/// Sparse vector as (term id, weight) pairs sorted by term id.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

double dot(const SparseVector& a, const SparseVector& b) noexcept;
double norm(const SparseVector& v) noexcept;
double cosine(const SparseVector& a, const SparseVector& b) noexcept;

/// TF-IDF over a fixed document collection.
///
/// Tokens are lowercased, split on non-alphanumerics, and tokens of length 1 are
/// dropped. Weights are (1 + ln tf) * (ln((1 + N) / (1 + df)) + 1), and each
/// document vector is L2-normalised.
class TfidfModel {
 public:
  static TfidfModel fit(std::span<const std::string> documents);

  /// Vector of the i-th fitted document.
  const SparseVector& document(std::size_t i) const { return vectors_.at(i); }
  std::size_t size() const noexcept { return vectors_.size(); }
  std::size_t vocabulary_size() const noexcept { return idf_.size(); }

  /// Projects unseen text onto the fitted vocabulary; out-of-vocabulary terms are ignored.
  SparseVector transform(std::string_view text) const;

  static std::vector<std::string> terms(std::string_view text);

 private:
  SparseVector weigh(const std::unordered_map<std::uint32_t, std::size_t>& counts) const;

  std::unordered_map<std::string, std::uint32_t> vocabulary_;
  std::vector<double> idf_;
  std::vector<SparseVector> vectors_;
};

}  // namespace fairsumm
