#include "fairsumm/tfidf.hpp"

#include <algorithm>
#include <cmath>

#include "fairsumm/text.hpp"

namespace fairsumm {

double dot(const SparseVector& a, const SparseVector& b) noexcept {
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

double norm(const SparseVector& v) noexcept { return std::sqrt(dot(v, v)); }

double cosine(const SparseVector& a, const SparseVector& b) noexcept {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::vector<std::string> TfidfModel::terms(std::string_view text) {
  auto tokens = text::tokenize(text);
  std::erase_if(tokens, [](const std::string& t) { return t.size() < 2; });
  return tokens;
}

TfidfModel TfidfModel::fit(std::span<const std::string> documents) {
  TfidfModel model;
  std::vector<std::unordered_map<std::uint32_t, std::size_t>> counts(documents.size());
  std::vector<std::size_t> df;

  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (auto& term : terms(documents[d])) {
      auto [it, inserted] =
          model.vocabulary_.try_emplace(std::move(term), static_cast<std::uint32_t>(df.size()));
      if (inserted) df.push_back(0);
      if (counts[d][it->second]++ == 0) ++df[it->second];
    }
  }

  const double n = static_cast<double>(documents.size());
  model.idf_.resize(df.size());
  for (std::size_t t = 0; t < df.size(); ++t) {
    model.idf_[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }

  model.vectors_.reserve(documents.size());
  for (const auto& c : counts) model.vectors_.push_back(model.weigh(c));
  return model;
}

SparseVector TfidfModel::transform(std::string_view text) const {
  std::unordered_map<std::uint32_t, std::size_t> counts;
  for (const auto& term : terms(text)) {
    if (auto it = vocabulary_.find(term); it != vocabulary_.end()) ++counts[it->second];
  }
  return weigh(counts);
}

SparseVector TfidfModel::weigh(const std::unordered_map<std::uint32_t, std::size_t>& counts) const {
  SparseVector v;
  v.reserve(counts.size());
  for (const auto& [term, tf] : counts) {
    v.emplace_back(term, (1.0 + std::log(static_cast<double>(tf))) * idf_[term]);
  }
  std::sort(v.begin(), v.end());
  const double len = norm(v);
  if (len > 0.0) {
    for (auto& entry : v) entry.second /= len;
  }
  return v;
}

}  // namespace fairsumm
