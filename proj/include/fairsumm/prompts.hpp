#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fairsumm/types.hpp"

namespace fairsumm::harness {

enum class TemplateId { kBaseline, kDebiasInstruction, kDebiasPersona, kStructured, kDebiasReference };

inline constexpr std::array<TemplateId, 5> kAllTemplates = {
    TemplateId::kBaseline, TemplateId::kDebiasInstruction, TemplateId::kDebiasPersona,
    TemplateId::kStructured, TemplateId::kDebiasReference};

/// "baseline", "debias_instruction", "debias_persona", "structured", "debias_reference".
std::string_view template_name(TemplateId id) noexcept;
std::optional<TemplateId> parse_template(std::string_view name) noexcept;

/// One source document as it is handed to a prompt.
struct PromptArticle {
  std::string body;
  std::string publisher;
  std::optional<Leaning> leaning;
};

/// Renders a summarisation prompt with the documents in the given order.
///
/// {Documents}-style templates insert "Document k:\n<body>" blocks separated by a
/// blank line. DebiasReference inserts one
/// "{Publisher: <name>, Leaning: <leaning> Article text: <body> }" block per article
/// and requires publisher and leaning for each (InvalidArgument otherwise).
std::string render_prompt(TemplateId id, std::span<const PromptArticle> articles);

/// Raw template text with its placeholder ("{Documents}" or the per-article block).
std::string_view template_text(TemplateId id) noexcept;

/// Pairwise judge prompt with {source_document}, {summary_a}, {summary_b} substituted.
std::string render_judge_prompt(std::string_view source_document, std::string_view summary_a,
                                std::string_view summary_b);

std::string_view judge_template_text() noexcept;

}  // namespace fairsumm::harness
