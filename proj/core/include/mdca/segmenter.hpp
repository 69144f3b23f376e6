/// @file segmenter.hpp
/// @brief Splits a conclusion section into ordered diagnosis items.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mdca/taxonomy.hpp"

namespace mdca {

/// Splits on enumeration markers ("1." "2、" "①" "(1)" "（1）"); when the text
/// has none, splits on newlines. Text before the first marker is merged into
/// the first item, and everything after the last marker (including wrapped
/// lines) belongs to the last item.
///
/// Throws NoItemsFound when no nonblank fragment exists.
std::vector<DiagnosisItem> segment_conclusion(std::string_view text, const Lexicon& lexicon);

/// Builds a single item from one fragment (used by the segmenter and by
/// callers that already hold line-split text).
DiagnosisItem make_item(std::size_t index, std::string_view raw, const Lexicon& lexicon);

/// The item at index 1. Throws EmptyList on an empty list.
const DiagnosisItem& primary_item(const std::vector<DiagnosisItem>& items);

/// Re-serializes items as a numbered conclusion, one per line ("1. ...").
std::string serialize_items(const std::vector<std::string>& raws);

}  // namespace mdca
