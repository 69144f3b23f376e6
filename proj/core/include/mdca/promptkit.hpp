/// @file promptkit.hpp
/// @brief Prompt components, the P0-P11 composition matrix, and prompt rendering.

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mdca/structured_io.hpp"

namespace mdca {

enum class ComponentKind { kRole, kTask, kTaxonomy, kVerification, kStructure, kPrinciples };

inline constexpr std::array<ComponentKind, 6> kComponentOrder{
    ComponentKind::kRole,      ComponentKind::kTask,      ComponentKind::kTaxonomy,
    ComponentKind::kVerification, ComponentKind::kStructure, ComponentKind::kPrinciples};

std::string_view to_string(ComponentKind kind);
ComponentKind parse_component_kind(std::string_view name);

enum class Language { kZh, kEn };

std::string_view to_string(Language lang);
Language parse_language(std::string_view name);

struct ExampleReport {
    std::string findings;
    std::string conclusion;
};

/// Component texts keyed by (kind, language).
class ComponentRegistry {
public:
    void set(ComponentKind kind, Language lang, std::string text);
    const std::string* find(ComponentKind kind, Language lang) const;

    /// Merges {language, components: {kind: text}} into this registry.
    void merge_json(const Json& doc);

    static ComponentRegistry builtin();
    static ComponentRegistry load(const std::filesystem::path& path);

private:
    std::map<std::pair<ComponentKind, Language>, std::string> texts_;
};

struct PromptConfig {
    std::string id;
    std::array<bool, 6> flags{};  // indexed in kComponentOrder order
    std::size_t n_examples = 0;

    bool has(ComponentKind kind) const { return flags[static_cast<std::size_t>(kind)]; }
    bool operator==(const PromptConfig&) const = default;
};

/// The twelve configurations P0..P11 in order.
const std::vector<PromptConfig>& builtin_configs();

/// Throws UnknownConfig.
const PromptConfig& find_config(std::string_view id);

struct ComposedSection {
    std::variant<ComponentKind, std::size_t> source;  // component or 0-based example index
    std::string text;
};

struct ComposedPrompt {
    std::string config_id;
    std::string system_text;
    std::vector<ComposedSection> sections;
    std::size_t char_length = 0;  // code points of system_text
};

/// Renders the enabled components in fixed order followed by the first
/// n_examples examples of the pool, each as a labeled section. Throws
/// MissingComponent or InsufficientExamples.
ComposedPrompt compose(const PromptConfig& config, const ComponentRegistry& registry,
                       const std::vector<ExampleReport>& pool, Language language);

/// JSONL of {findings, conclusion}.
std::vector<ExampleReport> load_example_pool(const std::filesystem::path& path);

/// 25 demonstration reports: the bilingual sample report followed by
/// deterministic synthetic ones.
std::vector<ExampleReport> builtin_example_pool(Language language);

}  // namespace mdca
