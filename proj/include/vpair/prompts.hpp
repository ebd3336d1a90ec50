#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace vpair {

enum class AspectKind { General, Temporal, Spatial };

inline constexpr std::array<AspectKind, 3> kAllAspects = {
    AspectKind::General, AspectKind::Temporal, AspectKind::Spatial};

// Aspects that produce preference pairs; General only supplies the rejected side.
inline constexpr std::array<AspectKind, 2> kPairedAspects = {
    AspectKind::Temporal, AspectKind::Spatial};

std::string_view aspect_name(AspectKind aspect);
std::optional<AspectKind> aspect_from_name(std::string_view name);

struct PromptRegistry {
    std::string base_query;
    std::string temporal_prompt;
    std::string spatial_prompt;
    std::string separator = " ";
    // Stamped into every downstream artifact. Left empty, it is derived
    // from the prompt texts so it always changes when they do.
    std::string registry_version;
};

PromptRegistry default_prompt_registry();

std::string derive_registry_version(const PromptRegistry& registry);

// Returns the registry with registry_version filled in when absent.
PromptRegistry finalize(PromptRegistry registry);

struct AspectQuery {
    std::string base_query;
    AspectKind aspect = AspectKind::General;
    std::string aspect_prompt;  // empty for General
    std::string composed_text;
};

// Pure concatenation: General keeps the base query untouched, the other
// aspects append their prompt after the configured separator.
AspectQuery compose_query(const PromptRegistry& registry, AspectKind aspect);

}  // namespace vpair
