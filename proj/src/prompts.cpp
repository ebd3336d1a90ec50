#include "vpair/prompts.hpp"

#include "vpair/errors.hpp"
#include "vpair/util.hpp"

namespace vpair {

std::string_view aspect_name(AspectKind aspect) {
    switch (aspect) {
        case AspectKind::General: return "general";
        case AspectKind::Temporal: return "temporal";
        case AspectKind::Spatial: return "spatial";
    }
    return "general";
}

std::optional<AspectKind> aspect_from_name(std::string_view name) {
    if (name == "general") return AspectKind::General;
    if (name == "temporal") return AspectKind::Temporal;
    if (name == "spatial") return AspectKind::Spatial;
    return std::nullopt;
}

PromptRegistry default_prompt_registry() {
    PromptRegistry r;
    r.base_query = "Describe the video in detail.";
    r.temporal_prompt =
        "Pay particular attention to dynamic changes and event progression over time: "
        "actions, motion, transitions, and the order in which things happen.";
    r.spatial_prompt =
        "Pay particular attention to the static visual layout and object relationships "
        "within each frame: scene composition, object positions, and where things are "
        "relative to each other.";
    r.separator = " ";
    r.registry_version = derive_registry_version(r);
    return r;
}

std::string derive_registry_version(const PromptRegistry& registry) {
    std::string blob = registry.base_query;
    blob += '\x1f';
    blob += registry.temporal_prompt;
    blob += '\x1f';
    blob += registry.spatial_prompt;
    blob += '\x1f';
    blob += registry.separator;
    return "rv-" + short_hash(blob);
}

PromptRegistry finalize(PromptRegistry registry) {
    if (registry.registry_version.empty()) {
        registry.registry_version = derive_registry_version(registry);
    }
    return registry;
}

AspectQuery compose_query(const PromptRegistry& registry, AspectKind aspect) {
    AspectQuery q;
    q.base_query = registry.base_query;
    q.aspect = aspect;
    switch (aspect) {
        case AspectKind::General:
            q.composed_text = registry.base_query;
            break;
        case AspectKind::Temporal:
            q.aspect_prompt = registry.temporal_prompt;
            break;
        case AspectKind::Spatial:
            q.aspect_prompt = registry.spatial_prompt;
            break;
    }
    if (aspect != AspectKind::General) {
        q.composed_text = registry.base_query + registry.separator + q.aspect_prompt;
    }
    return q;
}

}  // namespace vpair
