#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace regraph {

// Reserved identifier for the initial (unoptimized) state. No method may
// canonicalize to this name.
inline constexpr const char* kInitId = "__init__";

// Trim, ASCII case-fold, collapse internal whitespace runs to single spaces.
std::string canonical_method_name(std::string_view raw);

// A method identifier in canonical form. Ordering and equality are defined on
// the canonical text, so "Shared Memory" and "shared  memory" are one id.
struct MethodId {
    std::string name;

    static MethodId from_raw(std::string_view raw);
    static MethodId init();

    bool is_init() const { return name == kInitId; }

    auto operator<=>(const MethodId&) const = default;
};

}  // namespace regraph
