#include "regraph/canon.hpp"

#include <cctype>

namespace regraph {

std::string canonical_method_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(uc)));
    }
    return out;
}

MethodId MethodId::from_raw(std::string_view raw) {
    return MethodId{canonical_method_name(raw)};
}

MethodId MethodId::init() {
    return MethodId{kInitId};
}

}  // namespace regraph
