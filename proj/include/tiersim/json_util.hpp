#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace tiersim {

using json = nlohmann::json;

namespace detail {

// Strict field access: every format in this project rejects unknown keys so
// that typos in hand-written specs fail loudly instead of being ignored.
inline void expect_keys(const json& obj, std::initializer_list<const char*> allowed,
                        const std::string& context) {
    if (!obj.is_object())
        throw std::runtime_error(context + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known)
            throw std::runtime_error(context + ": unknown field \"" + it.key() + "\"");
    }
}

inline const json& require(const json& obj, const char* key, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw std::runtime_error(context + ": missing field \"" + std::string(key) + "\"");
    return *it;
}

} // namespace detail
} // namespace tiersim
