#pragma once

#include <string>

#include "json.hpp"
#include "merging/binary_string.hpp"
#include "merging/errors.hpp"
#include "merging/rational.hpp"

namespace merging::json_util {

inline const nlohmann::json& field(const nlohmann::json& node, const std::string& location, const char* key,
                                   const std::string& module) {
    if (!node.is_object()) throw ParseError(module, location.empty() ? "/" : location, "expected an object");
    auto it = node.find(key);
    if (it == node.end()) {
        throw ParseError(module, location.empty() ? "/" : location, std::string("missing field \"") + key + "\"");
    }
    return *it;
}

inline Rational rational(const nlohmann::json& v, const std::string& where, const std::string& module) {
    if (v.is_string()) {
        try {
            return parse_rational(v.get<std::string>());
        } catch (const ParseError&) {
            throw ParseError(module, where, "expected a rational \"num/den\"");
        }
    }
    if (v.is_number_integer()) return Rational(mpz_class(std::to_string(v.get<long long>())));
    throw ParseError(module, where, "expected a rational string \"num/den\"");
}

inline Rational rational_field(const nlohmann::json& node, const std::string& location, const char* key,
                               const std::string& module) {
    return rational(field(node, location, key, module), location + "/" + key, module);
}

inline std::string string_field(const nlohmann::json& node, const std::string& location, const char* key,
                                const std::string& module) {
    const auto& v = field(node, location, key, module);
    if (!v.is_string()) throw ParseError(module, location + "/" + key, "expected a string");
    return v.get<std::string>();
}

inline BinaryString binary_string(const nlohmann::json& v, const std::string& where, const std::string& module) {
    if (!v.is_string()) throw ParseError(module, where, "expected a binary string");
    try {
        return BinaryString::parse(v.get<std::string>());
    } catch (const ValidationError&) {
        throw ParseError(module, where, "expected a binary string of 0s and 1s");
    }
}

inline std::size_t uint_field(const nlohmann::json& node, const std::string& location, const char* key,
                              const std::string& module) {
    const auto& v = field(node, location, key, module);
    if (!v.is_number_unsigned()) throw ParseError(module, location + "/" + key, "expected a non-negative integer");
    return v.get<std::size_t>();
}

inline nlohmann::json parse_document(std::string_view document, const std::string& module) {
    try {
        return nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(module, "byte " + std::to_string(e.byte), "malformed JSON");
    }
}

}  // namespace merging::json_util
