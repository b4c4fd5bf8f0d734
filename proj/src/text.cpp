#include "addrparse/text.hpp"

namespace addrparse {

std::vector<std::string> utf8_chars(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if (lead >= 0xF0 && lead < 0xF8) {
            len = 4;
        } else if (lead >= 0xE0) {
            len = lead < 0xF0 ? 3 : 1;
        } else if (lead >= 0xC0) {
            len = 2;
        }
        bool ok = i + len <= text.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            ok = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
        }
        if (!ok) len = 1;
        out.emplace_back(text.substr(i, len));
        i += len;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace addrparse
