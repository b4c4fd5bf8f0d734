#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace addrparse {

// Splits UTF-8 text into code points, each returned as its own byte string.
// Malformed sequences yield one entry per offending byte.
std::vector<std::string> utf8_chars(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace addrparse
