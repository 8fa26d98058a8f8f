#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace prelabel {

/// Canonical class-name form: lowercase, trimmed, internal whitespace
/// collapsed to one space, trailing punctuation stripped.
std::string normalize_label(std::string_view raw);

std::string to_lower(std::string_view s);

/// File name without directories and without the last extension.
std::string file_stem(std::string_view path);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace prelabel
