#pragma once

#include <string>

namespace meshguard {

// Write content to path atomically: write to a temp file in the same
// directory, then rename over the target.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace meshguard
