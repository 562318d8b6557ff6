#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

namespace ctqw {

/// Locale-independent "%.17g"-style rendering.
std::string format_real(double value);

/// Writes through a temporary sibling file and renames it into place.
/// Throws IoError when the file cannot be written.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);

}  // namespace ctqw
