#pragma once

#include <cstddef>
#include <string_view>

namespace mixscale {

// Writes to stderr unless silenced; the counter is process-wide.
void warn(std::string_view message);
std::size_t warning_count();
void set_warnings_silenced(bool silenced);

}  // namespace mixscale
