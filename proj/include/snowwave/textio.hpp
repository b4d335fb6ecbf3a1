#pragma once

#include <string>
#include <string_view>

namespace snowwave {

/// Shortest decimal that round-trips to the same double. All text artifacts
/// (polygon files, mesh files, CSV) go through this so reruns are
/// byte-identical.
std::string format_double(double v);

/// Strict double parse of a whole token; throws ValidationError on junk.
double parse_double(std::string_view token);

/// Strict non-negative integer parse; throws ValidationError on junk.
long parse_long(std::string_view token);

} // namespace snowwave
