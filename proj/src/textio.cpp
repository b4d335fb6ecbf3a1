#include "snowwave/textio.hpp"

#include <charconv>
#include <cstdlib>
#include <system_error>

#include "snowwave/errors.hpp"

namespace snowwave {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last)
        throw ValidationError("not a number: '" + std::string(token) + "'");
    return value;
}

long parse_long(std::string_view token) {
    long value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last)
        throw ValidationError("not an integer: '" + std::string(token) + "'");
    return value;
}

} // namespace snowwave
