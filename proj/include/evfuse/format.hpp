#pragma once

#include <string>
#include <string_view>

namespace evfuse {

/// Shortest decimal form that parses back to the identical double.
std::string format_real(double value);

/// Strict parse of a complete real; throws std::invalid_argument otherwise.
double parse_real(std::string_view text);

int parse_int(std::string_view text);

}  // namespace evfuse
