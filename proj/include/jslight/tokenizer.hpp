#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace jslight {

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

// Lexes JavaScript source into identifier and property-name tokens, in source
// order. Comments, string literals, regex literals, numbers and the text
// segments of template literals produce nothing; `${...}` interpolations are
// lexed as code. Reserved words are dropped unless they follow `.` (where
// they are property names, e.g. `headers.delete`).
//
// Total over arbitrary input. An ambiguous `/` is treated as division.
std::vector<std::string> tokenize(std::string_view source);

}  // namespace jslight
