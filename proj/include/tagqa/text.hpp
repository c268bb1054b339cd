#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tagqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lowercases and splits on every non-alphanumeric character. Bytes >= 0x80
/// (UTF-8 sequences) are kept as word characters so accented words survive.
std::vector<std::string> tokenize(std::string_view text);

/// First sentence of `text`: everything up to and including the first
/// '.', '?' or '!' that is followed by whitespace or the end of the text.
std::string first_sentence(std::string_view text);

std::string trim(std::string_view s);

/// Joins `parts` with `sep` between consecutive elements.
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace tagqa
