#pragma once

#include "json.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace telewip {

class TomlError : public std::runtime_error {
public:
    TomlError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Parser for the subset of TOML used by config files: comments, [table] and
/// [dotted.table] headers, bare/quoted/dotted keys, basic and literal strings,
/// integers (with underscores), floats (inf/nan included), booleans, arrays
/// (multi-line allowed) and inline tables. Dates and arrays of tables are
/// rejected.
nlohmann::json parse_toml(std::string_view text);

}  // namespace telewip
