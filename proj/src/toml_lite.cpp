#include "telewip/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

namespace telewip {

namespace {

using nlohmann::json;

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    json run() {
        json root = json::object();
        json* table = &root;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                table = header(root);
            } else {
                key_value(*table);
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw TomlError(line_, what); }

    bool eof() const { return pos_ >= s_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }
    char get() {
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }

    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }

    void skip_blank_lines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r') ++pos_;
            if (peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }

    // Whitespace, comments and newlines inside arrays.
    void skip_array_space() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r' || peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }

    void end_of_line() {
        skip_ws();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail("unexpected trailing characters");
        get();
    }

    std::vector<std::string> dotted_key() {
        std::vector<std::string> parts;
        while (true) {
            skip_ws();
            if (peek() == '"') {
                parts.push_back(basic_string());
            } else if (peek() == '\'') {
                parts.push_back(literal_string());
            } else {
                const std::size_t start = pos_;
                while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
                    ++pos_;
                if (pos_ == start) fail("expected a key");
                parts.emplace_back(s_.substr(start, pos_ - start));
            }
            skip_ws();
            if (peek() != '.') break;
            ++pos_;
        }
        return parts;
    }

    json* descend(json& root, const std::vector<std::string>& path, std::size_t count) {
        json* node = &root;
        for (std::size_t i = 0; i < count; ++i) {
            json& child = (*node)[path[i]];
            if (child.is_null()) child = json::object();
            if (!child.is_object()) fail("key '" + path[i] + "' is not a table");
            node = &child;
        }
        return node;
    }

    json* header(json& root) {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        const auto path = dotted_key();
        if (peek() != ']') fail("expected ']'");
        ++pos_;
        std::string name;
        for (const auto& p : path) name += (name.empty() ? "" : ".") + p;
        if (!defined_tables_.insert(name).second) fail("table [" + name + "] defined twice");
        return descend(root, path, path.size());
    }

    void key_value(json& table) {
        const auto path = dotted_key();
        if (peek() != '=') fail("expected '='");
        ++pos_;
        skip_ws();
        json* target = descend(table, path, path.size() - 1);
        if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*target)[path.back()] = value();
    }

    json value() {
        const char c = peek();
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (c == '{') return inline_table();
        if (s_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (s_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return number();
    }

    std::string basic_string() {
        if (s_.substr(pos_, 3) == "\"\"\"") fail("multi-line strings are not supported");
        ++pos_;
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("unterminated escape");
                c = get();
                switch (c) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(std::string("unsupported escape \\") + c);
                }
                continue;
            }
            out += c;
        }
        return out;
    }

    std::string literal_string() {
        ++pos_;
        const std::size_t start = pos_;
        while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
        if (peek() != '\'') fail("unterminated string");
        std::string out(s_.substr(start, pos_ - start));
        ++pos_;
        return out;
    }

    json array() {
        ++pos_;
        json out = json::array();
        while (true) {
            skip_array_space();
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            out.push_back(value());
            skip_array_space();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() != ']') fail("expected ',' or ']' in array");
        }
    }

    json inline_table() {
        ++pos_;
        json out = json::object();
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return out;
        }
        while (true) {
            key_value(out);
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() != '}') fail("expected ',' or '}' in inline table");
            ++pos_;
            return out;
        }
    }

    json number() {
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                          peek() == '.' || peek() == '_'))
            ++pos_;
        std::string tok;
        for (char c : s_.substr(start, pos_ - start))
            if (c != '_') tok += c;
        if (tok.empty()) fail("expected a value");
        std::string body = tok;
        double sign = 1.0;
        if (body[0] == '+' || body[0] == '-') {
            sign = body[0] == '-' ? -1.0 : 1.0;
            body.erase(0, 1);
        }
        if (body == "inf") return sign * std::numeric_limits<double>::infinity();
        if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
        const bool is_float = tok.find_first_of(".eE") != std::string::npos;
        if (!is_float) {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(tok.data() + (tok[0] == '+'), tok.data() + tok.size(), v);
            if (ec != std::errc{} || p != tok.data() + tok.size()) fail("invalid number '" + tok + "'");
            return v;
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data() + (tok[0] == '+'), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) fail("invalid number '" + tok + "'");
        return v;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::set<std::string> defined_tables_;
};

}  // namespace

json parse_toml(std::string_view text) { return Parser(text).run(); }

}  // namespace telewip
