#pragma once

// Reader/writer for the TOML subset used by model configs: tables, arrays of tables, dotted keys,
// strings, numbers, booleans, (nested, multi-line) arrays and inline tables. Dates are not supported.

#include "json.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcarma::toml {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line) : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string src) : s_(std::move(src)) {}

    nlohmann::json parse() {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* cur = &root;
        while (true) {
            skip_ws_comments_newlines();
            if (eof()) break;
            if (peek() == '[') {
                const bool array = peek(1) == '[';
                pos_ += array ? 2 : 1;
                skip_ws();
                const auto path = key_path();
                skip_ws();
                expect(']');
                if (array) expect(']');
                end_of_line();
                cur = array ? &open_array_table(root, path) : &open_table(root, path);
            } else {
                const auto path = key_path();
                skip_ws();
                expect('=');
                skip_ws();
                nlohmann::json v = value();
                assign(*cur, path, std::move(v));
                end_of_line();
            }
        }
        return root;
    }

private:
    std::string s_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::vector<std::string> defined_;

    bool eof() const { return pos_ >= s_.size(); }
    char peek(std::size_t k = 0) const { return pos_ + k < s_.size() ? s_[pos_ + k] : '\0'; }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_); }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
    }
    void skip_ws_comments_newlines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r') ++pos_;
            if (peek() == '\n') {
                ++pos_;
                ++line_;
            } else {
                break;
            }
        }
    }
    void end_of_line() {
        skip_ws();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail("unexpected trailing characters");
        ++pos_;
        ++line_;
    }

    static bool bare_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

    std::string key() {
        if (peek() == '"') return basic_string();
        if (peek() == '\'') return literal_string();
        const std::size_t start = pos_;
        while (!eof() && bare_char(peek())) ++pos_;
        if (start == pos_) fail("expected a key");
        return s_.substr(start, pos_ - start);
    }

    std::vector<std::string> key_path() {
        std::vector<std::string> path{key()};
        skip_ws();
        while (peek() == '.') {
            ++pos_;
            skip_ws();
            path.push_back(key());
            skip_ws();
        }
        return path;
    }

    std::string joined(const std::vector<std::string>& p) const {
        std::string out;
        for (const auto& k : p) out += (out.empty() ? "" : ".") + k;
        return out;
    }

    nlohmann::json& descend(nlohmann::json& node, const std::string& k) {
        nlohmann::json* n = &node;
        if (n->is_array()) {
            if (n->empty()) fail("internal: empty table array");
            n = &n->back();
        }
        if (!n->is_object()) fail("key '" + k + "' redefines a value as a table");
        return (*n)[k];
    }

    nlohmann::json& open_table(nlohmann::json& root, const std::vector<std::string>& path) {
        const std::string name = joined(path);
        for (const auto& d : defined_)
            if (d == name) fail("table [" + name + "] defined twice");
        defined_.push_back(name);
        nlohmann::json* n = &root;
        for (const auto& k : path) {
            n = &descend(*n, k);
            if (n->is_null()) *n = nlohmann::json::object();
        }
        if (n->is_array()) n = &n->back();
        if (!n->is_object()) fail("[" + name + "] is not a table");
        return *n;
    }

    nlohmann::json& open_array_table(nlohmann::json& root, const std::vector<std::string>& path) {
        nlohmann::json* n = &root;
        for (std::size_t i = 0; i < path.size(); ++i) {
            n = &descend(*n, path[i]);
            if (i + 1 < path.size() && n->is_null()) *n = nlohmann::json::object();
        }
        if (n->is_null()) *n = nlohmann::json::array();
        if (!n->is_array()) fail("[[" + joined(path) + "]] conflicts with an existing value");
        n->push_back(nlohmann::json::object());
        return n->back();
    }

    void assign(nlohmann::json& table, const std::vector<std::string>& path, nlohmann::json v) {
        nlohmann::json* n = &table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            n = &(*n)[path[i]];
            if (n->is_null()) *n = nlohmann::json::object();
            if (!n->is_object()) fail("dotted key '" + joined(path) + "' conflicts with a value");
        }
        if (n->contains(path.back())) fail("duplicate key '" + joined(path) + "'");
        (*n)[path.back()] = std::move(v);
    }

    std::string basic_string() {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = s_[pos_++];
            if (c == '"') break;
            if (c != '\\') {
                out += c;
                continue;
            }
            const char e = s_[pos_++];
            switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
            }
        }
        return out;
    }

    std::string literal_string() {
        expect('\'');
        const std::size_t start = pos_;
        while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
        if (peek() != '\'') fail("unterminated literal string");
        std::string out = s_.substr(start, pos_ - start);
        ++pos_;
        return out;
    }

    nlohmann::json number_or_bool() {
        const std::size_t start = pos_;
        while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+')) ++pos_;
        std::string tok = s_.substr(start, pos_ - start);
        if (tok == "true") return true;
        if (tok == "false") return false;
        if (tok.empty()) fail("expected a value");
        std::string clean;
        for (char c : tok)
            if (c != '_') clean += c;
        if (clean == "inf" || clean == "+inf") return std::numeric_limits<double>::infinity();
        if (clean == "-inf") return -std::numeric_limits<double>::infinity();
        if (clean == "nan" || clean == "+nan" || clean == "-nan") return std::numeric_limits<double>::quiet_NaN();
        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        try {
            std::size_t used = 0;
            if (is_float) {
                const double d = std::stod(clean, &used);
                if (used != clean.size()) fail("malformed number '" + tok + "'");
                return d;
            }
            const long long i = std::stoll(clean, &used, 10);
            if (used != clean.size()) fail("malformed number '" + tok + "'");
            return i;
        } catch (const std::logic_error&) {
            fail("malformed value '" + tok + "'");
        }
    }

    nlohmann::json array() {
        expect('[');
        nlohmann::json out = nlohmann::json::array();
        while (true) {
            skip_ws_comments_newlines();
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            out.push_back(value());
            skip_ws_comments_newlines();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            fail("expected ',' or ']' in array");
        }
    }

    nlohmann::json inline_table() {
        expect('{');
        nlohmann::json out = nlohmann::json::object();
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return out;
        }
        while (true) {
            skip_ws();
            const auto path = key_path();
            skip_ws();
            expect('=');
            skip_ws();
            assign(out, path, value());
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return out;
        }
    }

    nlohmann::json value() {
        switch (peek()) {
            case '"': return basic_string();
            case '\'': return literal_string();
            case '[': return array();
            case '{': return inline_table();
            default: return number_or_bool();
        }
    }
};

inline void write_value(std::ostream& os, const nlohmann::json& v) {
    if (v.is_string()) {
        os << '"';
        for (char c : v.get<std::string>()) {
            if (c == '"' || c == '\\') os << '\\';
            if (c == '\n')
                os << "\\n";
            else
                os << c;
        }
        os << '"';
    } else if (v.is_boolean()) {
        os << (v.get<bool>() ? "true" : "false");
    } else if (v.is_number_integer()) {
        os << v.get<long long>();
    } else if (v.is_number()) {
        const double d = v.get<double>();
        if (std::isinf(d))
            os << (d > 0 ? "inf" : "-inf");
        else if (std::isnan(d))
            os << "nan";
        else {
            std::ostringstream t;
            t.precision(17);
            t << d;
            std::string s = t.str();
            if (s.find_first_of(".eE") == std::string::npos) s += ".0";
            os << s;
        }
    } else if (v.is_array()) {
        os << '[';
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) os << ", ";
            write_value(os, v[i]);
        }
        os << ']';
    } else if (v.is_object()) {
        os << '{';
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            os << (first ? "" : ", ") << it.key() << " = ";
            write_value(os, it.value());
            first = false;
        }
        os << '}';
    } else {
        throw std::invalid_argument("toml: null has no representation");
    }
}

inline bool is_table_array(const nlohmann::json& v) {
    if (!v.is_array() || v.empty()) return false;
    for (const auto& e : v)
        if (!e.is_object()) return false;
    return true;
}

inline void write_table(std::ostream& os, const nlohmann::json& t, const std::string& prefix) {
    for (auto it = t.begin(); it != t.end(); ++it) {
        if (it.value().is_object() || is_table_array(it.value())) continue;
        os << it.key() << " = ";
        write_value(os, it.value());
        os << '\n';
    }
    for (auto it = t.begin(); it != t.end(); ++it) {
        const std::string name = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.value().is_object()) {
            os << "\n[" << name << "]\n";
            write_table(os, it.value(), name);
        } else if (is_table_array(it.value())) {
            for (const auto& e : it.value()) {
                os << "\n[[" << name << "]]\n";
                write_table(os, e, name);
            }
        }
    }
}

}  // namespace detail

inline nlohmann::json parse(const std::string& text) { return detail::Parser(text).parse(); }

inline nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

/// Emit a JSON object as TOML; tables nested inside arrays of tables are written as inline tables.
inline std::string dump(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("toml::dump: top level must be a table");
    std::ostringstream os;
    detail::write_table(os, doc, "");
    return os.str();
}

}  // namespace mcarma::toml
