#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vipar/error.hpp"

namespace vipar::csv {

// RFC 4180 reader: comma-delimited, double-quote quoting, "" escapes,
// quoted fields may span lines. Accepts LF or CRLF line endings.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    // Reads the next record into `fields`. Returns false at end of input.
    bool next(std::vector<std::string>& fields) {
        fields.clear();
        int c = in_.get();
        if (c == EOF) return false;
        ++line_;
        record_line_ = line_;
        std::string field;
        bool quoted = false;
        bool after_quote = false;
        for (;; c = in_.get()) {
            if (quoted) {
                if (c == EOF) throw IngestError("unterminated quoted field starting at line " +
                                                std::to_string(record_line_));
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field.push_back('"');
                    } else {
                        quoted = false;
                        after_quote = true;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field.push_back(static_cast<char>(c));
                }
                continue;
            }
            if (c == EOF || c == '\n') {
                if (!field.empty() && field.back() == '\r' && !after_quote) field.pop_back();
                fields.push_back(std::move(field));
                return true;
            }
            if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
                after_quote = false;
            } else if (c == '"' && field.empty() && !after_quote) {
                quoted = true;
            } else if (c == '\r' && after_quote) {
                // CRLF after a closing quote
            } else {
                field.push_back(static_cast<char>(c));
            }
        }
    }

    // Physical line on which the last returned record started (1-based).
    std::size_t record_line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

inline bool needs_quoting(std::string_view s) {
    return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline std::string escape(std::string_view s) {
    if (!needs_quoting(s)) return std::string(s);
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

inline void write_row(std::ostream& out, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

inline void write_row(std::ostream& out, std::initializer_list<std::string> fields) {
    write_row(out, std::span<const std::string>(fields.begin(), fields.size()));
}

// Splits on `sep` without any quoting rules; used for sub-fields inside a cell.
inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

} // namespace vipar::csv
