#include "memoria/csv.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace memoria::csv {

bool Reader::next(std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    if (!std::getline(in_, line))
        return false;
    ++line_;
    if (!line.empty() && line.back() == '\r')
        line.pop_back();

    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    for (;;) {
        if (i >= line.size()) {
            if (quoted)
                throw std::runtime_error("unterminated quoted field at line " + std::to_string(line_));
            break;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                field += c;
                ++i;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
            ++i;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            ++i;
        } else {
            field += c;
            ++i;
        }
    }
    fields.push_back(std::move(field));
    return true;
}

static bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n") != std::string::npos;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out << ',';
        if (needs_quoting(fields[i])) {
            out << '"';
            for (char c : fields[i]) {
                if (c == '"')
                    out << "\"\"";
                else
                    out << c;
            }
            out << '"';
        } else {
            out << fields[i];
        }
    }
    out << '\n';
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return std::string(buf);
}

} // namespace memoria::csv
