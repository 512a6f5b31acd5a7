#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace memoria::csv {

// Minimal RFC-4180 style reader: comma separated, optional double-quoted
// fields, tolerant of \r\n endings. Quoted fields may contain commas and
// doubled quotes.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    // Reads the next row into `fields`. Returns false at end of input.
    bool next(std::vector<std::string>& fields);

    int line() const { return line_; }

private:
    std::istream& in_;
    int line_ = 0;
};

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double v);

std::string format_fixed(double v, int decimals);

} // namespace memoria::csv
