#pragma once

// Numeric sample files: one point per line, fields separated by commas or
// whitespace. Blank lines and `#` comments are skipped, and a non-numeric
// first line is taken as a header.

#include "srgof/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace srgof {

inline Sample parse_sample_text(const std::string& text, const std::string& source = "sample") {
    std::istringstream in(text);
    std::string line;
    std::vector<double> values;
    std::size_t cols = 0, rows = 0, number = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        for (char& c : line) {
            if (c == ',' || c == '\t' || c == '\r' || c == ';') c = ' ';
        }
        std::istringstream fields(line);
        std::vector<std::string> tokens;
        for (std::string t; fields >> t;) tokens.push_back(t);
        if (tokens.empty()) continue;
        std::vector<double> row;
        bool numeric = true;
        for (const auto& t : tokens) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric && first_content) {
            first_content = false;
            continue;
        }
        first_content = false;
        require_input(numeric, source + " line " + std::to_string(number) + ": non-numeric field");
        if (cols == 0) cols = row.size();
        require_input(row.size() == cols, source + " line " + std::to_string(number) + ": expected " +
                                              std::to_string(cols) + " fields, got " + std::to_string(row.size()));
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
    }
    require_input(rows > 0, source + ": no data rows");
    Sample s(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
    return s;
}

inline Sample read_sample_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require_input(static_cast<bool>(in), "cannot open sample file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_sample_text(text.str(), path);
}

}  // namespace srgof
