// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#include "trchipnet/csv.hpp"

#include "trchipnet/error.hpp"

#include <charconv>
#include <cmath>

namespace trchipnet::csv {

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string num(long long v) { return std::to_string(v); }

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path.string());
}

void Writer::header(const std::vector<std::string>& columns) {
    columns_ = columns.size();
    row(columns);
}

void Writer::row(const std::vector<std::string>& fields) {
    if (columns_ != 0 && fields.size() != columns_) throw Error("CSV row width does not match header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << quote(fields[i]);
    }
    out_ << "\r\n";
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& labels) {
    auto label = [&](Eigen::Index i) {
        return labels.empty() ? std::to_string(i) : labels.at(static_cast<std::size_t>(i));
    };
    Writer w(path);
    std::vector<std::string> head{"link"};
    for (Eigen::Index j = 0; j < m.cols(); ++j) head.push_back(label(j));
    w.header(head);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> r{label(i)};
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(num(m(i, j)));
        w.row(r);
    }
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (lineno == 1) {
            width = fields.size() - 1;
            continue;
        }
        if (fields.size() != width + 1) throw ParseError(path.string(), lineno, "row width mismatch");
        std::vector<double> r;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v = 0.0;
            const auto& f = fields[i];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw ParseError(path.string(), lineno, "not a number: '" + f + "'");
            r.push_back(v);
        }
        rows.push_back(std::move(r));
    }
    if (rows.size() != width) throw Error(path.string() + ": matrix must be square");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < width; ++i)
        for (std::size_t j = 0; j < width; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace trchipnet::csv
