// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace trchipnet::csv {

/// RFC-4180 field splitting (quoted fields may contain commas and doubled quotes).
std::vector<std::string> split(std::string_view line);

/// Shortest round-trippable decimal form, '.' separator regardless of locale.
std::string num(double v);
std::string num(long long v);
inline std::string num(int v) { return num(static_cast<long long>(v)); }
inline std::string num(unsigned long long v) { return std::to_string(v); }
inline std::string num(unsigned long v) { return std::to_string(v); }

std::string quote(std::string_view field);

class Writer {
public:
    explicit Writer(const std::filesystem::path& path);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& fields);

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
};

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& labels = {});
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

}  // namespace trchipnet::csv
