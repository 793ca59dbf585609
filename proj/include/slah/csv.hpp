#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "slah/error.hpp"
#include "slah/interference.hpp"
#include "slah/simulator.hpp"

namespace slah::csv {

/// 9 significant digits, '.' decimal separator.
inline std::string num(double v) { return fmt::format("{:.9g}", v); }

inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

/// Header row plus data rows.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) {
      throw Error(ErrorCategory::InvalidArgument, "CSV row width does not match header");
    }
    rows_.push_back(std::move(row));
  }

  std::size_t rows() const { return rows_.size(); }

  std::string str() const {
    std::string out = join(header_) + '\n';
    for (const auto& r : rows_) out += join(r) + '\n';
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCategory::Io, "cannot write " + path.string());
    f << str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// One row per eNB: episode_id, enb_id, alpha, arrivals, blocks,
/// completions, bcr_pct, ftt_s. Absent KPIs are written as empty fields.
inline Table episode_table(const std::string& episode_id, const KpiReport& report) {
  Table t({"episode_id", "enb_id", "alpha", "arrivals", "blocks", "completions", "bcr_pct", "ftt_s"});
  for (const auto& k : report.enbs) {
    t.add({episode_id, std::to_string(k.enb), num(k.alpha), std::to_string(k.arrivals), std::to_string(k.blocks),
           std::to_string(k.completions), num(k.bcr_pct), num(k.ftt_s)});
  }
  return t;
}

/// Dense matrix with eNB ids as header row and first column, milliwatts.
inline Table matrix_table(const InterferenceMatrix& m) {
  std::vector<std::string> header{"enb_id"};
  for (std::size_t j = 0; j < m.size(); ++j) header.push_back(std::to_string(j));
  Table t(header);
  for (std::size_t c = 0; c < m.size(); ++c) {
    std::vector<std::string> row{std::to_string(c)};
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(num(m.at(c, j)));
    t.add(std::move(row));
  }
  return t;
}

/// Splits one CSV line on commas; no quoting.
inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace slah::csv
