#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mailweave/text.hpp"

namespace mailweave {

using Cell = std::variant<std::string, std::int64_t>;

inline std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return std::to_string(std::get<std::int64_t>(c));
}

/// Query and analytics output. `total_row_count` counts rows before LIMIT.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::size_t total_row_count = 0;

  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

inline nlohmann::json cell_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return std::get<std::int64_t>(c);
}

inline nlohmann::json table_to_json(const ResultTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(cell_json(c));
    rows.push_back(std::move(r));
  }
  return {{"columns", t.columns}, {"rows", std::move(rows)}, {"total_row_count", t.total_row_count}};
}

inline ResultTable table_from_json(const nlohmann::json& j) {
  ResultTable t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : r) {
      if (c.is_number_integer()) {
        row.emplace_back(c.get<std::int64_t>());
      } else {
        row.emplace_back(c.get<std::string>());
      }
    }
    t.rows.push_back(std::move(row));
  }
  t.total_row_count = j.at("total_row_count").get<std::size_t>();
  return t;
}

/// Left-aligned text columns, numbers right-aligned, two-space gutter.
inline std::string render_text(const ResultTable& t) {
  std::vector<std::size_t> width(t.columns.size(), 0);
  auto display_width = [](const std::string& s) { return text::decode_utf8(s).size(); };
  for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = display_width(t.columns[i]);
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) {
      width[i] = std::max(width[i], display_width(cell_text(row[i])));
    }
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells, const std::vector<bool>& numeric) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t pad = width[i] - display_width(cells[i]);
      if (i > 0) line += "  ";
      if (numeric[i]) line.append(pad, ' ');
      line += cells[i];
      if (!numeric[i] && i + 1 < cells.size()) line.append(pad, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  };
  emit(t.columns, std::vector<bool>(t.columns.size(), false));
  for (const auto& row : t.rows) {
    std::vector<std::string> cells;
    std::vector<bool> numeric;
    for (const auto& c : row) {
      cells.push_back(cell_text(c));
      numeric.push_back(std::holds_alternative<std::int64_t>(c));
    }
    emit(cells, numeric);
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

/// RFC 4180: header row, CRLF line breaks, fields with commas, quotes or
/// line breaks quoted.
inline std::string render_csv(const ResultTable& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += csv_field(cells[i]);
    }
    out += "\r\n";
  };
  line(t.columns);
  for (const auto& row : t.rows) {
    std::vector<std::string> cells;
    for (const auto& c : row) cells.push_back(cell_text(c));
    line(cells);
  }
  return out;
}

/// One object per row keyed by column name.
inline std::string render_jsonl(const ResultTable& t) {
  std::string out;
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) {
      if (const auto* s = std::get_if<std::string>(&row[i])) {
        obj[t.columns[i]] = *s;
      } else {
        obj[t.columns[i]] = std::get<std::int64_t>(row[i]);
      }
    }
    out += obj.dump() + "\n";
  }
  return out;
}

}  // namespace mailweave
