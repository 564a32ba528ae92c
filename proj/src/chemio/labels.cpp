#include <charconv>
#include <cmath>

#include "sgc/chemio.hpp"
#include "sgc/error.hpp"

namespace sgc::chem {

std::vector<std::vector<std::string>> read_csv(std::string_view text,
                                               std::vector<std::size_t>* line_of_row) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool in_quotes = false, cell_started = false;
  std::size_t line = 1, row_line = 1;

  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  auto end_row = [&] {
    row.push_back(std::move(cell));
    cell.clear();
    const bool blank = row.size() == 1 && row[0].empty() && !cell_started;
    if (!blank) {
      rows.push_back(std::move(row));
      if (line_of_row) line_of_row->push_back(row_line);
    }
    row.clear();
    cell_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        cell_started = true;
        break;
      case ',':
        row.push_back(std::move(cell));
        cell.clear();
        cell_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        cell += c;
        cell_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", row_line);
  if (cell_started || !row.empty()) end_row();
  return rows;
}

LabelTable load_labels(std::string_view csv) {
  std::vector<std::size_t> lines;
  auto rows = read_csv(csv, &lines);
  if (rows.empty()) throw ParseError("label table is missing its header row", 1);
  LabelTable table;
  const auto& header = rows[0];
  if (header.size() < 2) throw ParseError("label header needs an id column and a task", 1);
  table.tasks.assign(header.begin() + 1, header.end());

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() > header.size()) throw ParseError("row has more fields than header", lines[r]);
    const std::string& id = row[0];
    if (id.empty()) throw ParseError("empty sample id", lines[r]);
    std::vector<std::optional<double>> values(table.tasks.size());
    for (std::size_t c = 1; c < row.size(); ++c) {
      std::string_view cell = row[c];
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      if (cell.empty()) continue;
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError("non-numeric label '" + std::string(cell) + "'", lines[r]);
      values[c - 1] = v;
    }
    if (!table.rows.emplace(id, std::move(values)).second)
      throw ParseError("duplicate sample id '" + id + "'", lines[r]);
  }
  return table;
}

}  // namespace sgc::chem
