#include "ckn/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ckn {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\"");
  auto e = s.find_last_not_of(" \t\r\"");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  std::string s = strip(raw);
  if (s.empty() || s == "NA" || s == "nan" || s == "NaN") {
    throw std::runtime_error("csv: missing value at row " + std::to_string(row) +
                             ", column " + std::to_string(col));
  }
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::runtime_error("csv: non-numeric cell '" + s + "' at row " +
                             std::to_string(row) + ", column " + std::to_string(col));
  }
  return v;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  CsvTable t;
  for (const auto& h : split_line(line)) t.names.push_back(strip(h));
  const std::size_t ncol = t.names.size();
  if (ncol == 0) throw std::runtime_error("csv: empty header in " + path);

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != ncol) {
      throw std::runtime_error("csv: row " + std::to_string(row_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(ncol));
    }
    std::vector<double> r(ncol);
    for (std::size_t c = 0; c < ncol; ++c) r[c] = parse_cell(cells[c], row_no, c);
    rows.push_back(std::move(r));
    ++row_no;
  }
  if (rows.empty()) throw std::runtime_error("csv: no data rows in " + path);
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(ncol));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < ncol; ++c)
      t.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return t;
}

Vec read_vector_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.values.cols() != 1)
    throw std::runtime_error("csv: expected a single column in " + path);
  return t.values.col(0);
}

void write_csv(const std::string& path, const Mat& values,
               const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out.precision(17);
  for (Index c = 0; c < values.cols(); ++c) {
    if (c) out << ',';
    if (c < static_cast<Index>(names.size()) && !names[c].empty())
      out << names[c];
    else
      out << 'V' << (c + 1);
  }
  out << '\n';
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c) out << ',';
      out << values(r, c);
    }
    out << '\n';
  }
}

void write_vector_csv(const std::string& path, const Vec& v, const std::string& name) {
  write_csv(path, v, {name});
}

}  // namespace ckn
