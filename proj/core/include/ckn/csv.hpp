#pragma once

#include <string>
#include <vector>

#include "ckn/types.hpp"

namespace ckn {

struct CsvTable {
  std::vector<std::string> names;
  Mat values;  // rows x cols, fully numeric
};

/// Reads a numeric CSV with a mandatory header row. Empty cells or
/// non-numeric tokens raise std::runtime_error (missing data is rejected).
CsvTable read_csv(const std::string& path);

/// Single-column convenience wrapper; the file must have exactly one column.
Vec read_vector_csv(const std::string& path);

void write_csv(const std::string& path, const Mat& values,
               const std::vector<std::string>& names);
void write_vector_csv(const std::string& path, const Vec& v,
                      const std::string& name);

}  // namespace ckn
