#pragma once

// Spectrum container and plain-text output helpers.
//
// Binary layout (little-endian):
//   char[8]  magic "BILLSPEC"
//   u32      version (1)
//   u32      nx, ny
//   f64      dx, dy, x_offset, y_offset
//   u8       periodic, outer_bc, inner_bc, reserved
//   u32      reserved
//   u64      count
//   f64      lambda[count]
//   f64      vectors[count][ny * nx]   (row-major, j * nx + i)
// A sidecar "<path>.json" carries residuals, cluster ids and run metadata.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "billiards/spectral.hpp"

namespace billiards {

struct SpectrumFile {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x_offset = 0.0;
  double y_offset = 0.0;
  bool periodic = false;
  BoundaryCondition outer_bc = BoundaryCondition::dirichlet;
  BoundaryCondition inner_bc = BoundaryCondition::dirichlet;
  std::vector<EigenPair> pairs;
  nlohmann::json metadata;
};

void write_spectrum(const std::filesystem::path& path, const Grid& grid, const std::vector<EigenPair>& pairs,
                    const nlohmann::json& metadata = nlohmann::json::object());
SpectrumFile read_spectrum(const std::filesystem::path& path);

// Shortest round-trip-safe decimal form, pinned to 17 significant digits.
std::string format_real(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  ~CsvWriter();

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

 private:
  std::FILE* file_ = nullptr;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& value);
std::string to_string(BoundaryCondition bc);

}  // namespace billiards
