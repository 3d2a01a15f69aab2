#include "billiards/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "billiards/errors.hpp"

namespace billiards {

namespace {

constexpr char kMagic[8] = {'B', 'I', 'L', 'L', 'S', 'P', 'E', 'C'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(bytes[k], bytes[sizeof(T) - 1 - k]);
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

template <typename T>
void put(std::ofstream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorKind::io_error, "truncated spectrum file " + path.string());
  }
  return to_little(v);
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

std::string to_string(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::dirichlet: return "dirichlet";
    case BoundaryCondition::neumann: return "neumann";
    case BoundaryCondition::periodic: return "periodic";
  }
  return "unknown";
}

void write_spectrum(const std::filesystem::path& path, const Grid& grid, const std::vector<EigenPair>& pairs,
                    const nlohmann::json& metadata) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_error, "cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.nx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.ny));
  put<double>(out, grid.dx);
  put<double>(out, grid.dy);
  put<double>(out, grid.x_offset);
  put<double>(out, grid.y_offset);
  put<std::uint8_t>(out, grid.periodic ? 1 : 0);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(grid.outer_bc));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(grid.inner_bc));
  put<std::uint8_t>(out, 0);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, pairs.size());
  for (const auto& p : pairs) put<double>(out, p.lambda);
  for (const auto& p : pairs) {
    if (p.vector.size() != static_cast<std::size_t>(grid.size())) {
      throw Error(ErrorKind::io_error, "eigenvector length does not match the grid");
    }
    for (double v : p.vector) put<double>(out, v);
  }
  if (!out) throw Error(ErrorKind::io_error, "write failed for " + path.string());

  nlohmann::json side = metadata;
  side["nx"] = grid.nx;
  side["ny"] = grid.ny;
  side["dx"] = grid.dx;
  side["dy"] = grid.dy;
  side["outer_bc"] = to_string(grid.outer_bc);
  side["inner_bc"] = to_string(grid.inner_bc);
  side["count"] = pairs.size();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : pairs) rows.push_back({{"lambda", p.lambda}, {"residual", p.residual}, {"cluster", p.cluster}});
  side["pairs"] = rows;
  write_json(sidecar(path), side);
}

SpectrumFile read_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::io_error, path.string() + " is not a spectrum file");
  }
  if (get<std::uint32_t>(in, path) != kVersion) throw Error(ErrorKind::io_error, "unsupported spectrum version");
  SpectrumFile f;
  f.nx = static_cast<int>(get<std::uint32_t>(in, path));
  f.ny = static_cast<int>(get<std::uint32_t>(in, path));
  f.dx = get<double>(in, path);
  f.dy = get<double>(in, path);
  f.x_offset = get<double>(in, path);
  f.y_offset = get<double>(in, path);
  f.periodic = get<std::uint8_t>(in, path) != 0;
  f.outer_bc = static_cast<BoundaryCondition>(get<std::uint8_t>(in, path));
  f.inner_bc = static_cast<BoundaryCondition>(get<std::uint8_t>(in, path));
  (void)get<std::uint8_t>(in, path);
  (void)get<std::uint32_t>(in, path);
  const auto count = get<std::uint64_t>(in, path);
  const std::size_t n = static_cast<std::size_t>(f.nx) * static_cast<std::size_t>(f.ny);
  f.pairs.resize(count);
  for (auto& p : f.pairs) p.lambda = get<double>(in, path);
  for (auto& p : f.pairs) {
    p.vector.resize(n);
    for (auto& v : p.vector) v = get<double>(in, path);
  }
  const auto side_path = sidecar(path);
  if (std::filesystem::exists(side_path)) {
    std::ifstream js(side_path);
    f.metadata = nlohmann::json::parse(js, nullptr, false);
    if (f.metadata.is_discarded()) throw Error(ErrorKind::io_error, "malformed sidecar " + side_path.string());
    const auto& rows = f.metadata.value("pairs", nlohmann::json::array());
    for (std::size_t k = 0; k < f.pairs.size() && k < rows.size(); ++k) {
      f.pairs[k].residual = rows[k].value("residual", 0.0);
      f.pairs[k].cluster = rows[k].value("cluster", -1);
    }
  }
  return f;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : file_(std::fopen(path.string().c_str(), "w")) {
  if (file_ == nullptr) throw Error(ErrorKind::io_error, "cannot open " + path.string() + " for writing");
}

CsvWriter::~CsvWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void CsvWriter::header(const std::vector<std::string>& columns) { row(columns); }

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::fputs(k == 0 ? "" : ",", file_);
    std::fputs(format_real(values[k]).c_str(), file_);
  }
  std::fputc('\n', file_);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    std::fputs(k == 0 ? "" : ",", file_);
    std::fputs(cells[k].c_str(), file_);
  }
  std::fputc('\n', file_);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_error, "cannot open " + path.string() + " for writing");
  out << value.dump(2) << '\n';
}

}  // namespace billiards
