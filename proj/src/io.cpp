#include "fpa/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fpa {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  raw_row(header);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("csv: row width mismatch");
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) buffer_ += ',';
    buffer_ += cells[k];
  }
  buffer_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  raw_row(cells);
}

CsvWriter::~CsvWriter() {
  std::ofstream out(path_, std::ios::binary);
  out << buffer_;
}

void write_phase_snapshot(const std::filesystem::path& path, const PhaseGrid& grid,
                          const PhaseField& f) {
  std::string text = "x,v,f\n";
  text.reserve(static_cast<std::size_t>(f.size()) * 64);
  for (int i = 0; i < grid.nx(); ++i) {
    const std::string x = format_double(grid.x.center(i));
    for (int j = 0; j < grid.nv(); ++j) {
      text += x;
      text += ',';
      text += format_double(grid.v.center(j));
      text += ',';
      text += format_double(f(i, j));
      text += '\n';
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

PhaseSnapshot read_phase_snapshot(const std::filesystem::path& path, double length) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open snapshot " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "x,v,f") throw ConfigError("snapshot header must be 'x,v,f'");
  std::vector<double> xs;
  std::vector<double> vs;
  std::vector<double> fs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw ConfigError("malformed snapshot line: " + line);
    }
    xs.push_back(std::stod(a));
    vs.push_back(std::stod(b));
    fs.push_back(std::stod(c));
  }
  int nv = 0;
  while (nv < static_cast<int>(xs.size()) && xs[nv] == xs[0]) ++nv;
  if (nv < 2 || xs.size() % nv != 0) throw ConfigError("snapshot is not a full x-by-v grid");
  const int nx = static_cast<int>(xs.size()) / nv;
  const double dv = vs[1] - vs[0];
  const double vmax = -(vs[0] - 0.5 * dv);
  PhaseSnapshot snap;
  snap.grid = make_grids(length, nx, vmax, nv);
  snap.f.resize(nx, nv);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nv; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * nv + j;
      if (std::abs(xs[k] - snap.grid.x.center(i)) > 1e-9 * length ||
          std::abs(vs[k] - snap.grid.v.center(j)) > 1e-9 * vmax) {
        throw ConfigError("snapshot grid does not match domain length " +
                          format_double(length));
      }
      snap.f(i, j) = fs[k];
    }
  }
  return snap;
}

}  // namespace fpa
