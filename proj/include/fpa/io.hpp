#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fpa/grid.hpp"

namespace fpa {

/// %.17g; enough digits to round-trip every double.
std::string format_double(double value);

/// Buffers rows and writes the file when destroyed.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);
  void raw_row(const std::vector<std::string>& cells);

 private:
  std::filesystem::path path_;
  std::string buffer_;
  std::size_t columns_;
};

/// `x,v,f` rows, x outer and v inner.
void write_phase_snapshot(const std::filesystem::path& path, const PhaseGrid& grid,
                          const PhaseField& f);

struct PhaseSnapshot {
  PhaseGrid grid;
  PhaseField f;
};

/// Reads a file written by write_phase_snapshot. The x-grid spacing cannot
/// be recovered from centers alone at the right edge, so the domain length
/// is passed in; nx, nv and vmax are inferred.
PhaseSnapshot read_phase_snapshot(const std::filesystem::path& path, double length);

}  // namespace fpa
