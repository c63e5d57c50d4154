#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "membrana/config.hpp"
#include "membrana/regions.hpp"

namespace membrana {

/// Version string recorded in every manifest.
const char* software_version();

/// Fixed format for data files: 17 significant digits ("%.17g"), with
/// "nan", "inf" and "-inf" for non-finite values.
std::string format_number(double v);

/// Rows of mixed numeric and text cells with a header line.
class CsvTable {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit CsvTable(std::vector<std::string> header);
  /// Throws std::invalid_argument when the row width differs from the header.
  void add(std::vector<Cell> row);
  std::size_t size() const { return rows_.size(); }
  /// Header plus rows, comma separated, LF line endings.
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

/// Writes `content` to `path` through a temporary file in the same directory and a
/// rename, so readers never see a partial file. Throws std::runtime_error on I/O failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Pretty-printed JSON with a trailing newline (keys sorted, numbers round-trip exact).
std::string json_text(const Json& j);

/// Writes manifest.json: software name and version, command, the fully resolved config,
/// the thread count and the list of files written by the run.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const Json& resolved_config,
                    int threads, const std::vector<std::string>& outputs);

/// A polyline in data coordinates. Non-finite points break the line.
struct CurveSeries {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
  bool dashed = false;
};

struct PlotMarker {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

/// Deterministic SVG of a region map: cells shaded by class, confirmed and refuted cells
/// dotted, curve overlays clipped to the plot, axis ticks and labels, and a legend.
std::string render_region_svg(const RegionMap& map, const std::vector<CurveSeries>& curves,
                              const std::vector<PlotMarker>& markers = {}, const std::string& title = {});

/// Coordinate-format dump of a sparse matrix: one "row col value" line per entry.
std::string matrix_text(const RowMatrix& m);

}  // namespace membrana
