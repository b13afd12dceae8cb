#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace exhaust::tools {

/// Nine significant digits, "%.9g".
std::string fmt(double v);

/// Output directory: the explicit argument if non-empty, else $EXHAUST_OUT_DIR,
/// else "results".
std::filesystem::path resolve_out_dir(const std::string& requested);

/// Creates parent directories. Throws std::runtime_error on I/O failure.
void write_file(const std::filesystem::path& path, const std::string& content);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  /// Cells are written verbatim; callers format numbers with fmt().
  void add_row(std::vector<std::string> cells);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

enum class ChartKind { kLine, kBar };

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  ChartKind kind = ChartKind::kLine;
  std::vector<Series> series;
};

/// Fixed 640x400 layout. Same chart in, same bytes out.
std::string render_svg(const Chart& chart);

}  // namespace exhaust::tools
