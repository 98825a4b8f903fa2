#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sddc/bd_rate.hpp"

namespace sddc {

/// One row of an RD CSV file (`sequence,lambda,bpp,psnr,msssim`).
struct RdRow {
  std::string sequence;
  double lambda = 0.0;
  RDPoint point;
};

struct RdCurve {
  std::string label;
  std::vector<RdRow> rows;
};

void write_rd_csv(const std::filesystem::path& path, const std::vector<RdRow>& rows);
std::vector<RdRow> read_rd_csv(const std::filesystem::path& path);
std::vector<RDPoint> points_of(const std::vector<RdRow>& rows);

struct PlotResult {
  std::filesystem::path csv;
  std::filesystem::path image;  // empty when no plotting backend ran
  std::string warning;
};

/// Writes every curve to `<out_stem>.csv` (with an extra leading `curve`
/// column) and, when a python3 with matplotlib is available, renders
/// `<out_stem>.png`. The interpreter can be overridden through the
/// SDDC_PLOT_PYTHON environment variable.
PlotResult rd_plot(const std::vector<RdCurve>& curves, const std::filesystem::path& out_stem,
                   const std::string& title = "RD curves");

}  // namespace sddc
