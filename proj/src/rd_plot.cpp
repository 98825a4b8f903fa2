#include "sddc/rd_plot.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <sstream>

#include "sddc/error.hpp"

namespace sddc {

namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

double parse_double(const std::string& s, const std::filesystem::path& path, size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_row(std::ostream& os, const RdRow& r) {
  if (r.sequence.find(',') != std::string::npos) throw Error("sequence name may not contain ','");
  os << r.sequence << ',' << fmt(r.lambda) << ',' << fmt(r.point.bpp) << ',' << fmt(r.point.psnr) << ','
     << fmt(r.point.msssim) << '\n';
}

}  // namespace

void write_rd_csv(const std::filesystem::path& path, const std::vector<RdRow>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "sequence,lambda,bpp,psnr,msssim\n";
  for (const auto& r : rows) write_row(os, r);
  if (!os) throw Error("write failed: " + path.string());
}

std::vector<RdRow> read_rd_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path.string() + ": empty RD CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  // Accept the plot export too, which carries a leading curve column.
  const size_t offset = !header.empty() && header[0] == "curve" ? 1 : 0;
  const std::vector<std::string> expected{"sequence", "lambda", "bpp", "psnr", "msssim"};
  if (header.size() != expected.size() + offset ||
      !std::equal(expected.begin(), expected.end(), header.begin() + static_cast<long>(offset))) {
    throw FormatError(path.string() + ": header must be sequence,lambda,bpp,psnr,msssim");
  }
  std::vector<RdRow> rows;
  size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": expected " + std::to_string(header.size()) +
                        " columns");
    }
    RdRow r;
    r.sequence = cells[offset];
    r.lambda = parse_double(cells[offset + 1], path, n);
    r.point.bpp = parse_double(cells[offset + 2], path, n);
    r.point.psnr = parse_double(cells[offset + 3], path, n);
    r.point.msssim = parse_double(cells[offset + 4], path, n);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RDPoint> points_of(const std::vector<RdRow>& rows) {
  std::vector<RDPoint> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) pts.push_back(r.point);
  return pts;
}

namespace {

constexpr const char* kPlotScript = R"py(import sys, csv
try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except Exception as e:
    print("matplotlib unavailable: %s" % e, file=sys.stderr)
    sys.exit(3)
src, dst, title = sys.argv[1], sys.argv[2], sys.argv[3]
curves = {}
with open(src) as f:
    for row in csv.DictReader(f):
        curves.setdefault(row["curve"], []).append((float(row["bpp"]), float(row["psnr"])))
fig, ax = plt.subplots(figsize=(5, 4))
for name, pts in curves.items():
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
ax.set_xlabel("bpp")
ax.set_ylabel("PSNR (dB)")
ax.set_title(title)
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=120)
)py";

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

PlotResult rd_plot(const std::vector<RdCurve>& curves, const std::filesystem::path& out_stem,
                   const std::string& title) {
  PlotResult res;
  res.csv = out_stem;
  res.csv += ".csv";
  {
    std::ofstream os(res.csv);
    if (!os) throw Error("cannot write " + res.csv.string());
    os << "curve,sequence,lambda,bpp,psnr,msssim\n";
    for (const auto& c : curves) {
      if (c.label.find(',') != std::string::npos) throw Error("curve label may not contain ','");
      for (const auto& r : c.rows) {
        os << c.label << ',';
        write_row(os, r);
      }
    }
  }

  const char* env = std::getenv("SDDC_PLOT_PYTHON");
  const std::string python = env != nullptr ? env : "python3";
  auto script = out_stem;
  script += ".plot.py";
  {
    std::ofstream os(script);
    os << kPlotScript;
  }
  auto image = out_stem;
  image += ".png";
  const std::string cmd = shell_quote(python) + " " + shell_quote(script.string()) + " " +
                          shell_quote(res.csv.string()) + " " + shell_quote(image.string()) + " " +
                          shell_quote(title) + " 2>/dev/null";
  const int rc = python.empty() ? -1 : std::system(cmd.c_str());
  std::error_code ec;
  std::filesystem::remove(script, ec);
  if (rc == 0 && std::filesystem::exists(image)) {
    res.image = image;
  } else {
    res.warning = "plotting backend unavailable (" + (python.empty() ? std::string("disabled") : python) +
                  " with matplotlib); wrote CSV only";
  }
  return res;
}

}  // namespace sddc
