#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdband/bands.hpp"

namespace qdband::io {

inline constexpr const char* kVersion = "0.1.0";

//! Problem with an input file or its contents (as opposed to a usage error).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Reads a one-column numeric CSV. A single non-numeric first line is
//! accepted as a header; any later unparsable line is an error reported with
//! its line number.
inline std::vector<double> read_column_csv(const std::string& path,
                                           std::size_t min_rows = 2) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;  // blank line
    const std::string field = line.substr(start);

    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    const bool parsed = end == field.c_str() + field.size() &&
                        end != field.c_str() && std::isfinite(v);
    if (!parsed) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw DataError(path + ": line " + std::to_string(line_no) +
                      " is not a single numeric value: '" + field + "'");
    }
    header_allowed = false;
    values.push_back(v);
  }
  if (values.size() < min_rows) {
    throw DataError(path + ": need at least " + std::to_string(min_rows) +
                    " numeric rows, found " + std::to_string(values.size()));
  }
  return values;
}

//! 17 significant digits: enough for an exact double round trip.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot open file for writing: " + path);
  }
  out << content;
  if (!out) {
    throw DataError("failed to write file: " + path);
  }
}

inline std::string estimate_csv(const QdEstimate& est) {
  std::string out = "u,qhat,psi,qhat_bc\n";
  for (std::size_t j = 0; j < est.grid.size(); ++j) {
    out += format_double(est.grid[j]) + "," + format_double(est.qhat[j]) +
           "," + format_double(est.psi[j]) + "," +
           format_double(est.qhat_bc[j]) + "\n";
  }
  return out;
}

inline std::string band_csv(const ConfidenceBand& band) {
  std::string out = "u,lower,upper,qhat_bc\n";
  for (std::size_t j = 0; j < band.grid.size(); ++j) {
    out += format_double(band.grid[j]) + "," + format_double(band.lower[j]) +
           "," + format_double(band.upper[j]) + "," +
           format_double(band.estimate.qhat_bc[j]) + "\n";
  }
  return out;
}

//! Execution record written next to every output: the command, the full
//! parameter echo and the produced files. Contains nothing run-dependent, so
//! re-running an identical command rewrites it byte for byte.
inline nlohmann::ordered_json run_manifest(
    const std::string& command, nlohmann::ordered_json config,
    std::uint64_t seed, const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = std::move(config);
  j["seed"] = seed;
  j["versions"] = std::string("qdband ") + kVersion;
  j["outputs"] = outputs;
  return j;
}

// ---- static SVG rendering ----

namespace detail {

struct PlotFrame {
  double x0 = 70, y0 = 20, width = 520, height = 340;
  double ymin = 0.0, ymax = 1.0;

  double sx(double u) const { return x0 + u * width; }
  double sy(double v) const {
    return y0 + (ymax - v) / (ymax - ymin) * height;
  }
};

inline std::string polyline(const PlotFrame& f, std::span<const double> us,
                            std::span<const double> vs,
                            const std::string& style) {
  std::string pts;
  char buf[160];
  for (std::size_t j = 0; j < us.size(); ++j) {
    const double v = std::isinf(vs[j]) ? f.ymax : std::min(vs[j], f.ymax);
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", f.sx(us[j]), f.sy(v));
    pts += buf;
  }
  return "<polyline fill=\"none\" " + style + " points=\"" + pts + "\"/>\n";
}

}  // namespace detail

//! Self-contained SVG of a band envelope, the point estimate and (optionally)
//! a reference curve. No plotting stack: raw polylines and a filled region.
inline std::string band_svg(const ConfidenceBand& band,
                            const std::vector<double>* reference = nullptr) {
  detail::PlotFrame f;
  double ymax = 0.0;
  for (std::size_t j = 0; j < band.grid.size(); ++j) {
    ymax = std::max(ymax, band.estimate.qhat_bc[j]);
    if (!std::isinf(band.upper[j])) ymax = std::max(ymax, band.upper[j]);
    if (reference) ymax = std::max(ymax, (*reference)[j]);
  }
  f.ymax = ymax > 0.0 ? 1.15 * ymax : 1.0;

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
      "height=\"420\" viewBox=\"0 0 640 420\">\n"
      "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";

  // band region
  char buf[160];
  std::string pts;
  for (std::size_t j = 0; j < band.grid.size(); ++j) {
    const double v = std::isinf(band.upper[j])
                         ? f.ymax
                         : std::min(band.upper[j], f.ymax);
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", f.sx(band.grid[j]), f.sy(v));
    pts += buf;
  }
  for (std::size_t jj = band.grid.size(); jj-- > 0;) {
    const double v = std::isinf(band.lower[jj])
                         ? f.ymin
                         : std::max(band.lower[jj], f.ymin);
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", f.sx(band.grid[jj]),
                  f.sy(v));
    pts += buf;
  }
  svg += "<polygon fill=\"#c6dbef\" stroke=\"none\" points=\"" + pts +
         "\"/>\n";

  svg += detail::polyline(f, band.grid.points(), band.estimate.qhat_bc,
                          "stroke=\"black\" stroke-width=\"1.5\"");
  if (reference) {
    svg += detail::polyline(f, band.grid.points(), *reference,
                            "stroke=\"#2171b5\" stroke-width=\"1.5\"");
  }

  // axes with a few ticks
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                f.x0, f.y0 + f.height, f.x0 + f.width, f.y0 + f.height);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                f.x0, f.y0, f.x0, f.y0 + f.height);
  svg += buf;
  for (int t = 0; t <= 4; ++t) {
    const double u = t / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                  "text-anchor=\"middle\">%.2f</text>\n",
                  f.sx(u), f.y0 + f.height + 16.0, u);
    svg += buf;
    const double v = f.ymin + (f.ymax - f.ymin) * t / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                  "text-anchor=\"end\">%.3g</text>\n",
                  f.x0 - 6.0, f.sy(v) + 4.0, v);
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace qdband::io
