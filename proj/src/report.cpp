#include "membrana/report.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#ifndef MEMBRANA_VERSION
#define MEMBRANA_VERSION "unknown"
#endif

namespace membrana {

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

const char* class_color(PointClass c) {
  switch (c) {
    case PointClass::CoexistencePredicted:
      return "#a6d96a";
    case PointClass::NonExistenceNecessary:
      return "#d9d9d9";
    case PointClass::NonExistenceLarge:
      return "#fdae61";
    case PointClass::Indeterminate:
      return "#f7f7f7";
  }
  return "#ffffff";
}

}  // namespace

const char* software_version() { return MEMBRANA_VERSION; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<Cell> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("csv: row width differs from the header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const auto& cells, auto&& cell_text) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k > 0) out += ',';
      out += cell_text(cells[k]);
    }
    out += '\n';
  };
  line(header_, [](const std::string& s) { return s; });
  for (const auto& row : rows_) {
    line(row, [](const Cell& c) {
      if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
      if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
      return std::get<std::string>(c);
    });
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  const auto tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

void write_manifest(const std::filesystem::path& dir, const std::string& command, const Json& resolved_config,
                    int threads, const std::vector<std::string>& outputs) {
  Json m;
  m["software"] = "membrana";
  m["version"] = software_version();
  m["command"] = command;
  m["config"] = resolved_config;
  m["threads"] = threads;
  m["outputs"] = outputs;
  write_file_atomic(dir / "manifest.json", json_text(m));
}

std::string render_region_svg(const RegionMap& map, const std::vector<CurveSeries>& curves,
                              const std::vector<PlotMarker>& markers, const std::string& title) {
  const GridSpec& g = map.grid;
  const double width = 760.0, height = 560.0;
  const double left = 70.0, top = 40.0, pw = 460.0, ph = 440.0;
  const double dx = (g.x_max - g.x_min) / (g.nx - 1);
  const double dmu = (g.mu_max - g.mu_min) / (g.nmu - 1);
  const double x0 = g.x_min - 0.5 * dx, x1 = g.x_max + 0.5 * dx;
  const double y0 = g.mu_min - 0.5 * dmu, y1 = g.mu_max + 0.5 * dmu;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };
  // Keeps far-away curve points from producing unwieldy coordinates; the clip path
  // hides everything outside the plot anyway.
  auto clamp_px = [](double v) { return std::clamp(v, -1e4, 1e4); };

  const bool equal = map.mode == RegionMode::EqualLambda;
  const std::string xname = equal ? "\xCE\xBB" : "\xCE\xBB\xE2\x82\x81";  // lambda, lambda_1

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed2(width) + "\" height=\"" + fixed2(height) +
       "\" viewBox=\"0 0 " + fixed2(width) + " " + fixed2(height) + "\" font-family=\"sans-serif\">\n";
  s += "<defs><clipPath id=\"plot\"><rect x=\"" + fixed2(left) + "\" y=\"" + fixed2(top) + "\" width=\"" +
       fixed2(pw) + "\" height=\"" + fixed2(ph) + "\"/></clipPath></defs>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fixed2(width) + "\" height=\"" + fixed2(height) + "\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    s += "<text x=\"" + fixed2(left + 0.5 * pw) + "\" y=\"24.00\" text-anchor=\"middle\" font-size=\"15\">" +
         xml_escape(title) + "</text>\n";
  }

  s += "<g id=\"cells\" shape-rendering=\"crispEdges\">\n";
  const double cw = pw / g.nx, ch = ph / g.nmu;
  for (const auto& c : map.cells) {
    s += "<rect x=\"" + fixed2(px(c.x) - 0.5 * cw) + "\" y=\"" + fixed2(py(c.mu) - 0.5 * ch) + "\" width=\"" +
         fixed2(cw) + "\" height=\"" + fixed2(ch) + "\" fill=\"" + class_color(c.cls) + "\"/>\n";
  }
  s += "</g>\n<g id=\"confirmation\">\n";
  const double r = std::max(1.0, 0.2 * std::min(cw, ch));
  for (const auto& c : map.cells) {
    if (c.confirmation == Confirmation::Unchecked) continue;
    const char* color = c.confirmation == Confirmation::Confirmed ? "#1a9641" : "#d7191c";
    s += "<circle cx=\"" + fixed2(px(c.x)) + "\" cy=\"" + fixed2(py(c.mu)) + "\" r=\"" + fixed2(r) + "\" fill=\"" +
         color + "\"/>\n";
  }
  s += "</g>\n";

  s += "<g id=\"curves\" clip-path=\"url(#plot)\" fill=\"none\" stroke-width=\"2\">\n";
  for (const auto& cs : curves) {
    std::string d;
    bool pen = false;
    for (const auto& [x, y] : cs.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) {
        pen = false;
        continue;
      }
      d += (pen ? " L" : (d.empty() ? "M" : " M")) + fixed2(clamp_px(px(x))) + " " + fixed2(clamp_px(py(y)));
      pen = true;
    }
    if (d.empty()) continue;
    s += "<path d=\"" + d + "\" stroke=\"" + cs.color + "\"" + (cs.dashed ? " stroke-dasharray=\"6 4\"" : "") +
         "/>\n";
  }
  s += "</g>\n";

  s += "<g id=\"markers\">\n";
  for (const auto& m : markers) {
    if (!std::isfinite(m.x) || !std::isfinite(m.y)) continue;
    s += "<circle cx=\"" + fixed2(px(m.x)) + "\" cy=\"" + fixed2(py(m.y)) +
         "\" r=\"4.00\" fill=\"#000000\"/>\n<text x=\"" + fixed2(px(m.x) + 6.0) + "\" y=\"" + fixed2(py(m.y) - 6.0) +
         "\" font-size=\"12\">" + xml_escape(m.label) + "</text>\n";
  }
  s += "</g>\n";

  // Axes with five intervals per axis, ticks at grid values.
  s += "<g id=\"axes\" stroke=\"#000000\" font-size=\"12\">\n";
  s += "<rect x=\"" + fixed2(left) + "\" y=\"" + fixed2(top) + "\" width=\"" + fixed2(pw) + "\" height=\"" +
       fixed2(ph) + "\" fill=\"none\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = g.x_min + (g.x_max - g.x_min) * k / 5.0;
    const double yv = g.mu_min + (g.mu_max - g.mu_min) * k / 5.0;
    s += "<line x1=\"" + fixed2(px(xv)) + "\" y1=\"" + fixed2(top + ph) + "\" x2=\"" + fixed2(px(xv)) + "\" y2=\"" +
         fixed2(top + ph + 5.0) + "\"/>\n";
    s += "<text x=\"" + fixed2(px(xv)) + "\" y=\"" + fixed2(top + ph + 19.0) +
         "\" text-anchor=\"middle\" stroke=\"none\">" + tick_label(xv) + "</text>\n";
    s += "<line x1=\"" + fixed2(left - 5.0) + "\" y1=\"" + fixed2(py(yv)) + "\" x2=\"" + fixed2(left) + "\" y2=\"" +
         fixed2(py(yv)) + "\"/>\n";
    s += "<text x=\"" + fixed2(left - 8.0) + "\" y=\"" + fixed2(py(yv) + 4.0) +
         "\" text-anchor=\"end\" stroke=\"none\">" + tick_label(yv) + "</text>\n";
  }
  s += "<text x=\"" + fixed2(left + 0.5 * pw) + "\" y=\"" + fixed2(top + ph + 42.0) +
       "\" text-anchor=\"middle\" stroke=\"none\" font-size=\"14\">" + xname + "</text>\n";
  s += "<text x=\"" + fixed2(left - 48.0) + "\" y=\"" + fixed2(top + 0.5 * ph) +
       "\" text-anchor=\"middle\" stroke=\"none\" font-size=\"14\">\xCE\xBC</text>\n";
  s += "</g>\n";

  // Legend.
  s += "<g id=\"legend\" font-size=\"12\">\n";
  double ly = top + 10.0;
  const double lx = left + pw + 20.0;
  auto swatch = [&](const std::string& fill, const std::string& label) {
    s += "<rect x=\"" + fixed2(lx) + "\" y=\"" + fixed2(ly) + "\" width=\"14.00\" height=\"14.00\" fill=\"" + fill +
         "\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n<text x=\"" + fixed2(lx + 20.0) + "\" y=\"" +
         fixed2(ly + 11.0) + "\">" + xml_escape(label) + "</text>\n";
    ly += 22.0;
  };
  for (PointClass c : {PointClass::CoexistencePredicted, PointClass::NonExistenceNecessary,
                       PointClass::NonExistenceLarge, PointClass::Indeterminate}) {
    swatch(class_color(c), to_string(c));
  }
  auto dot = [&](const std::string& fill, const std::string& label) {
    s += "<circle cx=\"" + fixed2(lx + 7.0) + "\" cy=\"" + fixed2(ly + 7.0) + "\" r=\"4.00\" fill=\"" + fill +
         "\"/>\n<text x=\"" + fixed2(lx + 20.0) + "\" y=\"" + fixed2(ly + 11.0) + "\">" + xml_escape(label) +
         "</text>\n";
    ly += 22.0;
  };
  dot("#1a9641", "confirmed (Newton)");
  dot("#d7191c", "refuted (flow)");
  for (const auto& cs : curves) {
    s += "<line x1=\"" + fixed2(lx) + "\" y1=\"" + fixed2(ly + 7.0) + "\" x2=\"" + fixed2(lx + 14.0) + "\" y2=\"" +
         fixed2(ly + 7.0) + "\" stroke=\"" + cs.color + "\" stroke-width=\"2\"" +
         (cs.dashed ? " stroke-dasharray=\"4 2\"" : "") + "/>\n<text x=\"" + fixed2(lx + 20.0) + "\" y=\"" +
         fixed2(ly + 11.0) + "\">" + xml_escape(cs.label) + "</text>\n";
    ly += 22.0;
  }
  s += "</g>\n</svg>\n";
  return s;
}

std::string matrix_text(const RowMatrix& m) {
  std::string out;
  char buf[96];
  for (Eigen::Index i = 0; i < m.outerSize(); ++i) {
    for (RowMatrix::InnerIterator it(m, i); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld ", static_cast<long long>(it.row()), static_cast<long long>(it.col()));
      out += buf;
      out += format_number(it.value());
      out += '\n';
    }
  }
  return out;
}

}  // namespace membrana
