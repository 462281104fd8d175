#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "density.hpp"
#include "fourier.hpp"
#include "model.hpp"

namespace shapeinv::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Shortest round-trip representation.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json to_json(const FourierSeries& f) {
  json re = json::array(), im = json::array();
  for (int l = -f.K(); l <= f.K(); ++l) {
    re.push_back(f[l].real());
    im.push_back(f[l].imag());
  }
  return json{{"K", f.K()}, {"identifiable", f.identifiable()}, {"re", re}, {"im", im}};
}

inline FourierSeries fourier_from_json(const json& j) {
  int K = j.at("K").get<int>();
  auto re = j.at("re").get<std::vector<double>>();
  auto im = j.at("im").get<std::vector<double>>();
  if (re.size() != static_cast<std::size_t>(2 * K + 1) || im.size() != re.size())
    throw std::invalid_argument("fourier_from_json: coefficient arrays must have length 2K+1");
  FourierSeries f(K);
  for (int l = -K; l <= K; ++l) f.set(l, cplx{re[l + K], im[l + K]});
  if (j.value("identifiable", false)) f.set_identifiable(true);
  return f;
}

inline json to_json(const ShiftDensity& g) { return json{{"M", g.M()}, {"values", g.values()}}; }

inline ShiftDensity density_from_json(const json& j) {
  auto v = j.at("values").get<std::vector<double>>();
  if (j.contains("M") && j.at("M").get<int>() != static_cast<int>(v.size()))
    throw std::invalid_argument("density_from_json: M does not match the number of values");
  return ShiftDensity(std::move(v));
}

inline json to_json(const Dataset& d) {
  json curves = json::array();
  for (auto& c : d.curves) {
    json re = json::array(), im = json::array();
    for (auto& y : c.y) {
      re.push_back(y.real());
      im.push_back(y.imag());
    }
    json cj{{"re", re}, {"im", im}};
    if (c.hidden_shift) cj["tau"] = *c.hidden_shift;
    curves.push_back(std::move(cj));
  }
  json out{{"K", d.K}, {"sigma", d.sigma}, {"seed", d.seed}, {"n", d.n()}, {"curves", curves},
           {"warnings", d.warnings}};
  if (d.truth) out["truth"] = json{{"f", to_json(d.truth->f)}, {"g", to_json(d.truth->g)}};
  return out;
}

inline Dataset dataset_from_json(const json& j) {
  Dataset d;
  d.K = j.at("K").get<int>();
  d.sigma = j.value("sigma", 1.0);
  d.seed = j.value("seed", std::uint64_t{0});
  for (auto& c : j.at("curves")) {
    CurveObservation o;
    o.K = d.K;
    if (c.contains("tau")) o.hidden_shift = c.at("tau").get<double>();
    o.noise_level = d.sigma;
    auto re = c.at("re").get<std::vector<double>>();
    auto im = c.at("im").get<std::vector<double>>();
    if (re.size() != static_cast<std::size_t>(2 * d.K + 1) || im.size() != re.size())
      throw std::invalid_argument("dataset_from_json: curve length must be 2K+1");
    for (std::size_t i = 0; i < re.size(); ++i) o.y.emplace_back(re[i], im[i]);
    d.curves.push_back(std::move(o));
  }
  if (j.contains("warnings")) d.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("truth"))
    d.truth = Truth{fourier_from_json(j.at("truth").at("f")), density_from_json(j.at("truth").at("g"))};
  return d;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

// CSV with a leading "# config: {...}" line followed by the header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : cols_(std::move(columns)) {}

  CsvTable& row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_.size()) throw std::invalid_argument("CsvTable: row width differs from header");
    rows_.push_back(cells);
    return *this;
  }
  CsvTable& row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    for (double v : cells) s.push_back(fmt(v));
    return row(s);
  }

  const std::vector<std::string>& columns() const { return cols_; }
  std::size_t size() const { return rows_.size(); }

  std::string str(const json& config) const {
    std::ostringstream os;
    os << "# config: " << config.dump() << "\n";
    for (std::size_t i = 0; i < cols_.size(); ++i) os << (i ? "," : "") << cols_[i];
    os << "\n";
    for (auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

  void write(const std::filesystem::path& p, const json& config) const { write_text(p, str(config)); }

 private:
  std::vector<std::string> cols_;
  std::vector<std::vector<std::string>> rows_;
};

// ---------------------------------------------------------------------------
// SVG line plots
// ---------------------------------------------------------------------------

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string xlabel, ylabel;
  bool logx = false, logy = false;
  int width = 640, height = 420;
};

inline std::string svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series, const json& config) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  auto tx = [&](double v) { return spec.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((spec.logx && !(s.x[i] > 0)) || (spec.logy && !(s.y[i] > 0)) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i])), x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i])), y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;
  const double L = 70, R = 160, T = 40, B = 50;
  double W = spec.width, H = spec.height;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream os;
  char buf[128];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  std::string cfg = config.dump();
  for (std::size_t p = cfg.find("--"); p != std::string::npos; p = cfg.find("--", p)) cfg.replace(p, 2, "- -");
  os << "<!-- config: " << cfg << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << spec.title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    double vx = spec.logx ? std::pow(10.0, fx) : fx, vy = spec.logy ? std::pow(10.0, fy) : fy;
    std::snprintf(buf, sizeof buf, "%.3g", vx);
    os << "<text x=\"" << px(vx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.3g", vy);
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << spec.xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
     << ")\" text-anchor=\"middle\">" << spec.ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 7];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
       << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((spec.logx && !(s.x[i] > 0)) || (spec.logy && !(s.y[i] > 0)) || !std::isfinite(s.y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
      os << buf;
    }
    os << "\"/>\n";
    double ly = T + 16 + 18 * k;
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 34 << "\" y2=\"" << ly << "\" stroke=\""
       << c << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    os << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace shapeinv::io
