#include "hypbridge/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <sstream>
#include <stdexcept>

namespace hypbridge::report {

SummaryRow banded(std::string name, std::string anchor, double value, std::optional<double> lower,
                  std::optional<double> upper, std::string detail) {
  SummaryRow r;
  r.name = std::move(name);
  r.anchor = std::move(anchor);
  r.value = value;
  r.lower = lower;
  r.upper = upper;
  r.checked = true;
  r.pass = std::isfinite(value) && (!lower || value >= *lower) && (!upper || value <= *upper);
  r.detail = std::move(detail);
  return r;
}

SummaryRow info(std::string name, std::string anchor, double value, std::string detail) {
  SummaryRow r;
  r.name = std::move(name);
  r.anchor = std::move(anchor);
  r.value = value;
  r.detail = std::move(detail);
  return r;
}

SummaryRow check(std::string name, std::string anchor, bool ok, std::string detail) {
  SummaryRow r = banded(std::move(name), std::move(anchor), ok ? 1.0 : 0.0, 1.0, 1.0, std::move(detail));
  return r;
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw std::logic_error("Table::add: row width does not match header in " + file);
  rows.push_back(std::move(row));
}

bool ReportBundle::pass() const {
  return std::all_of(summary.begin(), summary.end(), [](const SummaryRow& r) { return r.pass; });
}

const SummaryRow& ReportBundle::row(const std::string& name) const {
  for (const auto& r : summary)
    if (r.name == name) return r;
  throw std::out_of_range("no summary row named " + name);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(std::size_t v) { return std::to_string(v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string to_csv(const Table& table) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += "\r\n";
  };
  line(table.columns);
  for (const auto& r : table.rows) line(r);
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(t);
  return ticks;
}

std::string short_num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

std::string to_svg(const Plot& plot) {
  constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(plot.title)
     << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : nice_ticks(x0, x1)) {
    os << "<line x1=\"" << px(t) << "\" x2=\"" << px(t) << "\" y1=\"" << H - B << "\" y2=\"" << H - B + 5
       << "\" stroke=\"black\"/><text x=\"" << px(t) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
       << short_num(t) << "</text>\n";
  }
  for (double t : nice_ticks(y0, y1)) {
    os << "<line x1=\"" << L - 5 << "\" x2=\"" << L << "\" y1=\"" << py(t) << "\" y2=\"" << py(t)
       << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">"
       << short_num(t) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << xml_escape(plot.xlabel) << "</text>\n";
  os << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << xml_escape(plot.ylabel) << "</text>\n";
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* col = colors[k % 6];
    if (s.line) {
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
        if (std::isfinite(s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      os << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
        if (std::isfinite(s.y[i]))
          os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    }
    const double ly = T + 16 + 18 * static_cast<double>(k);
    os << "<rect x=\"" << W - R + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"10\" fill=\"" << col
       << "\"/><text x=\"" << W - R + 30 << "\" y=\"" << ly << "\">" << xml_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(fmt(v)); }

}  // namespace

nlohmann::json summary_json(const ReportBundle& bundle, bool with_plots) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : bundle.summary) {
    rows.push_back({{"name", r.name},
                    {"anchor", r.anchor},
                    {"value", num(r.value)},
                    {"target", opt(r.target)},
                    {"lower", opt(r.lower)},
                    {"upper", opt(r.upper)},
                    {"checked", r.checked},
                    {"pass", r.pass},
                    {"detail", r.detail}});
  }
  nlohmann::json files = nlohmann::json::array();
  for (const auto& t : bundle.tables) files.push_back(t.file);
  if (with_plots)
    for (const auto& p : bundle.plots) files.push_back(p.file);
  return {{"experiment", bundle.experiment},
          {"pass", bundle.pass()},
          {"rows", rows},
          {"files", files},
          {"provenance",
           {{"config", bundle.config}, {"library_version", kLibraryVersion}, {"wall_seconds", bundle.wall_seconds}}}};
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir, bool with_plots) {
  std::filesystem::create_directories(dir);
  auto write = [&dir](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
  };
  for (const auto& t : bundle.tables) write(t.file, to_csv(t));
  if (with_plots)
    for (const auto& p : bundle.plots) write(p.file, to_svg(p));
  write("summary.json", summary_json(bundle, with_plots).dump(2) + "\n");
}

}  // namespace hypbridge::report
