#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vkde/estimators.hpp"

namespace vkde {
namespace io {

//! Malformed input file; the message carries file and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! File-system level failure (missing file, unwritable path).
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Formats a double with 17 significant digits: enough for exact
//! round-trips, and byte-stable across reruns.
inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

//! Writes a CSV file with a header row; all values at 17 significant
//! digits.
inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows)
{
  std::ofstream out(path);
  if (!out)
    throw FileError("cannot open '" + path.string() + "' for writing");
  for (std::size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::logic_error("write_csv: ragged row");
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? "," : "") << format_double(row[j]);
    out << "\n";
  }
  if (!out)
    throw FileError("write failed on '" + path.string() + "'");
}

namespace detail {

inline std::string trim(const std::string& s)
{
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos)
    return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

//! Splits a line on commas when it has any (keeping empty fields so they
//! can be reported), otherwise on whitespace.
inline std::vector<std::string> split_fields(const std::string& line)
{
  std::vector<std::string> out;
  if (line.find(',') != std::string::npos) {
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        out.push_back(trim(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    out.push_back(trim(cur));
    return out;
  }
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok)
    out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& field,
                           const std::filesystem::path& path, std::size_t line)
{
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0' || errno == ERANGE ||
      !std::isfinite(v))
    throw ParseError(path.string() + ":" + std::to_string(line) +
                     ": expected a finite number, got '" + field + "'");
  return v;
}

} // namespace detail

//! Reads a numeric CSV (comma or whitespace separated, '#' comments and a
//! single optional non-numeric header row allowed) into rows; every data
//! row must have the same number of fields.
inline std::vector<std::vector<double>>
read_numeric_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw FileError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_allowed = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.erase(hash);
    const auto fields = detail::split_fields(line);
    if (fields.empty())
      continue;
    if (header_allowed) {
      header_allowed = false;
      char* end = nullptr;
      std::strtod(fields[0].c_str(), &end);
      if (end == fields[0].c_str())
        continue; // non-numeric first row: treat as header
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields)
      row.push_back(detail::parse_double(f, path, lineno));
    if (width == 0)
      width = row.size();
    else if (row.size() != width)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected " + std::to_string(width) +
                       " column(s), got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

//! Loads an observation file into a Sample (one or two numeric columns).
inline Sample load_sample(const std::filesystem::path& path)
{
  const auto rows = read_numeric_csv(path);
  if (rows.empty())
    throw ParseError(path.string() + ": no observations");
  const std::size_t width = rows.front().size();
  if (width > 2)
    throw ParseError(path.string() + ": expected 1 or 2 columns, got " +
                     std::to_string(width));
  std::vector<double> data;
  data.reserve(rows.size() * width);
  for (const auto& row : rows)
    data.insert(data.end(), row.begin(), row.end());
  return Sample(std::move(data), static_cast<int>(width));
}

//! Writes pretty-printed JSON.
inline void write_json(const std::filesystem::path& path,
                       const nlohmann::ordered_json& j)
{
  std::ofstream out(path);
  if (!out)
    throw FileError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
  if (!out)
    throw FileError("write failed on '" + path.string() + "'");
}

//! One named curve of a line plot.
struct Series {
  std::string name;
  std::vector<double> y;
};

//! Minimal SVG line-plot writer for the plot-data CSVs: shared abscissa,
//! one polyline per series, linear axes with a handful of ticks.
inline void write_svg_lines(const std::filesystem::path& path,
                            const std::vector<double>& x,
                            const std::vector<Series>& series,
                            const std::string& title,
                            const std::string& xlabel,
                            const std::string& ylabel)
{
  if (x.size() < 2 || series.empty())
    throw std::invalid_argument("write_svg_lines: nothing to plot");
  for (const auto& s : series)
    if (s.y.size() != x.size())
      throw std::invalid_argument("write_svg_lines: series length mismatch");
  const double W = 900, H = 560, ml = 70, mr = 160, mt = 40, mb = 55;
  double xmin = x.front(), xmax = x.front();
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  double ymin = series[0].y[0], ymax = ymin;
  for (const auto& s : series)
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  if (xmax == xmin)
    xmax = xmin + 1.0;
  if (ymax == ymin)
    ymax = ymin + 1.0;
  const auto px = [&](double v) {
    return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  const auto py = [&](double v) {
    return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
      << "' height='" << H << "' viewBox='0 0 " << W << " " << H << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << W / 2 << "' y='24' text-anchor='middle' "
      << "font-family='sans-serif' font-size='16'>" << title << "</text>\n";
  // axes
  svg << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr
      << "' y2='" << H - mb << "' stroke='black'/>\n"
      << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
      << H - mb << "' stroke='black'/>\n";
  char buf[64];
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    std::snprintf(buf, sizeof(buf), "%.4g", xv);
    svg << "<text x='" << px(xv) << "' y='" << H - mb + 18
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
        << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.4g", yv);
    svg << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
        << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
        << buf << "</text>\n"
        << "<line x1='" << ml - 4 << "' y1='" << py(yv) << "' x2='" << ml
        << "' y2='" << py(yv) << "' stroke='black'/>\n"
        << "<line x1='" << px(xv) << "' y1='" << H - mb << "' x2='" << px(xv)
        << "' y2='" << H - mb + 4 << "' stroke='black'/>\n";
  }
  svg << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 14
      << "' text-anchor='middle' font-family='sans-serif' font-size='13'>"
      << xlabel << "</text>\n"
      << "<text x='18' y='" << (mt + H - mb) / 2
      << "' text-anchor='middle' font-family='sans-serif' font-size='13' "
      << "transform='rotate(-90 18 " << (mt + H - mb) / 2 << ")'>" << ylabel
      << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 6];
    svg << "<polyline fill='none' stroke='" << color
        << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < x.size(); ++i)
      svg << px(x[i]) << "," << py(series[s].y[i]) << " ";
    svg << "'/>\n";
    const double ly = mt + 18.0 * static_cast<double>(s);
    svg << "<line x1='" << W - mr + 10 << "' y1='" << ly << "' x2='"
        << W - mr + 34 << "' y2='" << ly << "' stroke='" << color
        << "' stroke-width='2'/>\n"
        << "<text x='" << W - mr + 40 << "' y='" << ly + 4
        << "' font-family='sans-serif' font-size='12'>" << series[s].name
        << "</text>\n";
  }
  svg << "</svg>\n";
  std::ofstream out(path);
  if (!out)
    throw FileError("cannot open '" + path.string() + "' for writing");
  out << svg.str();
  if (!out)
    throw FileError("write failed on '" + path.string() + "'");
}

} // namespace io
} // namespace vkde
