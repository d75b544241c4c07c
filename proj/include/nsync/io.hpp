#pragma once

// Output files: CSV with a commented audit header, and plot scripts in a
// small backend-neutral line-plot grammar (see README).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nsync/config.hpp"

namespace nsync {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Audit header: command, seed and the full resolved config, every line "# "-prefixed.
inline std::string audit_header(const std::string& command, const RunConfig& cfg) {
  std::string out = "# nsync " + command + "\n# seed = " + std::to_string(cfg.sim.run.seed) + "\n";
  std::istringstream in(dump_config(cfg));
  std::string line;
  while (std::getline(in, line)) out += line.empty() ? "#\n" : "# " + line + "\n";
  return out;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw OutputError("cannot write '" + path.string() + "'");
  return out;
}

class CsvWriter {
 public:
  using Cell = std::variant<double, long long, std::string>;

  CsvWriter(const std::filesystem::path& path, const std::string& header,
            const std::vector<std::string>& columns)
      : path_(path), out_(open_output(path)), width_(columns.size()) {
    out_ << header;
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != width_) throw OutputError("row width mismatch in '" + path_.string() + "'");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) out_ << detail::fmt(v);
            else out_ << v;
          },
          cells[i]);
    }
    out_ << '\n';
  }

  ~CsvWriter() { out_.flush(); }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

/// Builder for the line-plot grammar:
///   figure <title>
///   xlabel <text> / ylabel <text> / yscale linear|log
///   series <label> file=<csv> x=<col> y=<col> [where=<col>:<value>] style=line|points
class PlotScript {
 public:
  PlotScript& figure(const std::string& title) {
    text_ += (text_.empty() ? "" : "\n") + std::string("figure ") + title + "\n";
    return *this;
  }
  PlotScript& xlabel(const std::string& s) { return line("xlabel " + s); }
  PlotScript& ylabel(const std::string& s) { return line("ylabel " + s); }
  PlotScript& yscale(const std::string& s) { return line("yscale " + s); }
  PlotScript& series(const std::string& label, const std::string& file, const std::string& x,
                     const std::string& y, const std::string& style = "line",
                     const std::string& where = "") {
    std::string s = "series " + label + " file=" + file + " x=" + x + " y=" + y;
    if (!where.empty()) s += " where=" + where;
    return line(s + " style=" + style);
  }

  void write(const std::filesystem::path& path, const std::string& header) const {
    auto out = open_output(path);
    out << header << text_;
  }
  const std::string& str() const { return text_; }

 private:
  PlotScript& line(const std::string& s) {
    text_ += s + "\n";
    return *this;
  }
  std::string text_;
};

inline void write_text(const std::filesystem::path& path, const std::string& header,
                       const std::string& body) {
  auto out = open_output(path);
  out << header << body;
}

/// Histogram file: header, then "x1_edges", "x2_edges" lines and row-major counts.
inline void write_histogram(const std::filesystem::path& path, const std::string& header,
                            const Histogram2D& h) {
  auto out = open_output(path);
  out << header << "# samples = " << h.samples() << " in_range = " << h.normalization
      << " out_of_range = " << h.out_of_range << "\n";
  out << "x1_edges";
  for (double e : h.x1_edges) out << ' ' << detail::fmt(e);
  out << "\nx2_edges";
  for (double e : h.x2_edges) out << ' ' << detail::fmt(e);
  out << '\n';
  for (std::size_t i = 0; i < h.n1(); ++i) {
    for (std::size_t j = 0; j < h.n2(); ++j) out << (j ? " " : "") << h.at(i, j);
    out << '\n';
  }
}

}  // namespace nsync
