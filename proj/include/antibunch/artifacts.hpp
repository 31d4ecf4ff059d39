#pragma once

// Files written by the pipeline: histogram CSV, plain tables, SVG line
// charts, content hashes and the run manifest.

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "antibunch/correlator.hpp"
#include "antibunch/errors.hpp"

namespace antibunch {

namespace fs = std::filesystem;

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

/// Shortest text that reads back to the same double.
inline std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Histogram CSV
//
//   # bin_width_ps = 100
//   # duration_ps = 200000000000
//   # rate_a_cps = ...
//   # rate_b_cps = ...
//   # total_pairs = ...
//   tau_ps_left_edge,counts,g2,g2_err
//   -20000,123,0.98,0.088
//
// g2 columns are blank when the rates are zero.

inline std::string histogram_csv(const CoincidenceHistogram& h) {
  std::ostringstream os;
  os << "# bin_width_ps = " << (h.bin_edges.size() > 1 ? h.bin_edges[1] - h.bin_edges[0] : 0) << '\n';
  os << "# duration_ps = " << h.duration << '\n';
  os << "# rate_a_cps = " << exact(h.rate_a) << '\n';
  os << "# rate_b_cps = " << exact(h.rate_b) << '\n';
  os << "# total_pairs = " << h.total_pairs << '\n';
  os << "tau_ps_left_edge,counts,g2,g2_err\n";
  const bool normalized = h.rate_a > 0.0 && h.rate_b > 0.0 && h.duration > 0;
  NormalizedHistogram n;
  if (normalized) n = normalize(h);
  for (std::size_t i = 0; i < h.size(); ++i) {
    os << h.bin_edges[i] << ',' << h.counts[i] << ',';
    if (normalized) os << exact(n.g2[i]) << ',' << exact(n.g2_err[i]);
    else os << ',';
    os << '\n';
  }
  return os.str();
}

inline CoincidenceHistogram parse_histogram_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::int64_t bin = 0;
  CoincidenceHistogram h;
  bool header = false;
  auto meta = [&](const std::string& l, const char* key) -> std::string {
    const std::string prefix = std::string("# ") + key + " = ";
    return l.rfind(prefix, 0) == 0 ? l.substr(prefix.size()) : std::string();
  };
  try {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        if (auto v = meta(line, "bin_width_ps"); !v.empty()) bin = std::stoll(v);
        if (auto v = meta(line, "duration_ps"); !v.empty()) h.duration = std::stoull(v);
        if (auto v = meta(line, "rate_a_cps"); !v.empty()) h.rate_a = std::stod(v);
        if (auto v = meta(line, "rate_b_cps"); !v.empty()) h.rate_b = std::stod(v);
        continue;
      }
      if (!header) {
        if (line.rfind("tau_ps_left_edge,counts", 0) != 0) throw InvalidArgument("missing column header");
        header = true;
        continue;
      }
      std::istringstream row(line);
      std::string left, count;
      std::getline(row, left, ',');
      std::getline(row, count, ',');
      h.bin_edges.push_back(std::stoll(left));
      h.counts.push_back(std::stoull(count));
    }
  } catch (const std::logic_error& e) {
    throw InvalidArgument(std::string("histogram csv: ") + e.what());
  }
  if (!header || h.counts.empty()) throw InvalidArgument("histogram csv: no rows");
  if (bin <= 0) throw InvalidArgument("histogram csv: missing bin_width_ps");
  for (std::size_t i = 1; i < h.bin_edges.size(); ++i) {
    if (h.bin_edges[i] - h.bin_edges[i - 1] != bin) throw InvalidArgument("histogram csv: bins are not contiguous");
  }
  h.bin_edges.push_back(h.bin_edges.back() + bin);
  for (auto c : h.counts) h.total_pairs += c;
  return h;
}

// ---------------------------------------------------------------------------
// SVG line charts

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f4e9c";
  bool step = false;
};

inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<PlotSeries>& series) {
  const double width = 720, height = 440, left = 70, right = 20, top = 40, bottom = 55;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
  if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  y0 = std::min(y0, 0.0);
  y1 += 0.05 * (y1 - y0);
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (width - left - right); };
  auto py = [&](double y) { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
     << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">"
       << fixed(xv, 3) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fixed(yv, 3)
       << "</text>\n";
  }
  os << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
     << xlabel << "</text>\n";
  os << "<text transform=\"translate(16," << (top + height - bottom) / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  int legend = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      os << fixed(px(s.x[i]), 2) << ',' << fixed(py(s.y[i]), 2) << ' ';
      if (s.step && i + 1 < s.x.size()) os << fixed(px(s.x[i + 1]), 2) << ',' << fixed(py(s.y[i]), 2) << ' ';
    }
    os << "\"/>\n";
    if (!s.label.empty()) {
      const double ly = top + 16 + 16 * legend++;
      os << "<line x1=\"" << width - right - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << width - right - 130
         << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\"/>\n";
      os << "<text x=\"" << width - right - 125 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Manifest

/// Collects the files of one run and writes manifest.json next to them.
class ArtifactSet {
 public:
  explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }

  void add(const std::string& name, const std::string& bytes) {
    write_file(dir_ / name, bytes);
    files_.push_back({{"path", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }

  /// Registers a file someone else already wrote.
  void adopt(const std::string& name) { add_hash(name, read_file(dir_ / name)); }

  const nlohmann::json& files() const { return files_; }

  fs::path write_manifest(nlohmann::json manifest) const {
    manifest["artifacts"] = files_;
    const fs::path path = dir_ / "manifest.json";
    write_file(path, manifest.dump(2) + "\n");
    return path;
  }

 private:
  void add_hash(const std::string& name, const std::string& bytes) {
    files_.push_back({{"path", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }

  fs::path dir_;
  nlohmann::json files_ = nlohmann::json::array();
};

}  // namespace antibunch
