#include <boost/crc.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "bsplit/io.hpp"

namespace bsplit {

namespace {

constexpr char kMagic[8] = {'B', 'S', 'P', 'L', 'I', 'T', '1', '\0'};
constexpr std::uint32_t kEndianTag = 0x01020304u;

class ByteWriter {
 public:
  template <class T>
  void put(T x) {
    const auto* p = reinterpret_cast<const unsigned char*>(&x);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& b) : b_(b) {}
  void swap_bytes(bool s) { swap_ = s; }
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > b_.size()) throw Error("snapshot checksum mismatch: file truncated");
    unsigned char tmp[sizeof(T)];
    std::memcpy(tmp, b_.data() + pos_, sizeof(T));
    if (swap_) std::reverse(tmp, tmp + sizeof(T));
    pos_ += sizeof(T);
    T out;
    std::memcpy(&out, tmp, sizeof(T));
    return out;
  }
  void raw(void* p, std::size_t n) {
    if (pos_ + n > b_.size()) throw Error("snapshot checksum mismatch: file truncated");
    std::memcpy(p, b_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t position() const { return pos_; }

 private:
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
  bool swap_ = false;
};

std::uint32_t crc32(const unsigned char* p, std::size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(p, n);
  return crc.checksum();
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw Error("bad CSV number '" + s + "'");
  return out;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_snapshot(const Snapshot& snap, const std::filesystem::path& path) {
  const DistributionField& f = snap.field;
  if (f.values.size() != f.vgrid.size() * f.xgrid.size())
    throw Error("snapshot field has an inconsistent size");
  ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kEndianTag);
  w.put<std::int32_t>(f.vgrid.dim());
  w.put<std::int32_t>(f.vgrid.n_per_axis());
  w.put<std::int32_t>(f.xgrid.spatial_dims());
  w.put<std::int32_t>(f.xgrid.n_per_axis());
  w.put<double>(f.vgrid.radius());
  w.put<double>(snap.gamma);
  w.put<double>(snap.s);
  w.put<double>(snap.q);
  w.put<double>(f.time);
  w.put<std::int64_t>(snap.position);
  w.put<std::int32_t>(snap.position % 2);
  w.put<std::uint64_t>(f.values.size());
  w.raw(f.values.data(), f.values.size() * sizeof(double));
  const std::uint32_t crc = crc32(w.bytes().data(), w.bytes().size());
  w.put<std::uint32_t>(crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write snapshot " + path.string());
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error("failed writing snapshot " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open snapshot " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  ByteReader r(bytes);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw Error("not a BSPLIT1 snapshot");
  const std::uint32_t tag = r.get<std::uint32_t>();
  if (tag != kEndianTag) {
    if (__builtin_bswap32(tag) != kEndianTag) throw Error("snapshot has a corrupt byte-order tag");
    r.swap_bytes(true);
  }
  const int dim = r.get<std::int32_t>();
  const int nv = r.get<std::int32_t>();
  const int sd = r.get<std::int32_t>();
  const int nx = r.get<std::int32_t>();
  const double R = r.get<double>();
  Snapshot snap;
  snap.gamma = r.get<double>();
  snap.s = r.get<double>();
  snap.q = r.get<double>();
  const double time = r.get<double>();
  const std::int64_t position = r.get<std::int64_t>();
  const int parity = r.get<std::int32_t>();
  const std::uint64_t count = r.get<std::uint64_t>();
  if (position < 0 || position > std::numeric_limits<int>::max() || parity != position % 2)
    throw Error("snapshot position and parity disagree");
  if (dim != 2 && dim != 3) throw Error("snapshot has an invalid velocity dimension");
  if (nv < 1 || nx < 1 || sd < 0 || sd > dim || !(R > 0.0))
    throw Error("snapshot has invalid grid parameters");
  const auto [vg, xg] = build_grids({dim, R, nv, sd, nx});
  if (count != vg.size() * xg.size()) throw Error("snapshot value count does not match its grids");
  const std::size_t payload = r.position() + count * sizeof(double);
  if (bytes.size() != payload + sizeof(std::uint32_t)) throw Error("snapshot checksum mismatch: file truncated");
  DistributionField f(vg, xg, time);
  for (auto& x : f.values) x = r.get<double>();
  const std::uint32_t stored = r.get<std::uint32_t>();
  if (stored != crc32(bytes.data(), payload)) throw Error("snapshot checksum mismatch");
  snap.field = std::move(f);
  snap.position = static_cast<int>(position);
  return snap;
}

void check_snapshot_matches(const Snapshot& snap, const RunConfig& cfg) {
  const auto [vg, xg] = build_grids(cfg.grid);
  if (!(snap.field.vgrid == vg)) throw Error("snapshot velocity grid differs from the config");
  if (!(snap.field.xgrid == xg)) throw Error("snapshot spatial grid differs from the config");
  if (snap.gamma != cfg.physics.gamma || snap.s != cfg.physics.s)
    throw Error("snapshot kernel exponents differ from the config");
  if (snap.position > cfg.schedule.N) throw Error("snapshot lies beyond the configured schedule");
  const double t = cfg.schedule.t(snap.position);
  if (std::abs(t - snap.field.time) > 1e-12 * std::max(1.0, cfg.schedule.T))
    throw Error("snapshot time does not match its schedule position");
}

std::vector<std::string> csv_columns(const std::vector<double>& q_list) {
  std::vector<std::string> c = {"time",       "position",   "kind",   "mass",
                                "momentum_x", "momentum_y", "momentum_z", "energy",
                                "entropy"};
  for (double q : q_list) c.push_back("sup_q" + fmt(q));
  c.insert(c.end(), {"barrier_margin", "negative_mass", "min_density"});
  for (const auto& name : lemma_names()) c.push_back("c_" + name);
  return c;
}

void emit_csv(const std::vector<DiagnosticsRow>& rows, const std::vector<double>& q_list,
              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write CSV " + path.string());
  const auto cols = csv_columns(q_list);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  const std::size_t nl = lemma_names().size();
  for (const auto& r : rows) {
    if (r.weighted_sup.size() != q_list.size()) throw Error("row weighted_sup size mismatch");
    out << fmt(r.time) << "," << r.position << "," << r.kind << "," << fmt(r.mass);
    for (int a = 0; a < 3; ++a) out << "," << fmt(r.momentum[a]);
    out << "," << fmt(r.energy) << "," << fmt(r.entropy);
    for (double w : r.weighted_sup) out << "," << fmt(w);
    out << "," << fmt(r.barrier_margin) << "," << fmt(r.negative_mass) << ","
        << fmt(r.min_density);
    for (std::size_t k = 0; k < nl; ++k)
      out << "," << fmt(k < r.lemma_constants.size() ? r.lemma_constants[k]
                                                    : std::numeric_limits<double>::quiet_NaN());
    out << "\n";
  }
  if (!out) throw Error("failed writing CSV " + path.string());
}

std::vector<DiagnosticsRow> parse_csv(const std::filesystem::path& path,
                                      std::vector<double>* q_list) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("CSV is empty");
  const auto header = split_commas(line);
  std::vector<double> qs;
  for (const auto& h : header)
    if (h.rfind("sup_q", 0) == 0) qs.push_back(parse_number(h.substr(5)));
  if (header != csv_columns(qs)) throw Error("CSV header does not match the expected columns");
  const std::size_t nq = qs.size();
  const std::size_t nl = lemma_names().size();
  std::vector<DiagnosticsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_commas(line);
    if (c.size() != header.size())
      throw Error("CSV line " + std::to_string(lineno) + " has the wrong column count");
    DiagnosticsRow r;
    std::size_t k = 0;
    r.time = parse_number(c[k++]);
    r.position = static_cast<int>(parse_number(c[k++]));
    r.kind = c[k++];
    r.mass = parse_number(c[k++]);
    for (int a = 0; a < 3; ++a) r.momentum[a] = parse_number(c[k++]);
    r.energy = parse_number(c[k++]);
    r.entropy = parse_number(c[k++]);
    for (std::size_t i = 0; i < nq; ++i) r.weighted_sup.push_back(parse_number(c[k++]));
    r.barrier_margin = parse_number(c[k++]);
    r.negative_mass = parse_number(c[k++]);
    r.min_density = parse_number(c[k++]);
    for (std::size_t i = 0; i < nl; ++i) r.lemma_constants.push_back(parse_number(c[k++]));
    rows.push_back(std::move(r));
  }
  if (q_list) *q_list = qs;
  return rows;
}

std::string svg_chart(const ChartSpec& spec, const std::vector<ChartSeries>& series) {
  constexpr double W = 640, H = 400, left = 70, right = 150, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
      }
  const bool empty = !(x0 <= x1);
  if (empty) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 0) {
    const double pad = std::max(std::abs(y0) * 0.1, 0.5);
    y0 -= pad, y1 += pad;
  }
  auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (ty(y) - y0) / (y1 - y0) * ph; };
  auto label = [](double v, bool log) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", log ? std::pow(10.0, v) : v);
    return std::string(buf);
  };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0, fy = y0 + (y1 - y0) * t / 4.0;
    const double sx = left + pw * t / 4.0, sy = top + ph - ph * t / 4.0;
    o << "<text x=\"" << sx << "\" y=\"" << top + ph + 15 << "\" text-anchor=\"middle\">"
      << label(fx, spec.log_x) << "</text>\n";
    o << "<text x=\"" << left - 5 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
      << label(fy, spec.log_y) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text x=\"15\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
    << top + ph / 2 << ")\">" << escape(spec.y_label) << "</text>\n";
  if (empty)
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << top + ph / 2
      << "\" text-anchor=\"middle\">no data</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 8];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i], s.y[i])) pts.emplace_back(px(s.x[i]), py(s.y[i]));
    if (pts.size() == 1) {
      o << "<circle cx=\"" << pts[0].first << "\" cy=\"" << pts[0].second << "\" r=\"3\" fill=\""
        << color << "\"/>\n";
    } else if (!pts.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [a, b] : pts) o << a << "," << b << " ";
      o << "\"/>\n";
    }
    const double ly = top + 15 + 16.0 * k;
    o << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\">" << escape(s.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::filesystem::path> emit_charts(const std::filesystem::path& csv,
                                               const std::filesystem::path& out_dir) {
  std::vector<double> qs;
  const auto rows = parse_csv(csv, &qs);
  std::filesystem::create_directories(out_dir);

  // Decay: sup norms against time, log-log, skipping t = 0.
  std::vector<ChartSeries> decay;
  for (std::size_t k = 0; k < qs.size(); ++k) {
    ChartSeries s{"q = " + fmt(qs[k]), {}, {}};
    for (const auto& r : rows) {
      s.x.push_back(r.time);
      s.y.push_back(r.weighted_sup[k]);
    }
    decay.push_back(std::move(s));
  }
  ChartSeries margin{"barrier margin", {}, {}};
  for (const auto& r : rows) {
    margin.x.push_back(r.time);
    margin.y.push_back(r.barrier_margin);
  }
  const double m0 = rows.empty() ? 0.0 : rows.front().mass;
  const double e0 = rows.empty() ? 0.0 : rows.front().energy;
  ChartSeries dm{"|mass drift|", {}, {}}, de{"|energy drift|", {}, {}};
  for (const auto& r : rows) {
    dm.x.push_back(r.time);
    dm.y.push_back(std::abs(r.mass - m0));
    de.x.push_back(r.time);
    de.y.push_back(std::abs(r.energy - e0));
  }

  std::vector<std::filesystem::path> out;
  auto write = [&](const char* name, const std::string& svg) {
    const auto p = out_dir / name;
    std::ofstream f(p, std::ios::trunc);
    if (!f) throw Error("cannot write chart " + p.string());
    f << svg;
    out.push_back(p);
  };
  write("decay.svg", svg_chart({"Weighted sup norm", "time t", "sup <v>^q |f|", true, true}, decay));
  write("barrier.svg", svg_chart({"Barrier margin", "time t", "min of U(t) g - |f|", false, false}, {margin}));
  write("drift.svg", svg_chart({"Conservation drift", "time t", "absolute drift", false, true}, {dm, de}));
  return out;
}

}  // namespace bsplit
