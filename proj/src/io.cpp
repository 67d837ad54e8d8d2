#include "visco/io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace visco {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;

  void need(std::size_t n) {
    if (s.size() - pos < n) throw IoError("VWF1: truncated at byte " + std::to_string(pos));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
};

}  // namespace

std::size_t VwfFile::nodes() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= shape[a];
  return n;
}

VwfFile make_vwf(const Grid& g, double t, std::vector<Field> fields) {
  VwfFile f;
  f.dim = g.dim;
  for (int a = 0; a < 3; ++a) f.shape[a] = static_cast<std::uint32_t>(g.nodes(a));
  f.spacing = g.h;
  f.time = t;
  for (const auto& x : fields)
    if (x.size() != g.size()) throw std::invalid_argument("make_vwf: field size does not match the grid");
  f.fields = std::move(fields);
  return f;
}

std::string encode_vwf(const VwfFile& f) {
  if (f.dim < 1 || f.dim > 3) throw std::invalid_argument("encode_vwf: dim must be 1, 2 or 3");
  const std::size_t n = f.nodes();
  for (const auto& x : f.fields)
    if (x.size() != n) throw std::invalid_argument("encode_vwf: field size does not match the shape");
  std::string out = "VWF1";
  out.reserve(32 + 8 * n * f.fields.size());
  put_u32(out, VwfFile::version);
  put_u32(out, static_cast<std::uint32_t>(f.dim));
  for (int a = 0; a < f.dim; ++a) put_u32(out, f.shape[a]);
  put_f64(out, f.spacing);
  put_f64(out, f.time);
  put_u32(out, static_cast<std::uint32_t>(f.fields.size()));
  for (const auto& x : f.fields)
    for (double d : x) put_f64(out, d);
  return out;
}

VwfFile decode_vwf(const std::string& bytes) {
  if (bytes.compare(0, 4, "VWF1") != 0) throw IoError("VWF1: bad magic");
  Reader r{bytes, 4};
  VwfFile f;
  if (r.u32() != VwfFile::version) throw IoError("VWF1: unsupported version");
  const std::uint32_t dim = r.u32();
  if (dim < 1 || dim > 3) throw IoError("VWF1: bad dimension " + std::to_string(dim));
  f.dim = static_cast<int>(dim);
  for (int a = 0; a < f.dim; ++a) f.shape[a] = r.u32();
  f.spacing = r.f64();
  f.time = r.f64();
  const std::uint32_t count = r.u32();
  const std::size_t n = f.nodes();
  if (n != 0 && (bytes.size() - r.pos) / 8 / n < count) throw IoError("VWF1: truncated payload");
  f.fields.assign(count, Field(n));
  for (auto& x : f.fields)
    for (auto& d : x) d = r.f64();
  if (r.pos != bytes.size()) throw IoError("VWF1: trailing bytes");
  return f;
}

std::string energy_csv(const std::vector<EnergySample>& trace) {
  std::ostringstream os;
  os << "t,E_total,E_cone,dissipation\n" << std::setprecision(17);
  for (const auto& s : trace) {
    os << s.t << ',' << s.total << ',';
    if (std::isnan(s.cone))
      os << "nan";
    else
      os << s.cone;
    os << ',' << s.dissipation << '\n';
  }
  return os.str();
}

std::string pgm_slice(const Grid& g, const Field& f) {
  if (f.size() != g.size()) throw std::invalid_argument("pgm_slice: field size does not match the grid");
  const int nx = g.nodes(0), ny = g.nodes(1);
  const int k = g.dim == 3 ? g.nodes(2) / 2 : 0;
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const double v = f[g.index(i, j, k)];
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double span = hi > lo ? hi - lo : 1.0;
  // Rows run top to bottom with y decreasing, columns along x.
  std::string out = "P5\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
  for (int j = ny - 1; j >= 0; --j)
    for (int i = 0; i < nx; ++i) {
      const double v = f[g.index(i, j, k)];
      const int p = std::isnan(v) ? 0 : static_cast<int>(std::lround(255.0 * (v - lo) / span));
      out.push_back(static_cast<char>(std::clamp(p, 0, 255)));
    }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    if (!os) {
      fs::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

std::string Manifest::to_text() const {
  std::string out;
  for (const auto& e : entries) out += e.sha256 + "  " + std::to_string(e.size) + "  " + e.name + "\n";
  return out;
}

Manifest write_outputs(const std::vector<Artifact>& artifacts, const std::filesystem::path& dir) {
  std::set<std::string> names;
  for (const auto& a : artifacts) {
    const std::filesystem::path p(a.name);
    bool unsafe = a.name.empty() || p.is_absolute() || a.name == manifest_name;
    for (const auto& part : p) unsafe = unsafe || part == "..";
    if (unsafe) throw std::invalid_argument("write_outputs: unsafe artifact name '" + a.name + "'");
    if (!names.insert(a.name).second) throw std::invalid_argument("write_outputs: duplicate artifact '" + a.name + "'");
  }
  Manifest m;
  for (const auto& a : artifacts) {
    write_atomic(dir / a.name, a.bytes);
    m.entries.push_back({a.name, sha256_hex(a.bytes), a.bytes.size()});
  }
  std::sort(m.entries.begin(), m.entries.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
  write_atomic(dir / manifest_name, m.to_text());
  return m;
}

}  // namespace visco
