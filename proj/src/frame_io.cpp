#include "pqg/frame_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace pqg {

namespace {

static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

// byte-level little-endian codecs, independent of host endianness
template <typename T>
void put(std::string& buf, T v) {
  std::uint64_t bits;
  if constexpr (sizeof(T) == 4) {
    std::uint32_t b;
    std::memcpy(&b, &v, 4);
    bits = b;
  } else {
    std::memcpy(&bits, &v, 8);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(char((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw io_error("frame: truncated payload in '" + path + "'");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= std::uint64_t(std::uint8_t(buf[pos + i])) << (8 * i);
    pos += sizeof(T);
    T v;
    if constexpr (sizeof(T) == 4) {
      const std::uint32_t b = std::uint32_t(bits);
      std::memcpy(&v, &b, 4);
    } else {
      std::memcpy(&v, &bits, 8);
    }
    return v;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void write_frame(const Frame& frame, const std::string& path) {
  const Grid<double>& g = frame.grid;
  try {
    validate(g);
  } catch (const std::invalid_argument& e) {
    throw io_error(std::string("frame: ") + e.what());
  }
  for (const Field3<double>& f : frame.fields)
    if (f.grid.nx != g.nx || f.grid.ny != g.ny || f.grid.nz != g.nz)
      throw io_error("frame: field '" + f.name + "' does not match the frame grid");

  std::string buf;
  buf.reserve(64 + frame.fields.size() * (32 + std::size_t(g.cells()) * 8));
  buf += "PQGF";
  put<std::uint32_t>(buf, kFrameVersion);
  put<std::uint32_t>(buf, std::uint32_t(g.nx));
  put<std::uint32_t>(buf, std::uint32_t(g.ny));
  put<std::uint32_t>(buf, std::uint32_t(g.nz));
  put<double>(buf, g.Lx);
  put<double>(buf, g.Ly);
  put<double>(buf, g.H);
  put<double>(buf, frame.time);
  put<std::uint32_t>(buf, std::uint32_t(frame.fields.size()));
  for (const Field3<double>& f : frame.fields) {
    put<std::uint32_t>(buf, std::uint32_t(f.name.size()));
    buf += f.name;
  }
  for (const Field3<double>& f : frame.fields)
    for (long q = 0; q < f.data.size(); ++q) put<double>(buf, f.data[q]);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("frame: cannot write '" + path + "'");
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw io_error("frame: write failed for '" + path + "'");
}

Frame read_frame(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("frame: cannot read '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r{buf, 0, path};

  if (r.get_bytes(4) != "PQGF") throw io_error("frame: bad magic in '" + path + "'");
  const std::uint32_t version = r.get<std::uint32_t>();
  if (version != kFrameVersion)
    throw io_error("frame: unsupported version " + std::to_string(version) + " in '" + path +
                   "' (supported: " + std::to_string(kFrameVersion) + ")");

  Frame frame;
  Grid<double>& g = frame.grid;
  g.nx = int(r.get<std::uint32_t>());
  g.ny = int(r.get<std::uint32_t>());
  g.nz = int(r.get<std::uint32_t>());
  g.Lx = r.get<double>();
  g.Ly = r.get<double>();
  g.H = r.get<double>();
  frame.time = r.get<double>();
  try {
    validate(g);
  } catch (const std::invalid_argument& e) {
    throw io_error("frame: invalid grid in '" + path + "': " + e.what());
  }

  const std::uint32_t nfields = r.get<std::uint32_t>();
  std::vector<std::string> names(nfields);
  for (std::uint32_t i = 0; i < nfields; ++i) {
    const std::uint32_t len = r.get<std::uint32_t>();
    names[i] = r.get_bytes(len);
  }
  for (std::uint32_t i = 0; i < nfields; ++i) {
    Field3<double> f(g, names[i]);
    for (long q = 0; q < f.data.size(); ++q) f.data[q] = r.get<double>();
    frame.fields.push_back(std::move(f));
  }
  if (r.pos != buf.size())
    throw io_error("frame: trailing bytes in '" + path + "'");
  return frame;
}

}  // namespace pqg
