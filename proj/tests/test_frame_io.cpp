#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "pqg/frame_io.hpp"
#include "pqg/rng.hpp"

using pqg::Field3;
using pqg::Frame;
using pqg::Grid;
using pqg::io_error;

namespace {

Grid<double> make_grid(int nx = 4, int ny = 3, int nz = 5) {
  Grid<double> g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.Lx = 1e5;
  g.Ly = 2e5;
  g.H = 1e4;
  return g;
}

std::uint64_t bits(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

bool bit_equal(const Field3<double>& a, const Field3<double>& b) {
  if (a.data.size() != b.data.size()) return false;
  for (long n = 0; n < a.data.size(); ++n)
    if (bits(a.data[n]) != bits(b.data[n])) return false;
  return true;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::vector<char>(std::istreambuf_iterator<char>(f),
                           std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::vector<char>& buf) {
  std::ofstream f(path, std::ios::binary);
  f.write(buf.data(), std::streamsize(buf.size()));
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& p) : path(p) {}
  ~TempFile() { std::remove(path.c_str()); }
};

Frame sample_frame() {
  const Grid<double> g = make_grid();
  Frame fr;
  fr.grid = g;
  fr.time = 123.456789;
  Field3<double> a(g, "pv_e", "s^-1"), b(g, "M", "K");
  for (long n = 0; n < a.data.size(); ++n) {
    a.data[n] = 2.0 * pqg::rng::uniform01(0x10u, n) - 1.0;
    b.data[n] = 1e3 * (2.0 * pqg::rng::uniform01(0x20u, n) - 1.0);
  }
  // adversarial payload values: the format must carry them bit for bit
  a.data[0] = std::numeric_limits<double>::quiet_NaN();
  a.data[1] = -0.0;
  a.data[2] = std::numeric_limits<double>::denorm_min();
  a.data[3] = -std::numeric_limits<double>::infinity();
  a.data[4] = std::numeric_limits<double>::max();
  fr.fields = {a, b};
  return fr;
}

}  // namespace

TEST_CASE("frame io: round trip is bit exact including non-finite payloads") {
  const TempFile tmp("test_frame_roundtrip.pqgf");
  const Frame fr = sample_frame();
  pqg::write_frame(fr, tmp.path);
  const Frame back = pqg::read_frame(tmp.path);

  CHECK(back.grid.nx == fr.grid.nx);
  CHECK(back.grid.ny == fr.grid.ny);
  CHECK(back.grid.nz == fr.grid.nz);
  CHECK(back.grid.Lx == fr.grid.Lx);
  CHECK(back.grid.Ly == fr.grid.Ly);
  CHECK(back.grid.H == fr.grid.H);
  CHECK(bits(back.time) == bits(fr.time));
  REQUIRE(back.fields.size() == 2);
  // field order and names preserved
  CHECK(back.fields[0].name == "pv_e");
  CHECK(back.fields[1].name == "M");
  CHECK(bit_equal(back.fields[0], fr.fields[0]));
  CHECK(bit_equal(back.fields[1], fr.fields[1]));
  // the adversarial values specifically
  CHECK(std::isnan(back.fields[0].data[0]));
  CHECK(bits(back.fields[0].data[1]) == bits(-0.0));
  CHECK(back.fields[0].data[2] == std::numeric_limits<double>::denorm_min());
}

TEST_CASE("frame io: header starts with the magic bytes") {
  const TempFile tmp("test_frame_magic.pqgf");
  pqg::write_frame(sample_frame(), tmp.path);
  const std::vector<char> buf = slurp(tmp.path);
  REQUIRE(buf.size() >= 8);
  CHECK(buf[0] == 'P');
  CHECK(buf[1] == 'Q');
  CHECK(buf[2] == 'G');
  CHECK(buf[3] == 'F');
  // version 1, little endian
  CHECK(buf[4] == 1);
  CHECK(buf[5] == 0);
}

TEST_CASE("frame io: corruption is detected") {
  const TempFile tmp("test_frame_corrupt.pqgf");
  pqg::write_frame(sample_frame(), tmp.path);
  const std::vector<char> good = slurp(tmp.path);

  SUBCASE("bad magic") {
    std::vector<char> buf = good;
    buf[0] = 'X';
    spit(tmp.path, buf);
    CHECK_THROWS_WITH_AS(pqg::read_frame(tmp.path), doctest::Contains("magic"), io_error);
  }

  SUBCASE("unsupported version") {
    std::vector<char> buf = good;
    buf[4] = 2;
    spit(tmp.path, buf);
    CHECK_THROWS_WITH_AS(pqg::read_frame(tmp.path), doctest::Contains("version"), io_error);
  }

  SUBCASE("truncated payload") {
    std::vector<char> buf = good;
    buf.resize(buf.size() - 13);
    spit(tmp.path, buf);
    CHECK_THROWS_AS(pqg::read_frame(tmp.path), io_error);
  }

  SUBCASE("trailing bytes") {
    std::vector<char> buf = good;
    buf.push_back('\0');
    spit(tmp.path, buf);
    CHECK_THROWS_AS(pqg::read_frame(tmp.path), io_error);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(pqg::read_frame("no_such_frame.pqgf"), io_error);
  }
}

TEST_CASE("frame io: field on a different grid is rejected at write time") {
  Frame fr = sample_frame();
  const Grid<double> other = make_grid(8, 8, 8);
  fr.fields.push_back(Field3<double>(other, "w", "m s^-1"));
  const TempFile tmp("test_frame_badgrid.pqgf");
  CHECK_THROWS_WITH_AS(pqg::write_frame(fr, tmp.path), doctest::Contains("grid"), io_error);
}

TEST_CASE("frame io: empty field list round-trips") {
  const TempFile tmp("test_frame_empty.pqgf");
  Frame fr;
  fr.grid = make_grid();
  fr.time = 0.0;
  pqg::write_frame(fr, tmp.path);
  const Frame back = pqg::read_frame(tmp.path);
  CHECK(back.fields.empty());
  CHECK(back.grid.nz == fr.grid.nz);
}
