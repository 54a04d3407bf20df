#ifndef PQG_FRAME_IO_HPP
#define PQG_FRAME_IO_HPP

// PQGF binary frame format, version 1 (layout frozen in docs/formats.md).
// A frame is one instant of one run: the grid, the model time, and a list of
// named cell-centered fields stored as little-endian IEEE-754 doubles in
// x-fastest order. Round trips are bit-exact, including NaNs, signed zeros
// and subnormals; files are byte-identical across platforms.
//
//   offset  size  content
//   0       4     magic "PQGF"
//   4       4     u32 version (= 1)
//   8       12    u32 nx, ny, nz
//   20      24    f64 Lx, Ly, H
//   44      8     f64 time
//   52      4     u32 nfields
//   then per field: u32 name length, name bytes (UTF-8, no terminator)
//   then per field: nx*ny*nz f64 payload, fields in header order
//
// All integers little-endian.

#include <string>
#include <vector>

#include "pqg/errors.hpp"
#include "pqg/grid.hpp"

namespace pqg {

inline constexpr std::uint32_t kFrameVersion = 1;

struct Frame {
  Grid<double> grid;
  double time = 0.0;
  std::vector<Field3<double>> fields;
};

// Throws io_error on unwritable paths, grid mismatches between fields, or
// malformed/truncated/foreign input; an unknown version is reported as
// unsupported, not silently read.
void write_frame(const Frame& frame, const std::string& path);
Frame read_frame(const std::string& path);

}  // namespace pqg

#endif  // PQG_FRAME_IO_HPP
