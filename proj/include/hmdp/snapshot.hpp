#pragma once

// Binary grid snapshots.
//
// Layout (all integers and floats little-endian):
//
//   offset  size      field
//   0       8         magic "HMDPGRID"
//   8       4         u32 format version (1)
//   12      4         u32 reserved, 0
//   16      4         u32 m
//   20      4         u32 n
//   24      8         f64 lateral extent X
//   32      8         f64 base floor delta (height of vertical index 0 of the lattice)
//   40      8         f64 ceiling H
//   48      8*m       f64 spacing per axis
//   ..      8*m       u64 node count per axis
//   ..      8         u64 vertical offset of this window in the lattice
//   ..      8         u64 payload length in doubles (= nodes * n)
//   ..      8*len     f64 node values, row-major over (axis 0, ..., axis m-1, component)

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "hmdp/geometry.hpp"

namespace hmdp::snapshot {

inline constexpr std::array<char, 8> kMagic = {'H', 'M', 'D', 'P', 'G', 'R', 'I', 'D'};
inline constexpr std::uint32_t kVersion = 1;

namespace detail {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DomainError("snapshot: truncated file");
  return to_little(v);
}

}  // namespace detail

inline void write(std::ostream& os, const MapField& u) {
  const SlabGrid& g = u.grid();
  os.write(kMagic.data(), kMagic.size());
  detail::put<std::uint32_t>(os, kVersion);
  detail::put<std::uint32_t>(os, 0);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dims().m));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dims().n));
  detail::put<double>(os, g.lateral_extent());
  detail::put<double>(os, g.base_floor());
  detail::put<double>(os, g.ceiling());
  for (double h : g.spacing()) detail::put<double>(os, h);
  for (auto c : g.nodes()) detail::put<std::uint64_t>(os, c);
  detail::put<std::uint64_t>(os, g.vertical_offset());
  detail::put<std::uint64_t>(os, u.data().size());
  for (double v : u.data()) detail::put<double>(os, v);
  if (!os) throw NumericalError("snapshot: write failed");
}

inline MapField read(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw DomainError("snapshot: bad magic");
  const auto version = detail::get<std::uint32_t>(is);
  if (version != kVersion) throw DomainError("snapshot: unsupported version " + std::to_string(version));
  (void)detail::get<std::uint32_t>(is);
  const auto m = detail::get<std::uint32_t>(is);
  const auto n = detail::get<std::uint32_t>(is);
  if (m < 2 || n < 2 || m > 16 || n > 64) throw DomainError("snapshot: implausible dimensions");
  const double X = detail::get<double>(is);
  const double base = detail::get<double>(is);
  const double H = detail::get<double>(is);
  std::vector<double> h(m);
  for (auto& x : h) x = detail::get<double>(is);
  std::vector<std::size_t> nodes(m);
  for (auto& c : nodes) c = static_cast<std::size_t>(detail::get<std::uint64_t>(is));
  const auto offset = static_cast<std::size_t>(detail::get<std::uint64_t>(is));
  const auto len = static_cast<std::size_t>(detail::get<std::uint64_t>(is));
  auto grid = SlabGrid::from_parts(ModelDims(int(m), int(n)), X, base, H, std::move(h),
                                   std::move(nodes), offset);
  if (len != grid.node_count() * n) throw DomainError("snapshot: payload length mismatch");
  MapField u(grid, n);
  for (auto& v : u.data()) v = detail::get<double>(is);
  return u;
}

inline void save(const std::string& path, const MapField& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw NumericalError("snapshot: cannot open " + path);
  write(os, u);
}

inline MapField load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("snapshot: cannot open " + path);
  return read(is);
}

}  // namespace hmdp::snapshot
