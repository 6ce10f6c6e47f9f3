#include "polymap/foothold.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace polymap {

void FootholdParams::validate() const {
  if (!(g_res > 0.0 && g_range > 0.0 && g_z > 0.0 && h_layer > 0.0 && delta_foot > 0.0)) {
    throw ConfigError("foothold: g_res, g_range, g_z, h_layer and delta_foot must be positive");
  }
  if (!(g_res < g_range)) throw ConfigError("foothold: g_res must be smaller than g_range");
  if (n_erosion < 1) throw ConfigError("foothold: n_erosion must be >= 1");
  if (supersample < 1) throw ConfigError("foothold: supersample must be >= 1");
}

double FootState::z_foot() const { return std::min({lltoe, rrtoe, llheel, rrheel}); }

CellIndex GridCloud::index_of(double x, double y) const {
  return {static_cast<int>(std::lround(x / g_res)), static_cast<int>(std::lround(y / g_res))};
}

GridCloud filter_cloud(const PointCloud& cloud, const Pose& base_pose, const FootState& foot,
                       const FootholdParams& p) {
  p.validate();
  require_frame(cloud.frame, Frame::World, "filter_cloud input");
  GridCloud grid;
  grid.g_res = p.g_res;
  grid.frame = Frame::Base;
  const Pose to_base = invert(base_pose);
  for (const Vec3& w : cloud.points) {
    const Vec3 b = to_base.apply(w);
    if (std::abs(b.x()) > p.g_range || std::abs(b.y()) > p.g_range) continue;
    auto [it, fresh] = grid.cells.emplace(grid.index_of(b.x(), b.y()), GridCell{b, 0});
    if (!fresh && b.z() > it->second.point.z()) it->second.point = b;
  }
  const double limit = foot.z_foot() + p.g_z;
  for (auto it = grid.cells.begin(); it != grid.cells.end();) {
    if (it->second.point.z() > limit) {
      it = grid.cells.erase(it);
    } else {
      it->second.layer = layer_index(it->second.point.z(), p.h_layer);
      ++it;
    }
  }
  return grid;
}

int layer_index(double z, double h_layer) { return static_cast<int>(std::floor(z / h_layer)); }

std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& bitmap, int width, int height, int passes) {
  if (bitmap.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("erode: bitmap size does not match dimensions");
  }
  std::vector<std::uint8_t> cur = bitmap, tmp(bitmap.size());
  // The 3x3 box minimum is separable: horizontal then vertical.
  for (int pass = 0; pass < passes; ++pass) {
    for (int r = 0; r < height; ++r) {
      const std::uint8_t* row = &cur[static_cast<std::size_t>(r) * width];
      std::uint8_t* out = &tmp[static_cast<std::size_t>(r) * width];
      for (int c = 0; c < width; ++c) {
        out[c] = c > 0 && c + 1 < width && row[c - 1] && row[c] && row[c + 1];
      }
    }
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * width + c;
        cur[i] = r > 0 && r + 1 < height && tmp[i - width] && tmp[i] && tmp[i + width];
      }
    }
  }
  return cur;
}

namespace {

// Erodes the given cells as one bitmap and returns the indices that survive.
std::vector<CellIndex> erode_cells(const std::vector<CellIndex>& cells, int passes) {
  if (cells.empty() || passes <= 0) return cells;
  int imin = INT_MAX, imax = INT_MIN, jmin = INT_MAX, jmax = INT_MIN;
  for (const auto& [i, j] : cells) {
    imin = std::min(imin, i);
    imax = std::max(imax, i);
    jmin = std::min(jmin, j);
    jmax = std::max(jmax, j);
  }
  // One empty border row and column on each side.
  const int w = imax - imin + 3, h = jmax - jmin + 3;
  std::vector<std::uint8_t> bm(static_cast<std::size_t>(w) * h, 0);
  auto at = [&](int i, int j) { return static_cast<std::size_t>(j - jmin + 1) * w + (i - imin + 1); };
  for (const auto& [i, j] : cells) bm[at(i, j)] = 1;
  const auto eroded = erode(bm, w, h, passes);
  std::vector<CellIndex> out;
  for (const auto& c : cells) {
    if (eroded[at(c.first, c.second)]) out.push_back(c);
  }
  return out;
}

}  // namespace

GridCloud layer_and_erode(const GridCloud& grid, const FootState& foot, const FootholdParams& p) {
  p.validate();
  std::map<int, std::vector<CellIndex>> layers;
  for (const auto& [ij, cell] : grid.cells) layers[layer_index(cell.point.z(), p.h_layer)].push_back(ij);

  GridCloud out;
  out.frame = grid.frame;
  out.g_res = grid.g_res;
  std::vector<CellIndex> band;
  const double zf = foot.z_foot();
  for (const auto& [k, cells] : layers) {
    for (const CellIndex& c : erode_cells(cells, p.n_erosion)) {
      GridCell cell = grid.cells.at(c);
      cell.layer = k;
      out.cells.emplace(c, cell);
      if (std::abs(cell.point.z() - zf) <= p.delta_foot) band.push_back(c);
    }
  }
  // The band near the sole gets one more pass over its own survivors.
  std::vector<CellIndex> keep = erode_cells(band, 1);
  std::sort(keep.begin(), keep.end());
  for (const CellIndex& c : band) {
    if (!std::binary_search(keep.begin(), keep.end(), c)) out.cells.erase(c);
  }
  return out;
}

void write_grid_csv(const std::filesystem::path& path, const GridCloud& support, const GridCloud& eroded) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << "i,j,x,y,z,k,eroded_flag\n" << std::setprecision(9);
  for (const auto& [ij, cell] : support.cells) {
    f << ij.first << ',' << ij.second << ',' << cell.point.x() << ',' << cell.point.y() << ',' << cell.point.z()
      << ',' << cell.layer << ',' << (eroded.contains(ij) ? 1 : 0) << '\n';
  }
}

}  // namespace polymap
