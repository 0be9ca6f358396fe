#include "mapfuse/tiling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mapfuse {

Aabb posed_aabb(const Aabb& local, const RigidTransform& pose) {
  Aabb out;
  if (local.empty()) return out;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 c(corner & 1 ? local.max.x() : local.min.x(),
                 corner & 2 ? local.max.y() : local.min.y(),
                 corner & 4 ? local.max.z() : local.min.z());
    out.expand(pose.apply(c));
  }
  return out;
}

int Tiling::tile_of(const TileIndex& idx) const {
  const auto it = index_.find(idx);
  return it == index_.end() ? -1 : it->second;
}

TileIndex Tiling::point_tile(const Vec3& p) const {
  return TileIndex{int(std::floor(p.x() / tile_side)),
                   int(std::floor(p.y() / tile_side))};
}

std::optional<int> Tiling::route_point(const Vec3& p) const {
  const int pos = tile_of(point_tile(p));
  if (pos < 0) return std::nullopt;
  return pos;
}

Aabb Tiling::tile_box(int tile_pos) const {
  const TileAssignment& a = tiles[tile_pos];
  Aabb box;
  box.min = Vec3(a.tile.ix * tile_side, a.tile.iy * tile_side, a.z_min);
  box.max = Vec3((a.tile.ix + 1) * tile_side, (a.tile.iy + 1) * tile_side,
                 a.z_max);
  return box;
}

Tiling assign_tiles(const std::vector<const Submap*>& submaps,
                    double tile_side, double halo) {
  if (tile_side <= 0.0)
    throw std::invalid_argument("tile_side must be positive");
  Tiling tiling;
  tiling.tile_side = tile_side;
  tiling.halo = halo;

  // Tiles exist where the raw submap footprints land; the halo only widens
  // membership so border submaps also supervise already-occupied neighbors.
  std::map<TileIndex, TileAssignment> cells;
  const auto cell_range = [&](const Aabb& box) {
    return std::array<int, 4>{int(std::floor(box.min.x() / tile_side)),
                              int(std::floor(box.max.x() / tile_side)),
                              int(std::floor(box.min.y() / tile_side)),
                              int(std::floor(box.max.y() / tile_side))};
  };
  for (const Submap* sm : submaps) {
    const Aabb box = posed_aabb(sm->aabb_local, sm->gps_pose);
    const auto [ix0, ix1, iy0, iy1] = cell_range(box);
    for (int ix = ix0; ix <= ix1; ++ix)
      for (int iy = iy0; iy <= iy1; ++iy)
        cells[TileIndex{ix, iy}].tile = TileIndex{ix, iy};
  }

  for (const Submap* sm : submaps) {
    const Aabb box = posed_aabb(sm->aabb_local, sm->gps_pose).padded(halo);
    const auto [ix0, ix1, iy0, iy1] = cell_range(box);
    for (int ix = ix0; ix <= ix1; ++ix) {
      for (int iy = iy0; iy <= iy1; ++iy) {
        const auto it = cells.find(TileIndex{ix, iy});
        if (it == cells.end()) continue;
        TileAssignment& cell = it->second;
        if (cell.submap_ids.empty()) {
          cell.z_min = box.min.z();
          cell.z_max = box.max.z();
        } else {
          cell.z_min = std::min(cell.z_min, box.min.z());
          cell.z_max = std::max(cell.z_max, box.max.z());
        }
        cell.submap_ids.push_back(sm->id);
      }
    }
  }

  for (auto& [idx, cell] : cells) {
    std::sort(cell.submap_ids.begin(), cell.submap_ids.end());
    tiling.index_[idx] = int(tiling.tiles.size());
    tiling.tiles.push_back(std::move(cell));
  }
  return tiling;
}

Tiling make_tiling(double tile_side, double halo,
                   std::vector<TileAssignment> tiles) {
  if (tile_side <= 0.0)
    throw std::invalid_argument("tile_side must be positive");
  Tiling tiling;
  tiling.tile_side = tile_side;
  tiling.halo = halo;
  tiling.tiles = std::move(tiles);
  for (size_t i = 0; i < tiling.tiles.size(); ++i)
    tiling.index_[tiling.tiles[i].tile] = int(i);
  return tiling;
}

}  // namespace mapfuse
