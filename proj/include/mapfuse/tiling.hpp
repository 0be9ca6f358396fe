#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mapfuse/session.hpp"
#include "mapfuse/types.hpp"

namespace mapfuse {

/// Grid coordinates of a square tile in the world x-y plane.
/// Tile (ix, iy) owns [ix*T, (ix+1)*T) x [iy*T, (iy+1)*T).
struct TileIndex {
  int ix = 0;
  int iy = 0;
  auto operator<=>(const TileIndex&) const = default;
};

struct TileAssignment {
  TileIndex tile;
  std::vector<int> submap_ids;  // global ids, ascending
  double z_min = 0.0;           // member AABBs plus halo
  double z_max = 0.0;
};

/// Frozen submap->tile routing computed once from GPS poses. Pose updates
/// during optimization do not re-tile (GPS error is well below the halo).
struct Tiling {
  double tile_side = 128.0;
  double halo = 8.0;
  std::vector<TileAssignment> tiles;  // sorted by (ix, iy)

  int tile_of(const TileIndex& idx) const;  // position in tiles, or -1
  /// Floor-division routing (half-open cells); nullopt when unoccupied.
  std::optional<int> route_point(const Vec3& p) const;
  TileIndex point_tile(const Vec3& p) const;
  /// World-frame x-y footprint of a tile (z spans its z extent).
  Aabb tile_box(int tile_pos) const;

 private:
  std::map<TileIndex, int> index_;
  friend Tiling assign_tiles(const std::vector<const Submap*>&, double,
                             double);
  friend Tiling make_tiling(double, double, std::vector<TileAssignment>);
};

/// Reassembles a tiling from stored assignments (deserialization).
Tiling make_tiling(double tile_side, double halo,
                   std::vector<TileAssignment> tiles);

Aabb posed_aabb(const Aabb& local, const RigidTransform& pose);

/// Assigns every submap to each tile its halo-padded, GPS-posed AABB
/// touches. Every submap lands in at least one tile.
Tiling assign_tiles(const std::vector<const Submap*>& submaps,
                    double tile_side, double halo);

}  // namespace mapfuse
