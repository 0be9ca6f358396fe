#include "mapfuse/archive.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mapfuse {
namespace {

constexpr uint32_t kMagic = 0x4D465A31;  // "MFZ1"
constexpr uint32_t kVersion = 1;

struct Writer {
  std::ofstream out;
  explicit Writer(const std::string& path)
      : out(path, std::ios::binary | std::ios::trunc) {
    if (!out) throw std::runtime_error("cannot write " + path);
  }
  template <class T>
  void pod(const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <class T>
  void vec(const std::vector<T>& v) {
    pod(uint64_t(v.size()));
    if (!v.empty())
      out.write(reinterpret_cast<const char*>(v.data()),
                std::streamsize(v.size() * sizeof(T)));
  }
  void str(const std::string& s) {
    pod(uint32_t(s.size()));
    out.write(s.data(), std::streamsize(s.size()));
  }
};

struct Reader {
  std::ifstream in;
  std::string path;
  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw std::runtime_error("cannot read " + p);
  }
  void fail(const std::string& what) {
    throw std::runtime_error(path + ": " + what);
  }
  template <class T>
  T pod() {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail("truncated archive");
    return v;
  }
  template <class T>
  std::vector<T> vec(uint64_t limit = uint64_t(1) << 33) {
    const uint64_t n = pod<uint64_t>();
    if (n * sizeof(T) > limit) fail("implausible array size");
    std::vector<T> v(n);
    if (n) {
      in.read(reinterpret_cast<char*>(v.data()),
              std::streamsize(n * sizeof(T)));
      if (!in) fail("truncated archive");
    }
    return v;
  }
  std::string str() {
    const uint32_t n = pod<uint32_t>();
    if (n > (1u << 20)) fail("implausible string size");
    std::string s(n, '\0');
    in.read(s.data(), std::streamsize(n));
    if (!in) fail("truncated archive");
    return s;
  }
};

void write_pose(Writer& w, const RigidTransform& t) {
  const Mat4 m = t.matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) w.pod(m(r, c));
}

RigidTransform read_pose(Reader& r) {
  Mat4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = r.pod<double>();
  return RigidTransform::from_matrix(m);
}

}  // namespace

void save_model(const std::string& path, const FusionModel<float>& model,
                uint64_t config_hash,
                const std::vector<std::string>& class_names) {
  Writer w(path);
  w.pod(kMagic);
  w.pod(kVersion);
  w.pod(config_hash);
  w.pod(model.setup.seed);

  w.pod(uint32_t(class_names.size()));
  for (const auto& n : class_names) w.str(n);

  const Tiling& tl = model.tiling;
  w.pod(tl.tile_side);
  w.pod(tl.halo);
  w.pod(uint32_t(tl.tiles.size()));
  for (const auto& t : tl.tiles) {
    w.pod(int32_t(t.tile.ix));
    w.pod(int32_t(t.tile.iy));
    w.pod(t.z_min);
    w.pod(t.z_max);
    std::vector<int32_t> ids(t.submap_ids.begin(), t.submap_ids.end());
    w.vec(ids);
  }
  for (const auto& n : model.norms) {
    for (int a = 0; a < 3; ++a) w.pod(n.origin[a]);
    w.pod(n.span);
  }
  for (const auto& g : model.grids) {
    w.pod(uint8_t(g.variant == GridVariant::kOctree ? 1 : 0));
    w.pod(int32_t(g.feature_dim));
    w.pod(int32_t(g.active_levels));
    w.pod(uint32_t(g.levels.size()));
    for (const auto& lv : g.levels) {
      w.pod(lv.scale);
      w.pod(int32_t(lv.max_cell));
      w.pod(int32_t(lv.dense_corners));
      w.pod(lv.hash_mask);
      w.pod(lv.slot_offset);
      w.pod(lv.slot_count);
      w.pod(lv.voxel_count);
      w.vec(lv.corner_keys);
    }
    w.vec(g.params);
  }

  const FieldHeads<float>& h = model.heads;
  w.pod(int32_t(h.posenc.num_frequencies));
  w.pod(uint8_t(h.posenc.include_raw ? 1 : 0));
  w.pod(int32_t(h.grid_dim));
  w.pod(int32_t(h.class_count));
  w.pod(int32_t(h.geo.hidden_dim()));
  w.vec(h.geo.param_vector());
  w.vec(h.sem.param_vector());

  w.pod(uint32_t(model.poses.size()));
  for (const auto& p : model.poses) {
    write_pose(w, p.anchor);
    for (int a = 0; a < 6; ++a) w.pod(p.xi[a]);
  }
  w.pod(uint32_t(model.submaps.size()));
  for (const Submap* sm : model.submaps) {
    for (int a = 0; a < 3; ++a) w.pod(sm->aabb_local.min[a]);
    for (int a = 0; a < 3; ++a) w.pod(sm->aabb_local.max[a]);
  }
  if (!w.out) throw std::runtime_error("write failed: " + path);
}

ModelArchive load_model(const std::string& path) {
  Reader r(path);
  if (r.pod<uint32_t>() != kMagic) r.fail("not a fused-model archive");
  if (r.pod<uint32_t>() != kVersion) r.fail("unsupported archive version");

  ModelArchive arc;
  arc.config_hash = r.pod<uint64_t>();
  FusionModel<float>& m = arc.model;
  m.setup.seed = r.pod<uint64_t>();

  const uint32_t n_classes = r.pod<uint32_t>();
  for (uint32_t i = 0; i < n_classes; ++i)
    arc.class_names.push_back(r.str());

  const double side = r.pod<double>();
  const double halo = r.pod<double>();
  const uint32_t n_tiles = r.pod<uint32_t>();
  std::vector<TileAssignment> tiles(n_tiles);
  for (auto& t : tiles) {
    t.tile.ix = r.pod<int32_t>();
    t.tile.iy = r.pod<int32_t>();
    t.z_min = r.pod<double>();
    t.z_max = r.pod<double>();
    const auto ids = r.vec<int32_t>();
    t.submap_ids.assign(ids.begin(), ids.end());
  }
  m.tiling = make_tiling(side, halo, std::move(tiles));
  m.setup.tile_side_m = side;
  m.setup.tile_halo_m = halo;

  m.norms.resize(n_tiles);
  for (auto& n : m.norms) {
    for (int a = 0; a < 3; ++a) n.origin[a] = r.pod<double>();
    n.span = r.pod<double>();
  }
  m.grids.resize(n_tiles);
  for (auto& g : m.grids) {
    g.variant = r.pod<uint8_t>() ? GridVariant::kOctree : GridVariant::kHash;
    g.feature_dim = r.pod<int32_t>();
    g.active_levels = r.pod<int32_t>();
    g.levels.resize(r.pod<uint32_t>());
    for (auto& lv : g.levels) {
      lv.scale = r.pod<double>();
      lv.max_cell = r.pod<int32_t>();
      lv.dense_corners = r.pod<int32_t>();
      lv.hash_mask = r.pod<uint32_t>();
      lv.slot_offset = r.pod<int64_t>();
      lv.slot_count = r.pod<int64_t>();
      lv.voxel_count = r.pod<int64_t>();
      lv.corner_keys = r.vec<uint64_t>();
      for (size_t i = 0; i < lv.corner_keys.size(); ++i)
        lv.slot_map.emplace(lv.corner_keys[i], int32_t(i));
    }
    g.params = r.vec<float>();
    if (int64_t(g.params.size()) != g.slot_total() * g.feature_dim)
      r.fail("grid parameter count mismatch");
  }
  m.setup.grid_variant = n_tiles ? m.grids[0].variant : GridVariant::kHash;

  PosEncConfig pe;
  pe.num_frequencies = r.pod<int32_t>();
  pe.include_raw = r.pod<uint8_t>() != 0;
  const int grid_dim = r.pod<int32_t>();
  const int class_count = r.pod<int32_t>();
  const int hidden = r.pod<int32_t>();
  m.setup.posenc = pe;
  m.setup.head_hidden = hidden;
  m.heads.posenc = pe;
  m.heads.grid_dim = grid_dim;
  m.heads.class_count = class_count;
  const int in = grid_dim + pe.dim();
  m.heads.geo = Mlp<float>(in, hidden, 2, Activation::kSoftplus100);
  m.heads.sem = Mlp<float>(in, hidden, class_count, Activation::kRelu);
  auto geo_params = r.vec<float>();
  auto sem_params = r.vec<float>();
  if (geo_params.size() != m.heads.geo.param_count() ||
      sem_params.size() != m.heads.sem.param_count())
    r.fail("head parameter count mismatch");
  m.heads.geo.param_vector() = std::move(geo_params);
  m.heads.sem.param_vector() = std::move(sem_params);

  m.poses.resize(r.pod<uint32_t>());
  for (auto& p : m.poses) {
    p.anchor = read_pose(r);
    for (int a = 0; a < 6; ++a) p.xi[a] = r.pod<double>();
  }
  const uint32_t n_submaps = r.pod<uint32_t>();
  if (n_submaps != m.poses.size()) r.fail("submap/pose count mismatch");
  arc.storage.resize(n_submaps);
  for (uint32_t i = 0; i < n_submaps; ++i) {
    Submap& sm = arc.storage[i];
    sm.id = int(i);
    for (int a = 0; a < 3; ++a) sm.aabb_local.min[a] = r.pod<double>();
    for (int a = 0; a < 3; ++a) sm.aabb_local.max[a] = r.pod<double>();
    sm.gps_pose = m.poses[i].anchor;
  }
  m.submaps.reserve(n_submaps);
  for (const Submap& sm : arc.storage) m.submaps.push_back(&sm);
  return arc;
}

}  // namespace mapfuse
