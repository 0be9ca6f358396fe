#include "mapfuse/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace mapfuse {

std::vector<std::string> synth_class_names() {
  return {"road",       "marking", "sidewalk", "building",
          "pole",       "vegetation", "vehicle", "other"};
}

namespace {

/// Planar grid patch: origin plus a lattice along unit axes eu, ev with
/// outward normal eu x ev. Cells never exceed `tess` on a side.
void add_quad_grid(TriangleMesh& mesh, const Vec3& origin, const Vec3& eu,
                   const Vec3& ev, double len_u, double len_v, double tess,
                   uint8_t label) {
  if (len_u <= 0.0 || len_v <= 0.0) return;
  const int nu = std::max(1, int(std::ceil(len_u / tess)));
  const int nv = std::max(1, int(std::ceil(len_v / tess)));
  const double du = len_u / nu, dv = len_v / nv;
  const int base = int(mesh.vertices.size());
  for (int j = 0; j <= nv; ++j)
    for (int i = 0; i <= nu; ++i)
      mesh.vertices.push_back(origin + (i * du) * eu + (j * dv) * ev);
  auto vid = [&](int i, int j) { return base + j * (nu + 1) + i; };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      mesh.faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      mesh.face_labels.push_back(label);
      mesh.face_labels.push_back(label);
    }
}

}  // namespace

TriangleMesh box_mesh(const BoxPrim& box, double tess) {
  TriangleMesh m;
  const Vec3 lo = box.center - box.half, hi = box.center + box.half;
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  const Vec3 sz = 2.0 * box.half;
  // One grid per face, axes picked so eu x ev points outward.
  add_quad_grid(m, {hi.x(), lo.y(), lo.z()}, ey, ez, sz.y(), sz.z(), tess, box.label);
  add_quad_grid(m, {lo.x(), lo.y(), lo.z()}, ez, ey, sz.z(), sz.y(), tess, box.label);
  add_quad_grid(m, {lo.x(), hi.y(), lo.z()}, ez, ex, sz.z(), sz.x(), tess, box.label);
  add_quad_grid(m, {lo.x(), lo.y(), lo.z()}, ex, ez, sz.x(), sz.z(), tess, box.label);
  add_quad_grid(m, {lo.x(), lo.y(), hi.z()}, ex, ey, sz.x(), sz.y(), tess, box.label);
  add_quad_grid(m, {lo.x(), lo.y(), lo.z()}, ey, ex, sz.y(), sz.x(), tess, box.label);
  weld_vertices(m, 1e-7);
  return m;
}

Scene generate_scene(const SceneSpec& spec) {
  Scene scene;
  scene.class_names = synth_class_names();
  Rng rng(mix_seed(spec.seed, 0x5CE2Eu, 0));

  const double L = spec.road_length, W = spec.road_width;
  const double mw = spec.marking_width;
  TriangleMesh& m = scene.mesh;

  // Road plane as three y-strips; the center strip alternates dash/gap cells
  // so markings are coplanar road cells with their own label.
  add_quad_grid(m, {0, -W / 2, 0}, Vec3::UnitX(), Vec3::UnitY(), L,
                W / 2 - mw / 2, spec.tess, kRoad);
  add_quad_grid(m, {0, mw / 2, 0}, Vec3::UnitX(), Vec3::UnitY(), L,
                W / 2 - mw / 2, spec.tess, kRoad);
  double x = 0.0;
  while (x < L) {
    const double dash = std::min(spec.marking_dash, L - x);
    add_quad_grid(m, {x, -mw / 2, 0}, Vec3::UnitX(), Vec3::UnitY(), dash, mw,
                  spec.tess, kMarking);
    scene.marking_area += dash * mw;
    const double gap = std::min(spec.marking_gap, L - x - dash);
    if (gap > 0.0)
      add_quad_grid(m, {x + dash, -mw / 2, 0}, Vec3::UnitX(), Vec3::UnitY(),
                    gap, mw, spec.tess, kRoad);
    x += dash + gap;
  }
  scene.road_area = L * W - scene.marking_area;

  auto add_box = [&](const BoxPrim& b) {
    if (b.half.minCoeff() <= 0.0) return;  // degenerate prim, e.g. width 0
    scene.boxes.push_back(b);
    append_mesh(m, box_mesh(b, spec.tess));
  };

  for (const double side : {-1.0, 1.0}) {
    const double sw_mid = side * (W / 2 + spec.sidewalk_width / 2);
    add_box({{L / 2, sw_mid, spec.sidewalk_height / 2},
             {L / 2, spec.sidewalk_width / 2, spec.sidewalk_height / 2},
             kSidewalk});

    const double front = W / 2 + spec.sidewalk_width + spec.building_setback;
    for (int b = 0; b < spec.buildings_per_side; ++b) {
      const Vec3 span = spec.building_max_size - spec.building_min_size;
      const Vec3 size = spec.building_min_size +
                        Vec3(span.x() * rng.uniform(), span.y() * rng.uniform(),
                             span.z() * rng.uniform());
      const double slot = L / spec.buildings_per_side;
      const double cx = (b + 0.5) * slot +
                        (rng.uniform() - 0.5) *
                            std::max(0.0, slot - size.x() - 2.0);
      add_box({{cx, side * (front + size.y() / 2), size.z() / 2},
               {size.x() / 2, size.y() / 2, size.z() / 2},
               kBuilding});
    }

    if (spec.pole_spacing > 0.0) {
      const double py = side * (W / 2 + 0.4);
      for (double px = spec.pole_spacing / 2; px < L; px += spec.pole_spacing)
        add_box({{px, py, spec.sidewalk_height + spec.pole_height / 2},
                 {spec.pole_side / 2, spec.pole_side / 2, spec.pole_height / 2},
                 kPole});
    }

    for (int b = 0; b < spec.bushes_per_side; ++b) {
      const double bx = (b + 0.5) * L / std::max(1, spec.bushes_per_side) +
                        4.0 * (rng.uniform() - 0.5);
      const double by = side * (W / 2 + spec.sidewalk_width + 0.6);
      add_box({{bx, by, spec.sidewalk_height + 0.6},
               {0.5, 0.5, 0.6},
               kVegetation});
    }
  }

  for (const auto& v : spec.vehicles) {
    scene.vehicle_boxes.push_back(
        {{v.x, v.y, 0.75}, {2.0, 0.9, 0.75}, kVehicle});
    scene.vehicle_sessions.push_back(v.sessions);
  }

  validate_mesh(m, int(scene.class_names.size()));
  return scene;
}

TriangleMesh clip_mesh_to_box(const TriangleMesh& mesh, const Aabb& box) {
  TriangleMesh out;
  std::vector<Vec3> poly, next;
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    poly.assign({mesh.vertices[mesh.faces[f][0]],
                 mesh.vertices[mesh.faces[f][1]],
                 mesh.vertices[mesh.faces[f][2]]});
    // Sutherland-Hodgman against the six box planes.
    for (int plane = 0; plane < 6 && !poly.empty(); ++plane) {
      const int axis = plane / 2;
      const bool upper = plane % 2;
      const double bound = upper ? box.max[axis] : box.min[axis];
      auto inside = [&](const Vec3& p) {
        return upper ? p[axis] <= bound : p[axis] >= bound;
      };
      next.clear();
      for (size_t i = 0; i < poly.size(); ++i) {
        const Vec3& a = poly[i];
        const Vec3& b = poly[(i + 1) % poly.size()];
        const bool ia = inside(a), ib = inside(b);
        if (ia) next.push_back(a);
        if (ia != ib) {
          const double t = (bound - a[axis]) / (b[axis] - a[axis]);
          next.push_back(a + t * (b - a));
        }
      }
      poly.swap(next);
    }
    if (poly.size() < 3) continue;
    const int base = int(out.vertices.size());
    out.vertices.insert(out.vertices.end(), poly.begin(), poly.end());
    for (size_t i = 1; i + 1 < poly.size(); ++i) {
      out.faces.push_back({base, base + int(i), base + int(i + 1)});
      out.face_labels.push_back(mesh.face_labels[f]);
    }
  }
  return out;
}

namespace {

/// Drops degenerate faces and unreferenced vertices (cropping and dropout
/// leave both behind, and stale vertices would distort the submap AABB).
TriangleMesh compact_mesh(const TriangleMesh& mesh) {
  TriangleMesh out;
  std::vector<int> remap(mesh.vertices.size(), -1);
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    if (face_area(mesh, int(f)) <= 1e-12) continue;
    std::array<int, 3> tri;
    for (int k = 0; k < 3; ++k) {
      int& r = remap[mesh.faces[f][k]];
      if (r < 0) {
        r = int(out.vertices.size());
        out.vertices.push_back(mesh.vertices[mesh.faces[f][k]]);
      }
      tri[k] = r;
    }
    out.faces.push_back(tri);
    out.face_labels.push_back(mesh.face_labels[f]);
  }
  return out;
}

RigidTransform random_perturbation(Rng& rng, double sigma_trans,
                                   double sigma_rot_deg) {
  Vec6 xi;
  for (int a = 0; a < 3; ++a) xi[a] = sigma_trans * rng.normal();
  const double sr = sigma_rot_deg * M_PI / 180.0;
  for (int a = 0; a < 3; ++a) xi[3 + a] = sr * rng.normal();
  return se3_exp(xi);
}

}  // namespace

SynthResult generate_sessions(const SceneSpec& scene_spec,
                              const std::vector<SessionSpec>& sessions) {
  const Scene scene = generate_scene(scene_spec);
  SynthResult out;
  out.gt_map = scene.mesh;
  out.set.class_count = int(scene.class_names.size());
  out.set.class_names = scene.class_names;

  int next_id = 0;
  for (size_t si = 0; si < sessions.size(); ++si) {
    const SessionSpec& ss = sessions[si];
    if (ss.label_flip_prob < 0 || ss.label_flip_prob > 1 ||
        ss.face_dropout_prob < 0 || ss.face_dropout_prob > 1)
      throw std::invalid_argument("session probabilities must be in [0, 1]");

    // World mesh this session can see: static scene + its parked vehicles.
    TriangleMesh world = scene.mesh;
    for (size_t v = 0; v < scene.vehicle_boxes.size(); ++v) {
      const auto& in = scene.vehicle_sessions[v];
      if (std::find(in.begin(), in.end(), int(si)) != in.end())
        append_mesh(world, box_mesh(scene.vehicle_boxes[v], scene_spec.tess));
    }

    // Keyframes along the lane, direction +-x; pose frame: x forward, z up.
    const double x0 = ss.start_margin;
    const double x1 = scene_spec.road_length - ss.start_margin;
    std::vector<Vec3> keys;
    for (double s = x0; s <= x1 + 1e-9; s += ss.keyframe_spacing) {
      const double x = ss.reverse ? x1 - (s - x0) : s;
      keys.emplace_back(x, ss.lane_offset, 0.0);
    }
    Mat3 heading = Mat3::Identity();
    if (ss.reverse) {
      heading.col(0) = -Vec3::UnitX();
      heading.col(1) = -Vec3::UnitY();  // keep z up, proper rotation
    }

    Session session;
    session.session_id = int(si);
    session.class_count = out.set.class_count;
    session.class_names = out.set.class_names;

    Rng rng(mix_seed(scene_spec.seed, 0x5E55u, uint64_t(si)));
    const int S = std::max(1, ss.keyframes_per_submap);
    std::vector<RigidTransform> gt_chain;
    for (size_t k0 = 0; k0 < keys.size(); k0 += size_t(S)) {
      const size_t k1 = std::min(keys.size(), k0 + size_t(S));
      Aabb view;
      for (size_t k = k0; k < k1; ++k) view.expand(keys[k]);
      view = view.padded(ss.view_radius);

      RigidTransform gt;
      gt.R = heading;
      gt.t = keys[k0];

      TriangleMesh crop = clip_mesh_to_box(world, view);
      crop = compact_mesh(crop);
      if (crop.faces.empty()) {
        std::cerr << "synth: session " << si << " submap at x=" << keys[k0].x()
                  << " has an empty crop; skipped\n";
        continue;
      }
      // Re-express in the submap frame.
      const RigidTransform inv = gt.inverse();
      crop = transformed_mesh(crop, inv.R, inv.t);

      for (Vec3& v : crop.vertices)
        for (int a = 0; a < 3; ++a) v[a] += ss.jitter_sigma * rng.normal();
      const int K = out.set.class_count;
      if (ss.label_flip_prob > 0.0 && K > 1)
        for (auto& l : crop.face_labels)
          if (rng.uniform() < ss.label_flip_prob) {
            const int shift = 1 + rng.index(K - 1);
            l = uint8_t((int(l) + shift) % K);
          }
      if (ss.face_dropout_prob > 0.0) {
        TriangleMesh kept;
        kept.vertices = crop.vertices;
        for (size_t f = 0; f < crop.faces.size(); ++f)
          if (rng.uniform() >= ss.face_dropout_prob) {
            kept.faces.push_back(crop.faces[f]);
            kept.face_labels.push_back(crop.face_labels[f]);
          }
        crop = compact_mesh(kept);
        if (crop.faces.empty()) {
          std::cerr << "synth: session " << si << " submap at x="
                    << keys[k0].x() << " dropped out entirely; skipped\n";
          continue;
        }
      }

      Submap sm;
      sm.id = next_id++;
      sm.session_id = int(si);
      sm.index_in_session = int(session.submaps.size());
      sm.mesh = std::move(crop);
      sm.aabb_local = mesh_aabb(sm.mesh);
      // Body-frame noise: error magnitude independent of world position.
      sm.gps_pose = gt.compose(
          random_perturbation(rng, ss.gps_sigma_trans, ss.gps_sigma_rot_deg));
      session.submaps.push_back(std::move(sm));
      gt_chain.push_back(gt);
      out.gt_poses[session.submaps.back().id] = gt;
    }

    // Measured odometry between consecutive kept submaps: noisy P_b^-1 P_a.
    for (size_t i = 0; i + 1 < session.submaps.size(); ++i) {
      const RigidTransform rel =
          gt_chain[i + 1].inverse().compose(gt_chain[i]);
      session.submaps[i].odom_to_next = rel.compose(
          random_perturbation(rng, ss.odom_sigma_trans, ss.odom_sigma_rot_deg));
    }
    out.set.sessions.push_back(std::move(session));
  }
  return out;
}

}  // namespace mapfuse
