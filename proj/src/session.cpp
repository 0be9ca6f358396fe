#include "mapfuse/session.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mapfuse/ply_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mapfuse {

Mat4 pose_from_row_major(const std::vector<double>& v) {
  if (v.size() != 16)
    throw std::invalid_argument("pose must have 16 entries, got " +
                                std::to_string(v.size()));
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = v[4 * r + c];
  return m;
}

std::vector<double> pose_to_row_major(const Mat4& m) {
  std::vector<double> v(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) v[4 * r + c] = m(r, c);
  return v;
}

size_t SessionSet::submap_count() const {
  size_t n = 0;
  for (const auto& s : sessions) n += s.submaps.size();
  return n;
}

std::vector<const Submap*> SessionSet::all_submaps() const {
  std::vector<const Submap*> out(submap_count(), nullptr);
  for (const auto& s : sessions)
    for (const auto& sm : s.submaps) out[sm.id] = &sm;
  return out;
}

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("failed to parse '" + path + "': " + e.what());
  }
  return j;
}

RigidTransform parse_pose(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 16)
    throw std::runtime_error(where + ": pose must be an array of 16 floats");
  std::vector<double> v = j.get<std::vector<double>>();
  const Mat4 m = pose_from_row_major(v);
  const Mat3 R = m.topLeftCorner<3, 3>();
  if ((R * R.transpose() - Mat3::Identity()).norm() > 1e-6 ||
      R.determinant() < 0.0)
    throw std::runtime_error(where + ": rotation block is not in SO(3)");
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).norm() > 1e-9)
    throw std::runtime_error(where + ": last row must be [0 0 0 1]");
  return RigidTransform::from_matrix(m);
}

}  // namespace

Session load_session(const std::string& manifest_path, int first_id) {
  const json j = load_json_file(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  const std::string name = fs::path(manifest_path).filename().string();

  Session s;
  try {
    s.session_id = j.at("session_id").get<int>();
    s.class_count = j.at("class_count").get<int>();
    s.class_names = j.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(name + ": bad session header: " + e.what());
  }
  if (s.class_count <= 0)
    throw std::runtime_error(name + ": class_count must be positive");
  if (s.class_names.size() != size_t(s.class_count))
    throw std::runtime_error(name + ": class_names has " +
                             std::to_string(s.class_names.size()) +
                             " entries but class_count is " +
                             std::to_string(s.class_count));
  if (!j.contains("submaps") || !j.at("submaps").is_array() ||
      j.at("submaps").empty())
    throw std::runtime_error(name + ": needs a non-empty submaps array");

  const auto& arr = j.at("submaps");
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string where =
        name + ": submaps[" + std::to_string(i) + "]";
    const auto& rec = arr[i];
    Submap sm;
    sm.id = first_id + static_cast<int>(i);
    sm.session_id = s.session_id;
    sm.index_in_session = static_cast<int>(i);
    try {
      sm.mesh_path = (base / rec.at("mesh").get<std::string>()).string();
    } catch (const json::exception& e) {
      throw std::runtime_error(where + ": bad mesh path: " + e.what());
    }
    if (!rec.contains("gps_pose"))
      throw std::runtime_error(where + ": missing gps_pose");
    sm.gps_pose = parse_pose(rec.at("gps_pose"), where + ".gps_pose");

    const bool is_last = i + 1 == arr.size();
    if (!rec.contains("odom_to_next") || rec.at("odom_to_next").is_null()) {
      if (!is_last)
        throw std::runtime_error(where +
                                 ": odom_to_next missing but a successor "
                                 "submap exists in this session");
    } else {
      if (is_last)
        throw std::runtime_error(where +
                                 ": last submap must not have odom_to_next");
      sm.odom_to_next =
          parse_pose(rec.at("odom_to_next"), where + ".odom_to_next");
    }

    try {
      sm.mesh = load_mesh_ply(sm.mesh_path, s.class_count);
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    sm.aabb_local = mesh_aabb(sm.mesh);
    s.submaps.push_back(std::move(sm));
  }
  return s;
}

SessionSet load_sessions(const std::vector<std::string>& manifest_paths) {
  if (manifest_paths.empty())
    throw std::runtime_error("no session manifests given");
  SessionSet set;
  int next_id = 0;
  for (const auto& path : manifest_paths) {
    Session s = load_session(path, next_id);
    next_id += static_cast<int>(s.submaps.size());
    if (set.sessions.empty()) {
      set.class_count = s.class_count;
      set.class_names = s.class_names;
    } else if (s.class_count != set.class_count ||
               s.class_names != set.class_names) {
      throw std::runtime_error("'" + path +
                               "' uses a different class table than '" +
                               manifest_paths.front() + "'");
    }
    set.sessions.push_back(std::move(s));
  }
  return set;
}

void save_session(const std::string& dir, const Session& session) {
  fs::create_directories(dir);
  json j;
  j["session_id"] = session.session_id;
  j["class_count"] = session.class_count;
  j["class_names"] = session.class_names;
  j["submaps"] = json::array();
  for (const auto& sm : session.submaps) {
    const std::string mesh_name =
        "submap_" + std::to_string(sm.index_in_session) + ".ply";
    save_mesh_ply((fs::path(dir) / mesh_name).string(), sm.mesh);
    json rec;
    rec["mesh"] = mesh_name;
    rec["gps_pose"] = pose_to_row_major(sm.gps_pose.matrix());
    if (sm.odom_to_next)
      rec["odom_to_next"] = pose_to_row_major(sm.odom_to_next->matrix());
    else
      rec["odom_to_next"] = nullptr;
    j["submaps"].push_back(rec);
  }
  std::ofstream out(fs::path(dir) / "session.json");
  if (!out) throw std::runtime_error("cannot write session.json in " + dir);
  out << j.dump(2) << "\n";
}

void save_poses(const std::string& path,
                const std::map<int, RigidTransform>& poses) {
  json j = json::object();
  for (const auto& [id, pose] : poses)
    j[std::to_string(id)] = pose_to_row_major(pose.matrix());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

std::map<int, RigidTransform> load_poses(const std::string& path) {
  const json j = load_json_file(path);
  if (!j.is_object())
    throw std::runtime_error("'" + path + "' must be a JSON object");
  std::map<int, RigidTransform> poses;
  for (const auto& [key, val] : j.items()) {
    int id = 0;
    try {
      id = std::stoi(key);
    } catch (...) {
      throw std::runtime_error("'" + path + "': key '" + key +
                               "' is not a submap id");
    }
    poses[id] = parse_pose(val, path + ": pose " + key);
  }
  return poses;
}

}  // namespace mapfuse
