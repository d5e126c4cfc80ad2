#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <boost/beast/core/detail/base64.hpp>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"
#include "airstar/world.hpp"

namespace airstar::sim {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  fail(ErrorCode::kSchemaError, "scenario: " + where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) schema(where, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return number(obj, key, where);
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) schema(where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string string_or(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {};
  return string_field(obj, key, where);
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& where) {
  std::vector<std::string> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(key);
  if (!v.is_array()) schema(where, std::string("field '") + key + "' must be an array");
  for (const auto& s : v) {
    if (!s.is_string()) schema(where, std::string("field '") + key + "' must hold strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

Vec3 vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) schema(where, "expected [x, y, z]");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) schema(where, "vector components must be numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

Vec2 vec2(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) schema(where, "expected [x, y]");
  if (!v[0].is_number() || !v[1].is_number()) schema(where, "vector components must be numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

GeoPoint geo_point(const json& v, const std::string& where) {
  return {number(v, "lat", where), number(v, "lon", where), number_or(v, "alt", 0.0, where)};
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text, const std::string& where) {
  namespace b64 = boost::beast::detail::base64;
  if (text.size() % 4 != 0) schema(where, "cells_b64 is not valid base64");
  std::size_t body = text.size();
  while (body > 0 && text.size() - body < 2 && text[body - 1] == '=') --body;
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  auto [written, read] = b64::decode(out.data(), text.data(), body);
  if (read != body) schema(where, "cells_b64 is not valid base64");
  out.resize(written);
  return out;
}

OccupancyGrid parse_grid(const json& g, const std::string& where) {
  const auto kind = grid_kind_from_string(string_field(g, "kind", where));
  if (!kind) schema(where, "unknown grid kind");
  const Vec2 origin = vec2(field(g, "origin", where), where + ".origin");
  const double res = number(g, "resolution", where);
  const json& wj = field(g, "width", where);
  const json& hj = field(g, "height", where);
  if (!wj.is_number_integer() || !hj.is_number_integer()) {
    schema(where, "width and height must be integers");
  }
  const int w = wj.get<int>();
  const int h = hj.get<int>();
  if (!(res > 0.0)) fail(ErrorCode::kConsistencyError, where + ": resolution must be > 0");
  if (w <= 0 || h <= 0) fail(ErrorCode::kConsistencyError, where + ": empty grid");
  OccupancyGrid grid(*kind, origin, res, w, h);

  const bool has_bits = g.contains("cells_b64");
  const bool has_pairs = g.contains("occupied");
  if (has_bits == has_pairs) schema(where, "exactly one of 'cells_b64' or 'occupied' is required");
  if (has_bits) {
    if (!g["cells_b64"].is_string()) schema(where, "cells_b64 must be a string");
    const auto bytes = base64_decode(g["cells_b64"].get<std::string>(), where);
    const std::size_t n = grid.size();
    if (bytes.size() != (n + 7) / 8) {
      fail(ErrorCode::kConsistencyError,
           where + ": bitfield length does not match width*height");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if ((bytes[i / 8] >> (i % 8)) & 1U) grid.set(grid.cell_at(i), true);
    }
  } else {
    const json& pairs = g["occupied"];
    if (!pairs.is_array()) schema(where, "occupied must be an array of [row, col]");
    for (const auto& p : pairs) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
          !p[1].is_number_integer()) {
        schema(where, "occupied entries must be [row, col] integer pairs");
      }
      const Cell c{p[0].get<int>(), p[1].get<int>()};
      if (!grid.in_bounds(c)) {
        fail(ErrorCode::kConsistencyError, where + ": occupied cell out of bounds");
      }
      grid.set(c, true);
    }
  }
  return grid;
}

CameraModel parse_camera(const json& c, const std::string& where) {
  CameraModel cam;
  cam.fx = number(c, "fx", where);
  cam.fy = number(c, "fy", where);
  cam.cx = number(c, "cx", where);
  cam.cy = number(c, "cy", where);
  const json& wj = field(c, "width", where);
  const json& hj = field(c, "height", where);
  if (!wj.is_number_integer() || !hj.is_number_integer()) {
    schema(where, "camera width/height must be integers");
  }
  cam.width = wj.get<int>();
  cam.height = hj.get<int>();
  cam.extrinsic = forward_looking_extrinsic();
  if (c.contains("extrinsic")) {
    const json& e = c["extrinsic"];
    if (e.is_string()) {
      if (e.get<std::string>() == "identity") {
        cam.extrinsic = Extrinsic{};
      } else if (e.get<std::string>() != "forward") {
        schema(where, "extrinsic must be 'forward', 'identity' or an object");
      }
    } else {
      const json& r = field(e, "rotation", where + ".extrinsic");
      if (!r.is_array() || r.size() != 9) schema(where, "extrinsic.rotation must have 9 numbers");
      for (int i = 0; i < 9; ++i) {
        if (!r[i].is_number()) schema(where, "extrinsic.rotation must have 9 numbers");
        cam.extrinsic.rotation(i / 3, i % 3) = r[i].get<double>();
      }
      cam.extrinsic.translation = vec3(field(e, "translation", where), where + ".translation");
    }
  }
  try {
    cam.validate();
  } catch (const Error& err) {
    fail(ErrorCode::kConsistencyError, where + ": " + err.what());
  }
  return cam;
}

json number_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

}  // namespace

Scene parse_scenario(const json& doc) {
  if (!doc.is_object()) schema("root", "expected an object");
  Scene sc;
  sc.name = string_or(doc, "name", "root");
  const json& seed = field(doc, "seed", "root");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) schema("root", "seed must be an integer");
  sc.seed = seed.get<std::uint64_t>();
  sc.reference = geo_point(field(doc, "reference_gps", "root"), "reference_gps");
  if (std::abs(sc.reference.lat) > 90.0 || std::abs(sc.reference.lon) > 180.0) {
    fail(ErrorCode::kConsistencyError, "reference_gps out of range");
  }
  sc.z_cruise = number_or(doc, "z_cruise", 5.0, "root");
  sc.obstacle_height = number_or(doc, "obstacle_height", 30.0, "root");

  const json& grids = field(doc, "grids", "root");
  if (!grids.is_array()) schema("root", "grids must be an array");
  for (std::size_t i = 0; i < grids.size(); ++i) {
    auto g = parse_grid(grids[i], "grids[" + std::to_string(i) + "]");
    if (sc.grid(g.kind())) {
      fail(ErrorCode::kConsistencyError, std::string("duplicate grid kind ") + to_string(g.kind()));
    }
    sc.grids.push_back(std::move(g));
  }

  const json& lms = field(doc, "landmarks", "root");
  if (!lms.is_array()) schema("root", "landmarks must be an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < lms.size(); ++i) {
    const std::string where = "landmarks[" + std::to_string(i) + "]";
    LandmarkNode n;
    n.id = string_field(lms[i], "id", where);
    n.name = string_field(lms[i], "name", where);
    n.gps = geo_point(field(lms[i], "gps", where), where + ".gps");
    n.orientation_tag = string_or(lms[i], "orientation_tag", where);
    n.description = string_or(lms[i], "description", where);
    n.aliases = string_list(lms[i], "aliases", where);
    if (n.name.empty()) fail(ErrorCode::kConsistencyError, where + ": empty name");
    if (!ids.insert(n.id).second) fail(ErrorCode::kConsistencyError, "duplicate landmark id " + n.id);
    Vec3 local;
    try {
      local = geo::gps_to_local(sc.reference, n.gps);
    } catch (const Error&) {
      fail(ErrorCode::kConsistencyError, where + ": landmark far outside the scenario region");
    }
    bool inside = false;
    for (const auto& g : sc.grids) inside = inside || g.in_bounds(g.cell_of(local.x(), local.y()));
    if (!inside) fail(ErrorCode::kConsistencyError, where + ": landmark '" + n.id + "' lies outside every grid");
    sc.landmarks.push_back(std::move(n));
  }

  const json& peds = field(doc, "pedestrians", "root");
  if (!peds.is_array()) schema("root", "pedestrians must be an array");
  int users = 0;
  for (std::size_t i = 0; i < peds.size(); ++i) {
    const std::string where = "pedestrians[" + std::to_string(i) + "]";
    Pedestrian p;
    p.id = string_field(peds[i], "id", where);
    const json& path = field(peds[i], "path", where);
    if (!path.is_array() || path.empty()) schema(where, "path must be a non-empty array");
    for (const auto& wp : path) p.path.push_back(vec2(wp, where + ".path"));
    p.speed = number_or(peds[i], "speed", 0.0, where);
    if (p.speed < 0.0 || p.speed > 2.0) fail(ErrorCode::kConsistencyError, where + ": speed must lie in [0, 2] m/s");
    const json& u = field(peds[i], "is_user", where);
    if (!u.is_boolean()) schema(where, "is_user must be a boolean");
    p.is_user = u.get<bool>();
    users += p.is_user ? 1 : 0;
    sc.pedestrians.push_back(std::move(p));
  }
  if (users != 1) {
    fail(ErrorCode::kConsistencyError,
         "exactly one pedestrian must have is_user = true (found " + std::to_string(users) + ")");
  }

  if (doc.contains("objects")) {
    const json& objs = doc["objects"];
    if (!objs.is_array()) schema("root", "objects must be an array");
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const std::string where = "objects[" + std::to_string(i) + "]";
      SceneObject o;
      o.id = string_field(objs[i], "id", where);
      o.class_tag = string_field(objs[i], "class_tag", where);
      o.landmark_tags = string_list(objs[i], "landmark_tags", where);
      o.center = vec3(field(objs[i], "center", where), where + ".center");
      o.size = vec3(field(objs[i], "size", where), where + ".size");
      if ((o.size.array() <= 0.0).any()) fail(ErrorCode::kConsistencyError, where + ": size must be positive");
      sc.objects.push_back(std::move(o));
    }
  }

  const json& start = field(doc, "uav_start", "root");
  sc.uav_start.position = vec3(field(start, "position", "uav_start"), "uav_start.position");
  sc.uav_start.yaw = number_or(start, "yaw", 0.0, "uav_start");
  sc.uav_start.mode = UavMode::kGrounded;
  if (sc.uav_start.position.z() < 0.0) fail(ErrorCode::kConsistencyError, "uav_start below ground");

  sc.camera = parse_camera(field(doc, "camera", "root"), "camera");

  const json& limits = field(doc, "limits", "root");
  sc.limits.v_max = number(limits, "v_max", "limits");
  const json& a_max = field(limits, "a_max", "limits");
  if (a_max.is_null()) {
    sc.limits.a_max = std::numeric_limits<double>::infinity();
  } else if (a_max.is_number()) {
    sc.limits.a_max = a_max.get<double>();
  } else {
    schema("limits", "a_max must be a number or null");
  }
  if (!(sc.limits.v_max > 0.0) || !(sc.limits.a_max > 0.0)) {
    fail(ErrorCode::kConsistencyError, "limits must be positive");
  }

  if (doc.contains("knowledge")) {
    if (!doc["knowledge"].is_array()) schema("root", "knowledge must be an array");
    sc.knowledge = doc["knowledge"];
  }
  return sc;
}

json scenario_to_json(const Scene& sc) {
  json doc = json::object();
  doc["name"] = sc.name;
  doc["seed"] = sc.seed;
  doc["reference_gps"] = {{"lat", sc.reference.lat}, {"lon", sc.reference.lon}, {"alt", sc.reference.alt}};
  doc["z_cruise"] = sc.z_cruise;
  doc["obstacle_height"] = sc.obstacle_height;
  json grids = json::array();
  for (const auto& g : sc.grids) {
    std::vector<std::uint8_t> bytes((g.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.cells()[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1U << (i % 8));
    }
    grids.push_back({{"kind", to_string(g.kind())},
                     {"origin", {g.origin().x(), g.origin().y()}},
                     {"resolution", g.resolution()},
                     {"width", g.width()},
                     {"height", g.height()},
                     {"cells_b64", base64_encode(bytes)}});
  }
  doc["grids"] = grids;
  json lms = json::array();
  for (const auto& n : sc.landmarks) {
    lms.push_back({{"id", n.id},
                   {"name", n.name},
                   {"gps", {{"lat", n.gps.lat}, {"lon", n.gps.lon}, {"alt", n.gps.alt}}},
                   {"orientation_tag", n.orientation_tag},
                   {"description", n.description},
                   {"aliases", n.aliases}});
  }
  doc["landmarks"] = lms;
  json peds = json::array();
  for (const auto& p : sc.pedestrians) {
    json path = json::array();
    for (const auto& wp : p.path) path.push_back({wp.x(), wp.y()});
    peds.push_back({{"id", p.id}, {"path", path}, {"speed", p.speed}, {"is_user", p.is_user}});
  }
  doc["pedestrians"] = peds;
  json objs = json::array();
  for (const auto& o : sc.objects) {
    objs.push_back({{"id", o.id},
                    {"class_tag", o.class_tag},
                    {"landmark_tags", o.landmark_tags},
                    {"center", {o.center.x(), o.center.y(), o.center.z()}},
                    {"size", {o.size.x(), o.size.y(), o.size.z()}}});
  }
  doc["objects"] = objs;
  const Vec3& s = sc.uav_start.position;
  doc["uav_start"] = {{"position", {s.x(), s.y(), s.z()}}, {"yaw", sc.uav_start.yaw}};
  json rot = json::array();
  for (int i = 0; i < 9; ++i) rot.push_back(sc.camera.extrinsic.rotation(i / 3, i % 3));
  const Vec3& t = sc.camera.extrinsic.translation;
  doc["camera"] = {{"fx", sc.camera.fx},
                   {"fy", sc.camera.fy},
                   {"cx", sc.camera.cx},
                   {"cy", sc.camera.cy},
                   {"width", sc.camera.width},
                   {"height", sc.camera.height},
                   {"extrinsic", {{"rotation", rot}, {"translation", {t.x(), t.y(), t.z()}}}}};
  doc["limits"] = {{"v_max", sc.limits.v_max}, {"a_max", number_json(sc.limits.a_max)}};
  doc["knowledge"] = sc.knowledge;
  return doc;
}

World load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open scenario file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kSchemaError, "scenario " + path + " is not valid JSON: " + e.what());
  }
  return make_world(std::make_shared<const Scene>(parse_scenario(doc)));
}

}  // namespace airstar::sim
