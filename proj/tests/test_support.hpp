#pragma once

#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "airstar/world.hpp"

namespace airstar::testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(AIRSTAR_TEST_DIR) + "/fixtures/" + name;
}

inline std::string data_path(const std::string& rel) {
  return std::string(AIRSTAR_DATA_DIR) + "/" + rel;
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

// Empty world with one uav grid (all free), one user pedestrian far away and
// a level forward camera.
inline sim::Scene empty_scene(int width = 40, int height = 40, double res = 1.0) {
  sim::Scene sc;
  sc.name = "empty";
  sc.grids.emplace_back(sim::GridKind::kUavExploration, Vec2(0, 0), res, width, height);
  sc.grids.emplace_back(sim::GridKind::kPedestrianGuidance, Vec2(0, 0), res, width, height);
  sim::Pedestrian user;
  user.id = "user";
  user.path = {Vec2(-500.0, -500.0)};
  user.is_user = true;
  sc.pedestrians.push_back(user);
  sc.camera.fx = 100;
  sc.camera.fy = 100;
  sc.camera.cx = 80;
  sc.camera.cy = 60;
  sc.camera.width = 160;
  sc.camera.height = 120;
  sc.camera.extrinsic = forward_looking_extrinsic();
  return sc;
}

inline sim::World world_from(sim::Scene sc) {
  return sim::make_world(std::make_shared<const sim::Scene>(std::move(sc)));
}

inline sim::World campus_world() {
  return sim::load_scenario(data_path("scenarios/campus.json"));
}

}  // namespace airstar::testing
