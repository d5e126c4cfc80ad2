#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"
#include "airstar/skills.hpp"
#include "test_support.hpp"

namespace airstar::skills {
namespace {

using airstar::testing::empty_scene;
using airstar::testing::world_from;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

sim::Pedestrian walker(std::string id, Vec2 at) {
  sim::Pedestrian p;
  p.id = std::move(id);
  p.path = {at};
  return p;
}

sim::SceneObject box(std::string id, std::string cls, Vec3 center, Vec3 size,
                     std::vector<std::string> tags = {}) {
  sim::SceneObject o;
  o.id = std::move(id);
  o.class_tag = std::move(cls);
  o.center = center;
  o.size = size;
  o.landmark_tags = std::move(tags);
  return o;
}

// ---- frame_human ----------------------------------------------------------------

TEST(FrameHuman, AlreadyCenteredNeedsNothing) {
  sim::Scene sc = empty_scene();
  sc.pedestrians.push_back(walker("p1", {15.0, 20.0}));
  World w = world_from(sc);
  w.uav.position = Vec3(10.0, 20.0, 3.0);
  const FramingAdjustment a = frame_human(w, w.uav, w.sc().camera);
  EXPECT_EQ(a.pedestrian_id, "p1");
  EXPECT_NEAR(a.yaw_delta, 0.0, 1e-12);
  EXPECT_EQ(a.position, w.uav.position);
}

TEST(FrameHuman, TurnsNorth) {
  sim::Scene sc = empty_scene();
  sc.pedestrians.push_back(walker("p1", {10.0, 25.0}));
  World w = world_from(sc);
  w.uav.position = Vec3(10.0, 20.0, 3.0);
  const FramingAdjustment a = frame_human(w, w.uav, w.sc().camera);
  EXPECT_NEAR(a.yaw_delta, kPi / 2, 1e-9);
  // Centroid projects onto the principal column at the new heading.
  const CameraPose pose = CameraPose::from(w.sc().camera, a.position, a.target_yaw);
  const auto px = project_camera(w.sc().camera, pose.to_camera(Vec3(10.0, 25.0, 0.9)));
  ASSERT_TRUE(px);
  EXPECT_LT(std::abs(px->u - w.sc().camera.cx), 5.0);
}

TEST(FrameHuman, NearestOfTwoAndRangeClamp) {
  sim::Scene sc = empty_scene();
  sc.pedestrians.push_back(walker("far", {22.0, 20.0}));
  sc.pedestrians.push_back(walker("near", {10.0, 16.0}));
  World w = world_from(sc);
  w.uav.position = Vec3(10.0, 20.0, 3.0);
  const FramingAdjustment a = frame_human(w, w.uav, w.sc().camera);
  EXPECT_EQ(a.pedestrian_id, "near");
  EXPECT_NEAR(a.yaw_delta, -kPi / 2, 1e-9);

  sim::Scene sc2 = empty_scene();
  sc2.pedestrians.push_back(walker("p", {30.0, 20.0}));
  World w2 = world_from(sc2);
  w2.uav.position = Vec3(10.0, 20.0, 3.0);
  const FramingAdjustment b = frame_human(w2, w2.uav, w2.sc().camera);
  EXPECT_NEAR(b.position.x(), 22.0, 1e-9);  // pulled in to 8 m
  EXPECT_NEAR(b.position.y(), 20.0, 1e-9);
}

TEST(FrameHuman, NobodyInRange) {
  World w = world_from(empty_scene());
  w.uav.position = Vec3(10.0, 20.0, 3.0);
  EXPECT_EQ(code_of([&] { frame_human(w, w.uav, w.sc().camera); }), ErrorCode::kNoHumanVisible);
}

// ---- gesture_offset -----------------------------------------------------------

TEST(Gesture, UpStep) {
  const sim::Scene sc = empty_scene();
  UavState uav;
  uav.position = Vec3(10, 10, 5);
  const GestureDelta d = gesture_offset(sc, uav, Direction::kUp, 0.5);
  EXPECT_NEAR(d.world.z(), 0.5, 1e-12);
  EXPECT_NEAR(d.world.head<2>().norm(), 0.0, 1e-12);
}

TEST(Gesture, ForwardClampedByWall) {
  sim::Scene sc = empty_scene();
  for (int r = 0; r < 40; ++r) sc.grids[0].set({r, 12}, true);
  UavState uav;
  uav.position = Vec3(11.2, 20.5, 5.0);
  const GestureDelta d = gesture_offset(sc, uav, Direction::kForward, 1.0);
  EXPECT_NEAR(d.body.x(), 0.3, 1e-9);
  EXPECT_NEAR(d.world.x(), 0.3, 1e-9);
  // Already inside the clearance margin: no motion toward the wall.
  uav.position.x() = 11.7;
  EXPECT_NEAR(gesture_offset(sc, uav, Direction::kForward, 1.0).world.norm(), 0.0, 1e-9);
}

TEST(Gesture, OppositeDirectionsCancel) {
  const sim::Scene sc = empty_scene();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  std::uniform_real_distribution<double> step(0.05, 2.0);
  const std::pair<Direction, Direction> pairs[] = {{Direction::kLeft, Direction::kRight},
                                                   {Direction::kUp, Direction::kDown},
                                                   {Direction::kForward, Direction::kBackward}};
  for (int i = 0; i < 100; ++i) {
    UavState uav;
    uav.position = Vec3(20, 20, 10);
    uav.yaw = yaw(rng);
    const double s = step(rng);
    for (auto [a, b] : pairs) {
      const Vec3 sum = gesture_offset(sc, uav, a, s).world + gesture_offset(sc, uav, b, s).world;
      ASSERT_LE(sum.norm(), 1e-12);
    }
  }
  UavState uav;
  uav.position = Vec3(20, 20, 10);
  uav.yaw = kPi / 2;
  EXPECT_NEAR(gesture_offset(sc, uav, Direction::kLeft, 1.0).world.x(), -1.0, 1e-12);
}

TEST(Gesture, StepBounds) {
  const sim::Scene sc = empty_scene();
  const UavState uav;
  EXPECT_EQ(code_of([&] { gesture_offset(sc, uav, Direction::kUp, 0.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { gesture_offset(sc, uav, Direction::kUp, 2.5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(direction_from_string("backward"), Direction::kBackward);
  EXPECT_FALSE(direction_from_string("sideways"));
}

// ---- track_init ----------------------------------------------------------------

ViewFrame frame_of(std::vector<std::pair<std::string, sim::PixelBox>> boxes) {
  ViewFrame f;
  f.width = 320;
  f.height = 240;
  for (auto& [id, b] : boxes) {
    sim::VisibleObject o;
    o.object_id = id;
    o.class_tag = "person";
    o.bbox = b;
    o.centroid_depth = 5.0;
    f.objects.push_back(o);
  }
  return f;
}

TEST(TrackInit, ClickInsideOneBox) {
  const ViewFrame f = frame_of({{"a", {100, 100, 140, 140}}, {"b", {0, 0, 10, 10}}});
  PixelTarget click;
  click.u = 120;
  click.v = 120;
  click.source = objnav::TargetSource::kUserClick;
  const TrackState st = track_init(f, click);
  EXPECT_EQ(st.target_id, "a");
  EXPECT_EQ(st.lost_frames, 0);
}

TEST(TrackInit, OverlapPrefersSmallerBox) {
  // 30 x 30 = 900 and 20 x 20 = 400, both containing (125, 125).
  const ViewFrame f = frame_of({{"big", {100, 100, 130, 130}}, {"small", {115, 115, 135, 135}}});
  PixelTarget click;
  click.u = 125;
  click.v = 125;
  EXPECT_EQ(track_init(f, click).target_id, "small");
}

TEST(TrackInit, SkyClickAndInstruction) {
  const ViewFrame f = frame_of({{"a", {100, 100, 140, 140}}});
  PixelTarget click;
  click.u = 10;
  click.v = 200;
  EXPECT_EQ(code_of([&] { track_init(f, click); }), ErrorCode::kNoTarget);
  EXPECT_EQ(track_init(f, std::string("follow the person")).target_id, "a");
  EXPECT_EQ(code_of([&] { track_init(f, std::string("follow the dog")); }), ErrorCode::kNoTarget);
}

// ---- track_step -------------------------------------------------------------------

World tracking_world(Vec3 target_center) {
  sim::Scene sc = empty_scene(60, 40);
  sc.objects.push_back(box("target", "person", target_center, Vec3(0.6, 0.6, 0.6)));
  World w = world_from(sc);
  w.uav.position = Vec3(10.0, 20.0, 5.0);
  w.uav.yaw = 0.0;
  w.uav.mode = sim::UavMode::kExecuting;
  return w;
}

TEST(TrackStep, CenteredAtStandoffGivesZeroCommand) {
  // Range is measured to the visible face, here 2 m ahead.
  World w = tracking_world(Vec3(12.3, 20.0, 5.0));
  const ViewFrame f = sim::annotate_view(w, w.uav, w.sc().camera);
  TrackState st = track_init(f, std::string("person"), 2.0);
  const TrackCommand cmd = track_step(st, f, w.uav, w);
  EXPECT_NEAR(cmd.yaw_rate, 0.0, 1e-9);
  EXPECT_NEAR(cmd.velocity.norm(), 0.0, 1e-9);
}

TEST(TrackStep, YawRateFromPixelOffset) {
  const World w = tracking_world(Vec3(12.0, 20.0, 5.0));
  ViewFrame f = frame_of({{"t", {120, 50, 140, 70}}});  // u center = cx + 50
  f.pose_at_capture = w.uav;
  TrackState st;
  st.target_id = "t";
  TrackGains gains;
  gains.k_yaw = 1.0;
  const TrackCommand cmd = track_step(st, f, w.uav, w, gains);
  // Target right of center: clockwise turn, which is negative yaw rate.
  EXPECT_NEAR(cmd.yaw_rate, -0.5 * gains.k_yaw, 1e-12);
  gains.k_yaw = 2.0;
  EXPECT_NEAR(track_step(st, f, w.uav, w, gains).yaw_rate, -1.0, 1e-12);
}

TEST(TrackStep, ConvergesFromSixtyPixels) {
  // 3 m to the right at 5 m range: 100 * 3 / 5 = 60 px off center.
  World w = tracking_world(Vec3(15.0, 17.0, 5.0));
  ViewFrame f = sim::annotate_view(w, w.uav, w.sc().camera);
  ASSERT_EQ(f.objects.size(), 1u);
  EXPECT_NEAR(f.objects[0].bbox.u_center() - w.sc().camera.cx, 60.0, 1.0);
  TrackState st = track_init(f, std::string("person"));
  int ticks = 0;
  for (; ticks < 50; ++ticks) {
    const TrackCommand cmd = track_step(st, f, w.uav, w);
    sim::step(w, sim::Control::velocity(cmd.velocity, cmd.yaw_rate));
    f = sim::annotate_view(w, w.uav, w.sc().camera);
    const auto* o = f.find("target");
    ASSERT_NE(o, nullptr);
    if (std::abs(o->bbox.u_center() - w.sc().camera.cx) < 5.0) break;
  }
  EXPECT_LT(ticks, 50);
}

TEST(TrackStep, WalledTargetRepositionsToClearCandidate) {
  // Target at (20.5, 20.5); wall cells in column 17 between it and the UAV.
  sim::Scene sc = empty_scene(60, 40);
  for (int r = 19; r <= 21; ++r) sc.grids[0].set({r, 17}, true);
  World w = world_from(sc);
  w.uav.position = Vec3(14.5, 20.5, 5.0);
  const Vec3 target(20.5, 20.5, 1.0);
  TrackState st;
  st.target_id = "gone";
  st.standoff = 3.0;
  st.last_position = target;
  ViewFrame empty;
  empty.width = 160;
  empty.height = 120;
  const TrackCommand cmd = track_step(st, empty, w.uav, w);
  EXPECT_EQ(st.lost_frames, 1);
  ASSERT_TRUE(st.reposition_goal);
  // First candidate: bearing (west, pi) plus 45 degrees.
  const double a = kPi + kPi / 4;
  EXPECT_NEAR(st.reposition_goal->x(), 20.5 + 3.0 * std::cos(a), 1e-9);
  EXPECT_NEAR(st.reposition_goal->y(), 20.5 + 3.0 * std::sin(a), 1e-9);
  const Vec3 d = target - *st.reposition_goal;
  EXPECT_FALSE(sim::raycast(w, *st.reposition_goal, d.normalized(), d.norm()));
  EXPECT_GT(cmd.velocity.norm(), 0.0);
}

TEST(TrackStep, LostAfterThreshold) {
  World w = tracking_world(Vec3(12.0, 20.0, 5.0));
  TrackState st;
  st.target_id = "target";
  ViewFrame empty;
  empty.width = 160;
  empty.height = 120;
  for (int i = 0; i < 20; ++i) track_step(st, empty, w.uav, w);
  EXPECT_EQ(code_of([&] { track_step(st, empty, w.uav, w); }), ErrorCode::kTargetLost);
}

// ---- candidate_yaw ------------------------------------------------------------------

sim::LandmarkNode landmark_at(const sim::GeoPoint& ref, Vec3 local) {
  sim::LandmarkNode lm;
  lm.id = "lm";
  lm.name = "Spot";
  lm.gps = geo::local_to_gps(ref, local);
  return lm;
}

TEST(CandidateYaw, CompassDirections) {
  const sim::GeoPoint ref{39.98, 116.34, 0};
  UavState uav;
  uav.position = Vec3(10, 10, 5);
  EXPECT_NEAR(candidate_yaw(landmark_at(ref, {30, 10, 0}), uav, ref), 0.0, 1e-9);
  EXPECT_NEAR(candidate_yaw(landmark_at(ref, {10, 40, 0}), uav, ref), kPi / 2, 1e-9);
  EXPECT_NEAR(candidate_yaw(landmark_at(ref, {7, 7, 0}), uav, ref), -3 * kPi / 4, 1e-9);
  EXPECT_EQ(code_of([&] { candidate_yaw(landmark_at(ref, {10.05, 10, 0}), uav, ref); }),
            ErrorCode::kDegenerateGeometry);
}

TEST(CandidateYaw, RotationEquivariant) {
  const sim::GeoPoint ref{39.98, 116.34, 0};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(-500, 500);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const Vec3 lm(c(rng), c(rng), 0);
    UavState uav;
    uav.position = Vec3(c(rng), c(rng), 5);
    const double th = ang(rng);
    const Mat3 r = yaw_rotation(th);
    UavState rotated = uav;
    rotated.position = r * uav.position;
    const double base = candidate_yaw(landmark_at(ref, lm), uav, ref);
    const double turned = candidate_yaw(landmark_at(ref, r * lm), rotated, ref);
    ASSERT_NEAR(normalize_angle(turned - base - th), 0.0, 1e-6);
  }
}

// ---- scan_views ------------------------------------------------------------------

TEST(ScanViews, CenterViewWins) {
  sim::Scene sc = empty_scene(80, 40);
  sc.objects.push_back(box("lib", "building", {40, 20, 5}, {4, 4, 10}, {"library"}));
  World w = world_from(sc);
  w.uav.position = Vec3(10, 20, 5);
  MockScorer scorer;
  const ScanResult r = scan_views(w, w.uav, w.sc().camera, 0.0, {"library"}, scorer);
  EXPECT_EQ(r.best.k, 0);
  ASSERT_EQ(r.candidates.size(), 7u);
  EXPECT_EQ(r.candidates.front().k, -3);
  EXPECT_NE(std::find(r.best.visible_tags.begin(), r.best.visible_tags.end(), "library"),
            r.best.visible_tags.end());
}

// Scores views by their offset index only, to exercise the tie rule.
class IndexScorer : public ViewScorer {
 public:
  explicit IndexScorer(std::map<int, double> by_k) : by_k_(std::move(by_k)) {}
  double score(const std::vector<std::string>&, const ViewFrame& frame, const CameraModel&) override {
    const int k = static_cast<int>(std::lround(normalize_angle(frame.pose_at_capture.yaw) / kScanStep));
    auto it = by_k_.find(k);
    return it == by_k_.end() ? 0.0 : it->second;
  }

 private:
  std::map<int, double> by_k_;
};

TEST(ScanViews, TieBreakSmallerAbsThenSmallerK) {
  World w = world_from(empty_scene());
  IndexScorer sym({{-1, 2.0}, {1, 2.0}, {3, 1.0}});
  EXPECT_EQ(scan_views(w, w.uav, w.sc().camera, 0.0, {"x"}, sym).best.k, -1);
  IndexScorer far({{-3, 2.0}, {2, 2.0}});
  EXPECT_EQ(scan_views(w, w.uav, w.sc().camera, 0.0, {"x"}, far).best.k, 2);
  IndexScorer top({{-2, 1.0}, {3, 5.0}});
  EXPECT_EQ(scan_views(w, w.uav, w.sc().camera, 0.0, {"x"}, top).best.k, 3);
}

TEST(ScanViews, WallBlocksEveryView) {
  sim::Scene sc = empty_scene(80, 40);
  sc.objects.push_back(box("lib", "building", {40, 20, 5}, {4, 4, 10}, {"library"}));
  for (int r = 0; r < 40; ++r) sc.grids[0].set({r, 20}, true);
  World w = world_from(sc);
  w.uav.position = Vec3(10, 20, 5);
  MockScorer scorer;
  EXPECT_EQ(code_of([&] { scan_views(w, w.uav, w.sc().camera, 0.0, {"library"}, scorer); }),
            ErrorCode::kNoInformativeView);
  EXPECT_EQ(code_of([&] { scan_views(w, w.uav, w.sc().camera, 0.0, {}, scorer); }),
            ErrorCode::kInvalidArgument);
}

TEST(ExtractNouns, DropsStopwordsKeepsOrder) {
  EXPECT_EQ(extract_nouns("What is this building near the Library? library!"),
            (std::vector<std::string>{"building", "library"}));
}

// ---- answer_question --------------------------------------------------------------------

ViewFrame landmark_frame(std::vector<std::pair<std::string, double>> tags_at_u) {
  ViewFrame f;
  f.width = 160;
  f.height = 120;
  int n = 0;
  for (auto& [tag, u] : tags_at_u) {
    sim::VisibleObject o;
    o.object_id = "o" + std::to_string(n++);
    o.class_tag = "building";
    o.landmark_tags = {tag};
    o.bbox = {u - 5, 40, u + 5, 80};
    f.objects.push_back(o);
  }
  return f;
}

TEST(AnswerQuestion, DescribesVisibleLandmark) {
  const World w = airstar::testing::campus_world();
  MockQa qa;
  const std::string a = answer_question(landmark_frame({{"library", 80}}), "what is this building", w.sc(), qa);
  const sim::LandmarkNode* lib = w.sc().landmark("lm_library");
  EXPECT_EQ(a, lib->description + " " + lib->orientation_tag);
}

TEST(AnswerQuestion, NothingVisible) {
  const World w = airstar::testing::campus_world();
  MockQa qa;
  EXPECT_EQ(answer_question(landmark_frame({{"gym", 80}}), "what is this", w.sc(), qa), kNoLandmarkAnswer);
  EXPECT_EQ(code_of([&] { answer_question(landmark_frame({}), " ", w.sc(), qa); }), ErrorCode::kInvalidArgument);
}

TEST(AnswerQuestion, QuestionPicksAmongTwo) {
  const World w = airstar::testing::campus_world();
  MockQa qa;
  // Library is more central, but the question names the teaching building.
  const ViewFrame f = landmark_frame({{"library", 80}, {"teaching building", 140}});
  const std::string a = answer_question(f, "when does the teaching block open", w.sc(), qa);
  EXPECT_EQ(a.rfind(w.sc().landmark("lm_teaching")->description, 0), 0u);
  const std::string b = answer_question(f, "what is this", w.sc(), qa);
  EXPECT_EQ(b.rfind(w.sc().landmark("lm_library")->description, 0), 0u);
}

}  // namespace
}  // namespace airstar::skills
