#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "gplace/placement_pose.hpp"
#include "gplace/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace gplace;

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

double azimuth_error_deg(const ImputationRecord& rec, const Vec3& target) {
  const Vec3 ray = rec.fingertip_world - rec.shoulder_world;
  const Vec3 to_target = target - rec.shoulder_world;
  double d = std::atan2(ray.y(), ray.x()) - std::atan2(to_target.y(), to_target.x());
  while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
  while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
  return d * kDeg;
}

double azimuth_error_deg(const PoseResult& pose, const Vec3& target) {
  ImputationRecord rec;
  rec.fingertip_world = pose.fingertip_world;
  rec.shoulder_world = pose.shoulder_world;
  return azimuth_error_deg(rec, target);
}

PlacementConfig fast_config(std::uint64_t seed) {
  PlacementConfig cfg;
  cfg.voxel_size = 0.05;  // coarser grid keeps unit tests quick
  cfg.margin_voxels = 5;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("pose_avatar aligns the arm with the target") {
  const AvatarModel avatar = test::make_test_avatar("a", Hand::Right, 0.0, 0.08);
  Rng rng(1);

  SUBCASE("aligned case needs no yaw") {
    // Target due +x of the shoulder with the arm pre-posed along +x.
    const Vec3 foot(2.0, 3.0, 0.1);
    const Vec3 target = foot + avatar.gesturing_shoulder() + Vec3(2.0, 0, 0);
    const PoseResult pose = pose_avatar(avatar, foot, target, 0.0, rng);
    CHECK(pose.yaw_deg == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::abs(azimuth_error_deg(pose, target)) < 1e-9);
    CHECK(pose.foot_world == foot);
  }
  SUBCASE("coplanar target has zero elevation") {
    const Vec3 foot(0, 0, 0);
    const Vec3 target(1.5, -2.0, avatar.gesturing_shoulder().z());
    const PoseResult pose = pose_avatar(avatar, foot, target, 0.0, rng);
    CHECK(pose.elevation_deg == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("unit rise over unit run is 45 degrees") {
    // Shoulder on the foot axis, so its position is yaw-independent.
    AvatarModel axis;
    axis.avatar_id = "axis";
    axis.gesturing_hand = Hand::Right;
    axis.cloud.points = {Vec3f(0, 0, 0), Vec3f(0, 0, 1.4f), Vec3f(0.6f, 0, 1.4f)};
    axis.cloud.colors.assign(3, Color3::Zero());
    axis.cloud.instance_labels.assign(3, -1);
    axis.cloud.semantic_labels.assign(3, -1);
    axis.foot = Vec3(0, 0, 0);
    axis.left_shoulder = axis.right_shoulder = Vec3(0, 0, 1.4);
    axis.left_fingertip = axis.right_fingertip = Vec3(0.6, 0, 1.4);

    const PoseResult pose = pose_avatar(axis, Vec3(0, 0, 0), Vec3(1.0, 0.0, 2.4), 0.0, rng);
    CHECK(pose.elevation_deg == doctest::Approx(45.0).epsilon(1e-9));
  }
  SUBCASE("arbitrary targets are hit exactly with jitter off") {
    Rng draws(33);
    for (int t = 0; t < 200; ++t) {
      const Vec3 foot(draws.uniform(-3, 3), draws.uniform(-3, 3), 0.0);
      const Vec3 target(draws.uniform(-4, 4), draws.uniform(-4, 4), draws.uniform(0.2, 2.0));
      if ((target - foot).head<2>().norm() < 0.5) continue;
      const PoseResult pose = pose_avatar(avatar, foot, target, 0.0, draws);
      CHECK(std::abs(azimuth_error_deg(pose, target)) < 1e-9);
      // Upright: rotation keeps +z fixed.
      CHECK((pose.transform.linear() * Vec3::UnitZ() - Vec3::UnitZ()).norm() < 1e-12);
      CHECK(pose.distance_m ==
            doctest::Approx((target - pose.shoulder_world).norm()).epsilon(1e-12));
    }
  }
  SUBCASE("jitter lands exactly at the drawn offset") {
    Rng draws(99);
    for (int t = 0; t < 300; ++t) {
      const Vec3 foot(0, 0, 0);
      const Vec3 target(draws.uniform(1.0, 4.0), draws.uniform(-3, 3), 1.0);
      const PoseResult pose = pose_avatar(avatar, foot, target, 9.0, draws);
      CHECK(std::abs(pose.jitter_deg) <= 9.0);
      CHECK(azimuth_error_deg(pose, target) == doctest::Approx(pose.jitter_deg).epsilon(1e-6));
    }
  }
  SUBCASE("a target above the pivot is degenerate") {
    Rng draws(5);
    CHECK_THROWS_AS(pose_avatar(avatar, Vec3(0, 0, 0), Vec3(0, 0, 3.0), 0.0, draws),
                    DegeneratePointing);
  }
}

TEST_CASE("select_avatar_variant picks the nearest arm elevation") {
  std::vector<AvatarModel> library;
  library.push_back(test::make_test_avatar("a0", Hand::Right, 0.0, 0.15));
  library.push_back(test::make_test_avatar("a30", Hand::Right, 30.0, 0.15));
  library.push_back(test::make_test_avatar("a60", Hand::Right, 60.0, 0.15));

  Rng rng(4);
  CHECK(select_avatar_variant(library, 40.0, rng).avatar_id == "a30");
  CHECK(select_avatar_variant(library, -10.0, rng).avatar_id == "a0");

  SUBCASE("exact ties resolve reproducibly under the seed") {
    std::vector<AvatarModel> twins;
    twins.push_back(test::make_test_avatar("t1", Hand::Right, 30.0, 0.15));
    twins.push_back(test::make_test_avatar("t2", Hand::Right, 30.0, 0.15));
    Rng r1(123), r2(123);
    const std::string pick1 = select_avatar_variant(twins, 30.0, r1).avatar_id;
    const std::string pick2 = select_avatar_variant(twins, 30.0, r2).avatar_id;
    CHECK(pick1 == pick2);
  }
  SUBCASE("singleton library always wins") {
    std::vector<AvatarModel> one;
    one.push_back(test::make_test_avatar("solo", Hand::Left, -80.0, 0.15));
    CHECK(select_avatar_variant(one, 85.0, rng).avatar_id == "solo");
  }
  SUBCASE("empty library is an error") {
    CHECK_THROWS_AS(select_avatar_variant({}, 0.0, rng), EmptyLibrary);
  }
}

TEST_CASE("feasible_points intersects all three conditions") {
  test::RoomSpec spec;
  spec.seed = 21;
  spec.spacing = 0.04;  // matches the coarse voxel size below
  const SceneData scene = build_room(spec);
  const PlacementConfig cfg = fast_config(21);
  const AvatarModel avatar = test::make_test_avatar("a", Hand::Right, -20.0, 0.04);
  const AvatarVolume volume = voxelize_avatar(avatar, cfg.voxel_size, cfg.margin_voxels);

  const SceneGrids grids = build_scene_grids(scene, 2, cfg, volume.height_voxels);
  const int floor_k = grids.floor.clamped_floor_voxel;
  const FootprintSet footprints = find_noncollide(grids.scene, volume, floor_k);
  const ScoreGrid scores = visibility_grid(grids.scene_no_target, grids.target_center_voxel);
  const auto feasible = feasible_points(grids.boundary, footprints, scores, volume, floor_k,
                                        cfg.visibility_threshold);
  REQUIRE(!feasible.empty());

  // Re-check every emitted point against the three predicates directly.
  for (const auto& cell : feasible) {
    CHECK(footprints.contains(cell.x(), cell.y()));
    const int fi = cell.x() + volume.foot_offset.x();
    const int fj = cell.y() + volume.foot_offset.y();
    CHECK(grids.boundary.at(fi, fj));
    const Index3 probe(cell.x() + volume.gesturing_shoulder_offset().x(),
                       cell.y() + volume.gesturing_shoulder_offset().y(),
                       floor_k + volume.gesturing_shoulder_offset().z());
    CHECK(scores.at(probe) > cfg.visibility_threshold);
    CHECK(test::overlap_count(grids.scene, volume.mask, cell.x(), cell.y(), floor_k) == 0);
  }

  SUBCASE("empty footprints produce an empty result") {
    const auto none = feasible_points(grids.boundary, FootprintSet{}, scores, volume, floor_k,
                                      cfg.visibility_threshold);
    CHECK(none.empty());
  }
  SUBCASE("an impossible threshold produces an empty result") {
    const auto none =
        feasible_points(grids.boundary, footprints, scores, volume, floor_k, 1.5);
    CHECK(none.empty());
  }
}

TEST_CASE("impute produces validated, deterministic placements") {
  test::RoomSpec spec;
  spec.seed = 5;
  spec.spacing = 0.04;
  const SceneData scene = build_room(spec);
  const std::vector<AvatarModel> library = {
      test::make_test_avatar("ava_a", Hand::Right, 0.0, 0.04),
      test::make_test_avatar("ava_b", Hand::Right, -20.0, 0.04),
      test::make_test_avatar("ava_c", Hand::Left, -40.0, 0.04),
  };
  PlacementConfig cfg = fast_config(1001);

  Rng rng = Rng(cfg.seed).stream("job");
  const std::vector<Placement> placements = impute(scene, 2, library, cfg, rng);
  REQUIRE(placements.size() == static_cast<std::size_t>(cfg.num_placements));

  const SceneGrids grids = build_scene_grids(scene, 2, cfg, 80);
  const Vec3 target_center = box_center(grids.target_box);
  std::set<std::pair<long, long>> foot_cells;
  for (const auto& p : placements) {
    const ImputationRecord& rec = p.record;
    CHECK(std::abs(rec.jitter_deg) <= cfg.jitter_deg);
    // Elevation and distance re-derived from the stored endpoints.
    const Vec3 to_target = target_center - rec.shoulder_world;
    const double elev = std::atan2(to_target.z(), to_target.head<2>().norm()) * kDeg;
    CHECK(std::abs(elev - rec.pointing_elevation_deg) <= 1e-6);
    CHECK(std::abs(to_target.norm() - rec.distance_to_target_m) <= 1e-9);
    CHECK(std::abs(azimuth_error_deg(rec, target_center)) <= cfg.jitter_deg + 0.5);

    // Feet on the clamped floor layer, inside the boundary.
    const Index3 foot_voxel = world_to_voxel(grids.scene, rec.foot_position_world);
    CHECK(foot_voxel.z() == grids.floor.clamped_floor_voxel);
    CHECK(grids.boundary.at(foot_voxel.x(), foot_voxel.y()));
    foot_cells.insert({foot_voxel.x(), foot_voxel.y()});

    // The augmented cloud's avatar points avoid every occupied scene cell.
    CHECK(p.augmented.size() > scene.cloud.size());
    for (std::size_t i = scene.cloud.size(); i < p.augmented.size(); ++i) {
      const Index3 cell = world_to_voxel(grids.scene, p.augmented.points[i].cast<double>());
      CHECK(!grids.scene.at(cell));
    }
    CHECK(rec.rng_seed == cfg.seed);
  }
  CHECK(foot_cells.size() == placements.size());  // pairwise distinct cells

  SUBCASE("identical seeds reproduce byte-identical records") {
    Rng rng2 = Rng(cfg.seed).stream("job");
    const auto again = impute(scene, 2, library, cfg, rng2);
    std::vector<ImputationRecord> r1, r2;
    for (const auto& p : placements) r1.push_back(p.record);
    for (const auto& p : again) r2.push_back(p.record);
    CHECK(records_to_json(r1) == records_to_json(r2));
  }
  SUBCASE("a different seed moves the placements") {
    PlacementConfig other = cfg;
    other.seed = cfg.seed + 1;
    Rng rng3 = Rng(other.seed).stream("job");
    const auto moved = impute(scene, 2, library, other, rng3);
    bool any_difference = moved.size() != placements.size();
    for (std::size_t i = 0; !any_difference && i < moved.size(); ++i)
      any_difference = (moved[i].record.foot_position_world -
                        placements[i].record.foot_position_world)
                           .norm() > 1e-12;
    CHECK(any_difference);
  }
}

TEST_CASE("feet land on the floor layer even at awkward world offsets") {
  // Scene and avatar shifted to coordinates with no exact binary
  // representation, so none of the voxel arithmetic can cancel by luck.
  test::RoomSpec spec;
  spec.seed = 77;
  spec.spacing = 0.04;
  SceneData scene = build_room(spec);
  const Vec3f offset(-7.31f, 2.113f, -0.377f);
  for (auto& p : scene.cloud.points) p += offset;

  AvatarModel avatar = test::make_test_avatar("odd", Hand::Right, -20.0, 0.04);
  const Vec3f local_shift(0.071f, -0.033f, 0.1234f);
  for (auto& p : avatar.cloud.points) p += local_shift;
  const Vec3 shift = local_shift.cast<double>();
  avatar.foot += shift;
  avatar.left_shoulder += shift;
  avatar.right_shoulder += shift;
  avatar.left_fingertip += shift;
  avatar.right_fingertip += shift;
  avatar.check_valid();

  PlacementConfig cfg = fast_config(4004);
  Rng rng = Rng(cfg.seed).stream("job");
  const auto placements = impute(scene, 2, {avatar}, cfg, rng);
  REQUIRE(!placements.empty());

  const SceneGrids grids = build_scene_grids(scene, 2, cfg, 60);
  for (const auto& p : placements) {
    const Index3 foot_voxel = world_to_voxel(grids.scene, p.record.foot_position_world);
    CHECK(foot_voxel.z() == grids.floor.clamped_floor_voxel);
    CHECK(grids.boundary.at(foot_voxel.x(), foot_voxel.y()));
  }
}

TEST_CASE("a floor height override replaces missing floor labels") {
  test::RoomSpec spec;
  spec.seed = 8;
  spec.spacing = 0.04;
  SceneData scene = build_room(spec);
  // Relabel the floor so no floor-labeled object remains.
  Segmentation seg;
  seg.floor_label = "floor";
  seg.objects = scene.objects;
  seg.objects[0].semantic_name = "carpet";
  scene = assemble_scene(scene.scene_id, std::move(scene.cloud), seg);
  REQUIRE(scene.floor_indices.empty());

  PlacementConfig cfg = fast_config(12);
  const std::vector<AvatarModel> library = {test::make_test_avatar("a", Hand::Right, -20.0, 0.04)};

  Rng rng1(1);
  CHECK_THROWS_AS(impute(scene, 2, library, cfg, rng1), MissingFloor);

  cfg.floor_height_override = 0.0;
  Rng rng2(1);
  const auto placements = impute(scene, 2, library, cfg, rng2);
  CHECK(!placements.empty());
}

TEST_CASE("the foot-column visibility probe is available as a switch") {
  test::RoomSpec spec;
  spec.seed = 13;
  spec.spacing = 0.04;
  const SceneData scene = build_room(spec);
  const PlacementConfig cfg = fast_config(13);
  const AvatarModel avatar = test::make_test_avatar("a", Hand::Right, -20.0, 0.04);
  const AvatarVolume volume = voxelize_avatar(avatar, cfg.voxel_size, cfg.margin_voxels);

  const SceneGrids grids = build_scene_grids(scene, 2, cfg, volume.height_voxels);
  const int floor_k = grids.floor.clamped_floor_voxel;
  const FootprintSet footprints = find_noncollide(grids.scene, volume, floor_k);
  const ScoreGrid scores = visibility_grid(grids.scene_no_target, grids.target_center_voxel);

  const auto by_foot = feasible_points(grids.boundary, footprints, scores, volume, floor_k,
                                       cfg.visibility_threshold, VisibilityProbe::FootColumn);
  for (const auto& cell : by_foot) {
    const Index3 probe(cell.x() + volume.foot_offset.x(), cell.y() + volume.foot_offset.y(),
                       floor_k);
    CHECK(scores.at(probe) > cfg.visibility_threshold);
  }
}

TEST_CASE("impute reports NoPlacement for an unreachable target") {
  // A box sealed inside four tight walls: no collision-free, visible spot.
  PointCloud cloud;
  Segmentation seg;
  seg.floor_label = "floor";

  auto record_object = [&](int id, const char* label, std::size_t begin) {
    SceneObject obj;
    obj.object_id = id;
    obj.semantic_name = label;
    for (std::size_t i = begin; i < cloud.size(); ++i) obj.point_indices.push_back(i);
    seg.objects.push_back(std::move(obj));
  };

  std::size_t begin = 0;
  test::add_rect_points(cloud, Vec3(0, 0, 0), Vec3(3, 0, 0), Vec3(0, 3, 0), 0.04,
                        Color3(100, 100, 100));
  record_object(0, "floor", begin);
  begin = cloud.size();
  test::add_box_shell(cloud, Vec3(1.3, 1.3, 0), Vec3(1.7, 1.7, 0.4), 0.04, Color3(50, 50, 200));
  record_object(1, "box", begin);
  begin = cloud.size();
  // Sealing enclosure around the box, with a lid.
  test::add_box_shell(cloud, Vec3(1.1, 1.1, 0), Vec3(1.9, 1.9, 2.2), 0.04, Color3(200, 50, 50));
  record_object(2, "enclosure", begin);

  const SceneData scene = assemble_scene("sealed", std::move(cloud), seg);
  const std::vector<AvatarModel> library = {test::make_test_avatar("a", Hand::Right, 0.0, 0.04)};
  PlacementConfig cfg = fast_config(3);
  Rng rng(3);
  CHECK_THROWS_AS(impute(scene, 1, library, cfg, rng), NoPlacement);
}

TEST_CASE("records JSON round trips") {
  ImputationRecord rec;
  rec.scene_id = "room_1";
  rec.target_object_id = 4;
  rec.avatar_id = "ava_b";
  rec.handedness = Hand::Left;
  rec.foot_position_world = Vec3(1.25, -0.5, 0.1);
  rec.yaw_deg = 93.125;
  rec.jitter_deg = -4.5;
  rec.pointing_elevation_deg = -22.25;
  rec.shoulder_world = Vec3(1.25, -0.4, 1.5);
  rec.fingertip_world = Vec3(1.85, -0.4, 1.3);
  rec.distance_to_target_m = 2.125;
  rec.rng_seed = 42;

  const std::string json = records_to_json({rec});
  const auto back = parse_records_json(json);
  REQUIRE(back.size() == 1);
  CHECK(back[0].scene_id == rec.scene_id);
  CHECK(back[0].handedness == Hand::Left);
  CHECK(back[0].foot_position_world == rec.foot_position_world);
  CHECK(back[0].yaw_deg == rec.yaw_deg);
  CHECK(back[0].rng_seed == 42);
  CHECK(records_to_json(back) == json);

  CHECK_THROWS_AS(parse_records_json("{"), FormatError);
  CHECK_THROWS_AS(parse_records_json("[{\"scene_id\":1}]"), FormatError);
}
