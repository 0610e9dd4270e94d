#include <doctest.h>

#include <cmath>

#include "gplace/gesture_eval.hpp"
#include "gplace/rng.hpp"
#include "oracles.hpp"

using namespace gplace;

namespace {

Vec3 random_point(Rng& rng, double lo = -3.0, double hi = 3.0) {
  return Vec3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
}

BoundingBox3D random_box(Rng& rng) {
  const Vec3 c = random_point(rng);
  const Vec3 half(rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0));
  return BoundingBox3D(c - half, c + half);
}

BoundingBox3D box_at(const Vec3& center, double half = 0.1) {
  return BoundingBox3D(center - Vec3::Constant(half), center + Vec3::Constant(half));
}

}  // namespace

TEST_CASE("pointing bias analytic cases") {
  const Vec3 shoulder(0, 0, 0), fingertip(1, 0, 0);
  CHECK(pointing_bias(shoulder, fingertip, Vec3(2, 0, 0)) == 1.0);
  CHECK(pointing_bias(shoulder, fingertip, Vec3(0, 1, 0)) == 0.0);
  CHECK(pointing_bias(shoulder, fingertip, Vec3(-1, 0, 0)) == -1.0);
  CHECK_THROWS_AS(pointing_bias(shoulder, shoulder, Vec3(1, 0, 0)), DegenerateRay);
  CHECK_THROWS_AS(pointing_bias(shoulder, fingertip, shoulder), DegenerateRay);
}

TEST_CASE("pointing bias is invariant under rigid motion and positive scaling") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 v1 = random_point(rng);
    Vec3 v2 = random_point(rng);
    Vec3 v3 = random_point(rng);
    if ((v2 - v1).norm() < 1e-6 || (v3 - v1).norm() < 1e-6) continue;
    const double base = pointing_bias(v1, v2, v3);

    const Vec3 shift = random_point(rng);
    CHECK(pointing_bias(v1 + shift, v2 + shift, v3 + shift) == doctest::Approx(base).epsilon(1e-9));

    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(rng.uniform(-3, 3), random_point(rng).normalized()).toRotationMatrix();
    CHECK(pointing_bias(rot * v1, rot * v2, rot * v3) == doctest::Approx(base).epsilon(1e-9));

    const double s1 = rng.uniform(0.1, 5.0), s2 = rng.uniform(0.1, 5.0);
    CHECK(pointing_bias(v1, v1 + s1 * (v2 - v1), v1 + s2 * (v3 - v1)) ==
          doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("score_proposals fusion behaviors") {
  Rng rng(7);
  PointingRays rays;
  rays.right_shoulder = Vec3(0, 0, 1.4);
  rays.right_fingertip = Vec3(0.6, 0, 1.4);
  rays.left_shoulder = Vec3(0, 0.2, 1.4);
  rays.left_fingertip = Vec3(0.0, 0.8, 1.4);

  std::vector<BoundingBox3D> proposals;
  for (int i = 0; i < 5; ++i) proposals.push_back(box_at(Vec3(1.0 + i, 2.0, 0.5)));
  // Proposal 2 sits dead ahead of the right-hand ray.
  proposals[2] = box_at(Vec3(2.0, 0.0, 1.4));
  std::vector<double> confidence{0.1, 0.7, 0.2, 0.5, 0.3};

  SUBCASE("confidence-only weights reproduce the confidence scores") {
    const auto scores = score_proposals(rays, proposals, confidence, HandednessWeights{0.5, 0.5},
                                        FusionWeights{1.0, 0.0});
    CHECK(scores.final_scores == confidence);
    CHECK(scores.best_index == 1);
  }
  SUBCASE("gesture-only weights pick the on-ray proposal") {
    const auto scores = score_proposals(rays, proposals, confidence, HandednessWeights{0.0, 1.0},
                                        FusionWeights{0.0, 1.0});
    CHECK(scores.best_index == 2);
    CHECK(scores.final_scores[2] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("one-hot handedness selects that hand's bias") {
    const auto scores = score_proposals(rays, proposals, confidence, HandednessWeights{1.0, 0.0},
                                        FusionWeights{0.3, 0.7});
    for (std::size_t i = 0; i < proposals.size(); ++i)
      CHECK(scores.bias_final[i] == scores.bias_left[i]);
  }
  SUBCASE("length mismatch is rejected") {
    confidence.pop_back();
    CHECK_THROWS_AS(score_proposals(rays, proposals, confidence, HandednessWeights{},
                                    FusionWeights{}),
                    LengthMismatch);
  }
  SUBCASE("invalid weights are rejected") {
    CHECK_THROWS(score_proposals(rays, proposals, confidence, HandednessWeights{0.7, 0.7},
                                 FusionWeights{}));
    CHECK_THROWS(score_proposals(rays, proposals, confidence, HandednessWeights{},
                                 FusionWeights{-0.5, 1.5}));
  }

  SUBCASE("argmax is shift invariant and the fusion is a convex combination") {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> conf;
      for (int i = 0; i < 5; ++i) conf.push_back(rng.uniform(-2, 2));
      const FusionWeights w{rng.uniform01(), 0.0};
      const FusionWeights weights{w.confidence, 1.0 - w.confidence};
      const auto base = score_proposals(rays, proposals, conf, HandednessWeights{}, weights);

      const double shift = rng.uniform(-10, 10);
      std::vector<double> shifted = conf;
      for (auto& v : shifted) v += shift;
      const auto moved = score_proposals(rays, proposals, shifted, HandednessWeights{}, weights);
      CHECK(moved.best_index == base.best_index);

      for (std::size_t i = 0; i < conf.size(); ++i) {
        CHECK(base.final_scores[i] >= std::min(conf[i], base.bias_final[i]) - 1e-12);
        CHECK(base.final_scores[i] <= std::max(conf[i], base.bias_final[i]) + 1e-12);
      }
    }
  }
}

TEST_CASE("iou3d analytic cases") {
  const BoundingBox3D unit(Vec3(0, 0, 0), Vec3(1, 1, 1));
  CHECK(iou3d(unit, unit) == 1.0);
  const BoundingBox3D shifted(Vec3(0.5, 0, 0), Vec3(1.5, 1, 1));
  CHECK(iou3d(unit, shifted) == 1.0 / 3.0);
  const BoundingBox3D far(Vec3(5, 5, 5), Vec3(6, 6, 6));
  CHECK(iou3d(unit, far) == 0.0);
  // Touching boxes share zero volume.
  const BoundingBox3D touch(Vec3(1, 0, 0), Vec3(2, 1, 1));
  CHECK(iou3d(unit, touch) == 0.0);
}

TEST_CASE("iou3d is symmetric, bounded, and agrees with Monte Carlo") {
  Rng rng(1234);
  for (int trial = 0; trial < 40; ++trial) {
    const BoundingBox3D a = random_box(rng), b = random_box(rng);
    const double ab = iou3d(a, b);
    CHECK(ab == iou3d(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    Rng mc_rng = rng.stream(trial);
    CHECK(std::abs(ab - test::mc_iou(a, b, 120000, mc_rng)) <= 1e-2);
  }
}

TEST_CASE("hall buckets use inclusive lower bounds") {
  CHECK(hall_bucket(0.0) == HallBucket::Intimate);
  CHECK(hall_bucket(0.459) == HallBucket::Intimate);
  CHECK(hall_bucket(0.46) == HallBucket::Personal);
  CHECK(hall_bucket(1.21) == HallBucket::Personal);
  CHECK(hall_bucket(1.22) == HallBucket::Social);
  CHECK(hall_bucket(3.69) == HallBucket::Social);
  CHECK(hall_bucket(3.70) == HallBucket::Public);
  CHECK(hall_bucket(10.0) == HallBucket::Public);
}

TEST_CASE("evaluate counts hits per threshold and bucket") {
  const BoundingBox3D unit(Vec3(0, 0, 0), Vec3(1, 1, 1));
  // IoU (1-s)/(1+s) under an x-shift of s: 0.25 -> 0.6, 7/13 -> 0.3.
  const BoundingBox3D iou06(Vec3(0.25, 0, 0), Vec3(1.25, 1, 1));
  const BoundingBox3D iou03(Vec3(7.0 / 13.0, 0, 0), Vec3(1 + 7.0 / 13.0, 1, 1));

  std::vector<EvalSample> samples{
      {"a", iou06, unit, 0.8},
      {"b", iou03, unit, 2.0},
  };
  const EvalReport report = evaluate(samples);
  CHECK(report.overall_accuracy[0] == 1.0);  // both >= 0.25
  CHECK(report.overall_accuracy[1] == 0.5);  // only the first >= 0.5
  CHECK(report.buckets[static_cast<int>(HallBucket::Personal)].count == 1);
  CHECK(report.buckets[static_cast<int>(HallBucket::Social)].count == 1);
  CHECK(report.buckets[static_cast<int>(HallBucket::Intimate)].count == 0);

  const std::string json = report_to_json(report);
  CHECK(json.find("\"overall\":{\"iou@0.25\":1,\"iou@0.5\":0.5}") != std::string::npos);
  CHECK(json.find("\"Personal\":{\"n\":1,\"iou@0.25\":1,\"iou@0.5\":1}") != std::string::npos);
  const std::string table = report_table(report);
  CHECK(table.find("overall") != std::string::npos);
  CHECK(table.find("Public") != std::string::npos);

  CHECK_THROWS_AS(evaluate({}), EmptyInput);
}

TEST_CASE("accuracies are monotone non-increasing in the threshold") {
  Rng rng(5150);
  std::vector<EvalSample> samples;
  for (int i = 0; i < 50; ++i)
    samples.push_back({"s", random_box(rng), random_box(rng), rng.uniform(0, 5)});
  const EvalReport report = evaluate(samples, {0.1, 0.25, 0.5, 0.75, 0.9});
  for (std::size_t t = 1; t < report.thresholds.size(); ++t) {
    CHECK(report.overall_accuracy[t] <= report.overall_accuracy[t - 1]);
    for (const auto& bucket : report.buckets)
      CHECK(bucket.accuracy[t] <= bucket.accuracy[t - 1]);
  }
}
