#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "gplace/types.hpp"

namespace gplace {

/// Cosine of the angle between the pointing ray (shoulder -> fingertip) and
/// the ray from the shoulder to a candidate box center. In [-1, 1].
double pointing_bias(const Vec3& shoulder, const Vec3& fingertip, const Vec3& box_center);

/// Convex weights over the two hands' bias scores (sum to 1).
struct HandednessWeights {
  double left = 0.5;
  double right = 0.5;

  static HandednessWeights one_hot(Hand h) {
    return h == Hand::Left ? HandednessWeights{1.0, 0.0} : HandednessWeights{0.0, 1.0};
  }
  void check_valid() const;
};

/// Convex weights fusing confidence scores with the handed bias (sum to 1).
struct FusionWeights {
  double confidence = 0.5;
  double bias = 0.5;

  void check_valid() const;
};

struct PointingRays {
  Vec3 left_shoulder = Vec3::Zero();
  Vec3 left_fingertip = Vec3::Zero();
  Vec3 right_shoulder = Vec3::Zero();
  Vec3 right_fingertip = Vec3::Zero();
};

struct ProposalScores {
  std::vector<double> bias_left;
  std::vector<double> bias_right;
  std::vector<double> bias_final;
  std::vector<double> final_scores;
  int best_index = 0;  // argmax of final_scores, ties to the lowest index
};

/// Per-proposal bias scores against each box center, handed combination, and
/// weighted fusion with the supplied confidence scores.
ProposalScores score_proposals(const PointingRays& rays, const std::vector<BoundingBox3D>& proposals,
                               const std::vector<double>& confidence, const HandednessWeights& w_lr,
                               const FusionWeights& w_score);

/// Axis-aligned intersection-over-union; 0 when disjoint.
double iou3d(const BoundingBox3D& a, const BoundingBox3D& b);

/// Hall interpersonal distance classes. Lower bound inclusive, upper
/// exclusive: Intimate [0, 0.46), Personal [0.46, 1.22), Social [1.22, 3.70),
/// Public [3.70, inf).
enum class HallBucket { Intimate = 0, Personal = 1, Social = 2, Public = 3 };

HallBucket hall_bucket(double distance_m);
const char* to_string(HallBucket b);

struct EvalSample {
  std::string sample_id;
  BoundingBox3D predicted;
  BoundingBox3D ground_truth;
  double distance_m = 0.0;
};

struct BucketStats {
  std::size_t count = 0;
  std::vector<double> accuracy;  // parallel to report thresholds
};

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<double> overall_accuracy;
  std::array<BucketStats, 4> buckets;  // indexed by HallBucket
};

/// Accuracy at each IoU threshold, overall and per distance bucket.
EvalReport evaluate(const std::vector<EvalSample>& samples,
                    std::vector<double> thresholds = {0.25, 0.5});

std::vector<EvalSample> read_eval_samples(const std::filesystem::path& path);
std::string report_to_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

}  // namespace gplace
