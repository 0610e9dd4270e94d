#include "gplace/gesture_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gplace {

double pointing_bias(const Vec3& shoulder, const Vec3& fingertip, const Vec3& box_center) {
  const Vec3 ray = fingertip - shoulder;
  const Vec3 to_center = box_center - shoulder;
  const double nr = ray.norm(), nc = to_center.norm();
  if (nr == 0.0 || nc == 0.0) throw DegenerateRay("pointing_bias: zero-length vector");
  return std::clamp(ray.dot(to_center) / (nr * nc), -1.0, 1.0);
}

void HandednessWeights::check_valid() const {
  if (left < 0.0 || right < 0.0 || std::abs(left + right - 1.0) > 1e-9)
    throw Error("HandednessWeights must be nonnegative and sum to 1");
}

void FusionWeights::check_valid() const {
  if (confidence < 0.0 || bias < 0.0 || std::abs(confidence + bias - 1.0) > 1e-9)
    throw Error("FusionWeights must be nonnegative and sum to 1");
}

ProposalScores score_proposals(const PointingRays& rays, const std::vector<BoundingBox3D>& proposals,
                               const std::vector<double>& confidence, const HandednessWeights& w_lr,
                               const FusionWeights& w_score) {
  if (proposals.empty()) throw EmptyInput("score_proposals: no proposals");
  if (confidence.size() != proposals.size())
    throw LengthMismatch("score_proposals: confidence length differs from proposal count");
  w_lr.check_valid();
  w_score.check_valid();

  ProposalScores out;
  const std::size_t m = proposals.size();
  out.bias_left.reserve(m);
  out.bias_right.reserve(m);
  out.bias_final.reserve(m);
  out.final_scores.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3 center = box_center(proposals[i]);
    const double left = pointing_bias(rays.left_shoulder, rays.left_fingertip, center);
    const double right = pointing_bias(rays.right_shoulder, rays.right_fingertip, center);
    const double handed = w_lr.left * left + w_lr.right * right;
    out.bias_left.push_back(left);
    out.bias_right.push_back(right);
    out.bias_final.push_back(handed);
    out.final_scores.push_back(w_score.confidence * confidence[i] + w_score.bias * handed);
  }
  out.best_index = static_cast<int>(
      std::max_element(out.final_scores.begin(), out.final_scores.end()) -
      out.final_scores.begin());  // max_element keeps the first of equal maxima
  return out;
}

double iou3d(const BoundingBox3D& a, const BoundingBox3D& b) {
  double inter = 1.0, vol_a = 1.0, vol_b = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = std::max(a.min()[axis], b.min()[axis]);
    const double hi = std::min(a.max()[axis], b.max()[axis]);
    inter *= std::max(0.0, hi - lo);
    vol_a *= a.max()[axis] - a.min()[axis];
    vol_b *= b.max()[axis] - b.min()[axis];
  }
  const double uni = vol_a + vol_b - inter;
  if (uni <= 0.0) {
    // Both boxes degenerate; identical degenerate boxes count as a match.
    return (a.min() == b.min() && a.max() == b.max()) ? 1.0 : 0.0;
  }
  return inter / uni;
}

HallBucket hall_bucket(double distance_m) {
  if (distance_m < 0.46) return HallBucket::Intimate;
  if (distance_m < 1.22) return HallBucket::Personal;
  if (distance_m < 3.70) return HallBucket::Social;
  return HallBucket::Public;
}

const char* to_string(HallBucket b) {
  switch (b) {
    case HallBucket::Intimate: return "Intimate";
    case HallBucket::Personal: return "Personal";
    case HallBucket::Social: return "Social";
    case HallBucket::Public: return "Public";
  }
  return "?";
}

EvalReport evaluate(const std::vector<EvalSample>& samples, std::vector<double> thresholds) {
  if (samples.empty()) throw EmptyInput("evaluate: no samples");
  EvalReport report;
  report.thresholds = std::move(thresholds);
  const std::size_t nt = report.thresholds.size();

  std::vector<std::size_t> overall_hits(nt, 0);
  std::array<std::vector<std::size_t>, 4> bucket_hits;
  std::array<std::size_t, 4> bucket_counts{};
  for (auto& v : bucket_hits) v.assign(nt, 0);

  for (const auto& s : samples) {
    const double iou = iou3d(s.predicted, s.ground_truth);
    const auto bucket = static_cast<std::size_t>(hall_bucket(s.distance_m));
    ++bucket_counts[bucket];
    for (std::size_t t = 0; t < nt; ++t) {
      if (iou >= report.thresholds[t]) {
        ++overall_hits[t];
        ++bucket_hits[bucket][t];
      }
    }
  }

  report.overall_accuracy.resize(nt);
  for (std::size_t t = 0; t < nt; ++t)
    report.overall_accuracy[t] =
        static_cast<double>(overall_hits[t]) / static_cast<double>(samples.size());
  for (std::size_t b = 0; b < 4; ++b) {
    report.buckets[b].count = bucket_counts[b];
    report.buckets[b].accuracy.resize(nt);
    for (std::size_t t = 0; t < nt; ++t)
      report.buckets[b].accuracy[t] =
          bucket_counts[b] == 0
              ? 0.0
              : static_cast<double>(bucket_hits[b][t]) / static_cast<double>(bucket_counts[b]);
  }
  return report;
}

namespace {

BoundingBox3D box_from_json(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != 6)
    throw FormatError("evaluation sample: box is not [minx,miny,minz,maxx,maxy,maxz]");
  BoundingBox3D box(Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>()),
                    Vec3(a[3].get<double>(), a[4].get<double>(), a[5].get<double>()));
  if ((box.min().array() > box.max().array()).any())
    throw FormatError("evaluation sample: box min exceeds max");
  return box;
}

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string threshold_key(double tau) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "iou@%g", tau);
  return buf;
}

}  // namespace

std::vector<EvalSample> read_eval_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("predictions '" + path.string() + "': " + e.what());
  }
  std::vector<EvalSample> samples;
  try {
    for (const auto& item : j) {
      EvalSample s;
      s.sample_id = item.at("sample_id").get<std::string>();
      s.predicted = box_from_json(item.at("pred"));
      s.ground_truth = box_from_json(item.at("gt"));
      s.distance_m = item.at("distance_m").get<double>();
      samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("predictions '" + path.string() + "': " + e.what());
  }
  return samples;
}

std::string report_to_json(const EvalReport& report) {
  std::ostringstream os;
  os << "{\"overall\":{";
  for (std::size_t t = 0; t < report.thresholds.size(); ++t)
    os << (t ? "," : "") << "\"" << threshold_key(report.thresholds[t])
       << "\":" << fmt_g9(report.overall_accuracy[t]);
  os << "},\"buckets\":{";
  for (std::size_t b = 0; b < 4; ++b) {
    os << (b ? "," : "") << "\"" << to_string(static_cast<HallBucket>(b))
       << "\":{\"n\":" << report.buckets[b].count;
    for (std::size_t t = 0; t < report.thresholds.size(); ++t)
      os << ",\"" << threshold_key(report.thresholds[t])
         << "\":" << fmt_g9(report.buckets[b].accuracy[t]);
    os << "}";
  }
  os << "}}";
  return os.str();
}

std::string report_table(const EvalReport& report) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-10s %8s", "bucket", "n");
  os << buf;
  for (double tau : report.thresholds) {
    std::snprintf(buf, sizeof(buf), " %10s", threshold_key(tau).c_str());
    os << buf;
  }
  os << "\n";
  auto row = [&](const char* name, std::size_t n, const std::vector<double>& acc) {
    std::snprintf(buf, sizeof(buf), "%-10s %8zu", name, n);
    os << buf;
    for (double a : acc) {
      std::snprintf(buf, sizeof(buf), " %10.4f", a);
      os << buf;
    }
    os << "\n";
  };
  std::size_t total = 0;
  for (const auto& b : report.buckets) total += b.count;
  row("overall", total, report.overall_accuracy);
  for (std::size_t b = 0; b < 4; ++b)
    row(to_string(static_cast<HallBucket>(b)), report.buckets[b].count,
        report.buckets[b].accuracy);
  return os.str();
}

}  // namespace gplace
