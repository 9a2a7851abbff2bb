#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pc/point_cloud.hpp"

namespace cd::eval {

// Two-class confusion counts with "changed" (label 1) as the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const pc::Label> pred, std::span<const pc::Label> truth);

struct ClassScores {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  bool undefined = false;  // some ratio had a zero denominator and counts as 0
};

// All values in percent. m* are unweighted means over {changed, unchanged}.
struct MetricReport {
  double oa = 0.0;
  double mrecall = 0.0;
  double mprecision = 0.0;
  double mf1 = 0.0;
  double miou = 0.0;
  ClassScores changed;
  ClassScores unchanged;
  bool undefined = false;
  ConfusionMatrix counts;
};

MetricReport metrics(const ConfusionMatrix& c);

// Aligned table in the order OA, mrecall, mprecision, mf1score, mIoU.
std::string format_table(const MetricReport& r);
// key = value lines, machine-readable.
std::string format_key_values(const MetricReport& r);

// Per-point outcome code: 0 TN, 1 TP, 2 FN, 3 FP.
enum class Outcome : std::uint8_t { TN = 0, TP = 1, FN = 2, FP = 3 };
Outcome outcome(pc::Label pred, pc::Label truth);

// "x y z pred code" lines with a legend header naming the display colors.
std::string format_colors(const PointSet& points, std::span<const pc::Label> pred,
                          std::span<const pc::Label> truth);

// Labels a T2 point changed iff its nearest T1 point is farther than threshold.
std::vector<pc::Label> c2c_baseline(const PointSet& t1, const PointSet& t2, double threshold);
// Nearest-neighbor distance from each T2 point to T1.
std::vector<double> c2c_distances(const PointSet& t1, const PointSet& t2);

struct ThresholdChoice {
  double threshold = 0.0;
  MetricReport report;
};

// Scene given as C2C distances plus ground-truth labels.
struct LabeledDistances {
  std::span<const double> distances;
  std::span<const pc::Label> labels;
};

// Threshold with the highest pooled mIoU over the scenes; the smallest
// candidate wins ties. Candidates must be non-empty and positive.
ThresholdChoice best_c2c_threshold(std::span<const LabeledDistances> scenes,
                                   std::span<const double> candidates);

}  // namespace cd::eval
