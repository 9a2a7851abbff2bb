#include "eval/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "common/errors.hpp"
#include "pc/spatial_index.hpp"

namespace cd::eval {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

ConfusionMatrix confusion(std::span<const pc::Label> pred, std::span<const pc::Label> truth) {
  if (pred.size() != truth.size()) {
    throw DataError("confusion: " + std::to_string(pred.size()) + " predictions for " +
                    std::to_string(truth.size()) + " labels");
  }
  ConfusionMatrix c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] > 1 || truth[i] > 1) throw ValidationError("confusion: labels must be 0 or 1");
    if (truth[i]) {
      (pred[i] ? c.tp : c.fn)++;
    } else {
      (pred[i] ? c.fp : c.tn)++;
    }
  }
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& undefined) {
  if (den == 0) {
    undefined = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

ClassScores scores(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  ClassScores s;
  s.recall = ratio(tp, tp + fn, s.undefined);
  s.precision = ratio(tp, tp + fp, s.undefined);
  s.f1 = ratio(2 * tp, 2 * tp + fp + fn, s.undefined);
  s.iou = ratio(tp, tp + fp + fn, s.undefined);
  return s;
}

}  // namespace

MetricReport metrics(const ConfusionMatrix& c) {
  if (c.total() == 0) throw DataError("metrics: empty confusion matrix");
  MetricReport r;
  r.counts = c;
  r.changed = scores(c.tp, c.fp, c.fn);
  r.unchanged = scores(c.tn, c.fn, c.fp);
  r.undefined = r.changed.undefined || r.unchanged.undefined;
  r.oa = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  r.mrecall = 50.0 * (r.changed.recall + r.unchanged.recall);
  r.mprecision = 50.0 * (r.changed.precision + r.unchanged.precision);
  r.mf1 = 50.0 * (r.changed.f1 + r.unchanged.f1);
  r.miou = 50.0 * (r.changed.iou + r.unchanged.iou);
  return r;
}

std::string format_table(const MetricReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%8s %8s %10s %8s %8s\n%8.2f %8.2f %10.2f %8.2f %8.2f\n", "OA",
                "mrecall", "mprecision", "mf1score", "mIoU", r.oa, r.mrecall, r.mprecision, r.mf1,
                r.miou);
  std::string out = buf;
  if (r.undefined) out += "note: some per-class ratios were undefined and count as 0\n";
  return out;
}

std::string format_key_values(const MetricReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "OA = %.6f\nmrecall = %.6f\nmprecision = %.6f\nmf1score = %.6f\nmIoU = %.6f\n"
                "TP = %llu\nTN = %llu\nFP = %llu\nFN = %llu\nundefined = %s\n",
                r.oa, r.mrecall, r.mprecision, r.mf1, r.miou,
                static_cast<unsigned long long>(r.counts.tp),
                static_cast<unsigned long long>(r.counts.tn),
                static_cast<unsigned long long>(r.counts.fp),
                static_cast<unsigned long long>(r.counts.fn), r.undefined ? "true" : "false");
  return buf;
}

Outcome outcome(pc::Label pred, pc::Label truth) {
  if (truth) return pred ? Outcome::TP : Outcome::FN;
  return pred ? Outcome::FP : Outcome::TN;
}

std::string format_colors(const PointSet& points, std::span<const pc::Label> pred,
                          std::span<const pc::Label> truth) {
  if (points.size() != pred.size() || pred.size() != truth.size()) {
    throw DataError("color export: point, prediction and truth counts differ");
  }
  std::string out =
      "# x y z pred code\n# code 0 TN purple, 1 TP red, 2 FN blue, 3 FP yellow\n";
  char buf[160];
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %u %u\n", points[i].x, points[i].y, points[i].z,
                  static_cast<unsigned>(pred[i]),
                  static_cast<unsigned>(outcome(pred[i], truth[i])));
    out += buf;
  }
  return out;
}

std::vector<double> c2c_distances(const PointSet& t1, const PointSet& t2) {
  if (t1.empty() || t2.empty()) throw DataError("c2c: both clouds must be non-empty");
  const pc::SpatialIndex index = pc::build_index(t1);
  std::vector<double> d(t2.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(t2.size()); ++i) {
    d[i] = distance(t2[i], t1[index.nearest(t2[i])]);
  }
  return d;
}

std::vector<pc::Label> c2c_baseline(const PointSet& t1, const PointSet& t2, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("c2c: threshold must be > 0");
  const std::vector<double> d = c2c_distances(t1, t2);
  std::vector<pc::Label> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] > threshold ? pc::kChanged : pc::kUnchanged;
  return out;
}

ThresholdChoice best_c2c_threshold(std::span<const LabeledDistances> scenes,
                                   std::span<const double> candidates) {
  if (candidates.empty()) throw ConfigError("c2c: no candidate thresholds");
  ThresholdChoice best;
  bool have = false;
  for (double t : candidates) {
    if (!(t > 0.0)) throw ConfigError("c2c: threshold must be > 0");
    ConfusionMatrix total;
    for (const auto& s : scenes) {
      if (s.distances.size() != s.labels.size()) {
        throw DataError("c2c: distance and label counts differ");
      }
      std::vector<pc::Label> pred(s.distances.size());
      for (std::size_t i = 0; i < pred.size(); ++i) {
        pred[i] = s.distances[i] > t ? pc::kChanged : pc::kUnchanged;
      }
      total += confusion(pred, s.labels);
    }
    const MetricReport r = metrics(total);
    if (!have || r.miou > best.report.miou || (r.miou == best.report.miou && t < best.threshold)) {
      best = {t, r};
      have = true;
    }
  }
  return best;
}

}  // namespace cd::eval
