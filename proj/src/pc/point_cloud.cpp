#include "pc/point_cloud.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "common/errors.hpp"

namespace cd::pc {

LabeledPointCloud::LabeledPointCloud(std::string id, Epoch epoch, PointSet points,
                                     std::optional<std::vector<Label>> labels)
    : id_(std::move(id)), epoch_(epoch), points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!is_finite(points_[i])) {
      throw ValidationError("cloud '" + id_ + "': point " + std::to_string(i) +
                            " has a non-finite coordinate");
    }
  }
  if (labels) set_labels(std::move(*labels));
}

const std::vector<Label>& LabeledPointCloud::labels() const {
  if (!labels_) throw ValidationError("cloud '" + id_ + "' has no labels");
  return *labels_;
}

void LabeledPointCloud::set_labels(std::vector<Label> labels) {
  if (labels.size() != points_.size()) {
    throw ValidationError("cloud '" + id_ + "': " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(points_.size()) + " points");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) {
      throw ValidationError("cloud '" + id_ + "': label " + std::to_string(labels[i]) +
                            " at point " + std::to_string(i) + " is not 0 or 1");
    }
  }
  labels_ = std::move(labels);
}

CloudFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".xyzl" ? CloudFormat::Xyzl : CloudFormat::Xyz;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

// Splits on whitespace into at most `max_fields` + 1 views.
std::size_t split_fields(std::string_view line, std::array<std::string_view, 5>& out) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (n == out.size()) return n + 1;
    out[n++] = line.substr(i, j - i);
    i = j;
  }
  return n;
}

}  // namespace

LabeledPointCloud parse_cloud(std::string_view text, CloudFormat format,
                              const std::string& source, Epoch epoch) {
  const std::size_t expected = format == CloudFormat::Xyzl ? 4 : 3;
  PointSet points;
  std::vector<Label> labels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    std::size_t first = 0;
    while (first < line.size() && is_space(line[first])) ++first;
    if (first == line.size() || line[first] == '#') continue;

    std::array<std::string_view, 5> fields;
    const std::size_t n = split_fields(line, fields);
    if (n != expected) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(expected) + " fields, found " +
                           std::to_string(n));
    }
    std::array<double, 3> xyz{};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto f = fields[k];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), xyz[k]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(source, line_no, "malformed number '" + std::string(f) + "'");
      }
      if (!std::isfinite(xyz[k])) {
        throw ParseError(source, line_no, "non-finite coordinate '" + std::string(f) + "'");
      }
    }
    points.push_back({xyz[0], xyz[1], xyz[2]});
    if (expected == 4) {
      const auto f = fields[3];
      long value = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(source, line_no, "malformed label '" + std::string(f) + "'");
      }
      if (value != 0 && value != 1) {
        throw ValidationError(source + ":" + std::to_string(line_no) + ": label " +
                              std::to_string(value) + " is not 0 or 1");
      }
      labels.push_back(static_cast<Label>(value));
    }
  }
  std::optional<std::vector<Label>> maybe_labels;
  if (format == CloudFormat::Xyzl) maybe_labels = std::move(labels);
  return LabeledPointCloud(source, epoch, std::move(points), std::move(maybe_labels));
}

LabeledPointCloud load_cloud(const std::filesystem::path& path, CloudFormat format,
                             Epoch epoch) {
  return parse_cloud(read_text_file(path), format, path.string(), epoch);
}

LabeledPointCloud load_cloud(const std::filesystem::path& path, Epoch epoch) {
  return load_cloud(path, format_for_path(path), epoch);
}

std::string format_cloud(const LabeledPointCloud& cloud) {
  std::string out;
  out.reserve(cloud.size() * 40);
  char buf[128];
  const bool labeled = cloud.has_labels();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points()[i];
    int n = 0;
    if (labeled) {
      n = std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d\n", p.x, p.y, p.z,
                        static_cast<int>(cloud.labels()[i]));
    } else {
      n = std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f\n", p.x, p.y, p.z);
    }
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

void save_cloud(const LabeledPointCloud& cloud, const std::filesystem::path& path) {
  write_text_file(path, format_cloud(cloud));
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cd::pc
