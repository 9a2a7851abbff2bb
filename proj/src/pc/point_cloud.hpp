#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "common/vec3.hpp"

namespace cd::pc {

enum class Epoch { T1, T2 };

// xyz: "x y z" per line; xyzl: "x y z label".
enum class CloudFormat { Xyz, Xyzl };

using Label = std::uint8_t;
inline constexpr Label kUnchanged = 0;
inline constexpr Label kChanged = 1;

// Ordered 3D points (meters) with optional per-point change labels.
// Coordinates are finite and labels, when present, are 0/1 with one entry per
// point; the constructor enforces both.
class LabeledPointCloud {
 public:
  LabeledPointCloud() = default;
  LabeledPointCloud(std::string id, Epoch epoch, PointSet points,
                    std::optional<std::vector<Label>> labels = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  Epoch epoch() const noexcept { return epoch_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const PointSet& points() const noexcept { return points_; }
  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<Label>& labels() const;

  void set_labels(std::vector<Label> labels);
  void clear_labels() { labels_.reset(); }

 private:
  std::string id_;
  Epoch epoch_ = Epoch::T1;
  PointSet points_;
  std::optional<std::vector<Label>> labels_;
};

CloudFormat format_for_path(const std::filesystem::path& path);

LabeledPointCloud parse_cloud(std::string_view text, CloudFormat format,
                              const std::string& source = "<memory>",
                              Epoch epoch = Epoch::T1);
LabeledPointCloud load_cloud(const std::filesystem::path& path, CloudFormat format,
                             Epoch epoch = Epoch::T1);
// Format inferred from the extension (.xyzl -> labeled, anything else -> xyz).
LabeledPointCloud load_cloud(const std::filesystem::path& path, Epoch epoch = Epoch::T1);

// Writes "%.6f" coordinates, LF line endings; the label column is emitted iff
// the cloud carries labels.
std::string format_cloud(const LabeledPointCloud& cloud);
void save_cloud(const LabeledPointCloud& cloud, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace cd::pc
