#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace cd::train {

enum class OptimizerKind { Adam, Sgd };
enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
  double lr = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 10;
  std::size_t steps_per_epoch = 20;
  // Unset means inverse class frequency over the train split.
  std::optional<std::array<double, 2>> class_weights;
  std::uint64_t seed = 1;
  std::size_t chunk = 1024;
  // Fraction of crops centered on a changed point; small changes are
  // otherwise rarely seen.
  double change_focus = 0.5;
  // Global gradient norm cap applied before the update; 0 disables.
  double grad_clip = 0.0;
  // Cosine decays lr to zero over epochs * steps_per_epoch updates.
  LrSchedule schedule = LrSchedule::Constant;
  // Random rotation of each training crop about the vertical axis.
  bool augment = false;
  std::size_t checkpoint_every = 0;  // 0: only best and last
};

}  // namespace cd::train
