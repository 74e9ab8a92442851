#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spinn/simulate.hpp"
#include "spinn/train.hpp"

namespace spinn {

/// One experiment end to end: reference flow, observation operator, split
/// and training. Times are absolute; the reference run starts at 0.
struct ExperimentConfig {
  double nu = 0.01;
  double dt = 0.0005;
  int nx = 64;
  int pool = 4;
  ForcingSpec forcing;
  double gamma = 10.0;
  double lambda = 0.1;
  double train_t0 = 0.0;
  double train_t1 = 245.0;
  double predict_t1 = 250.0;  // T; the prediction span is (train_t1, T]

  double learning_rate = 1e-4;
  int batch_windows = 20;
  int window_len = 200;
  int steps = 2000;
  std::uint64_t seed = 0;
  WindowInit init = WindowInit::Bicubic;
  double output_gain = 1.0;
  bool known_forcing = false;

  int save_stride = 5;
  double ic_scale = 1.0;
  double noise_bound = 0.0;
  FrameFeed feed = FrameFeed::ZeroOrderHold;
  std::vector<int> channels = {16, 32, 64};
  std::vector<double> gammas = {2.0, 10.0, 100.0};  // sweep list

  static ExperimentConfig full_scale();
  /// 32x32 grid, 2x2 pooling, short spans and a small network sized for one
  /// CPU core.
  static ExperimentConfig desk_scale();

  void validate() const;

  SolverConfig solver() const;
  SpinnSetup setup() const;
  TrainConfig train_config() const;
  Grid2D grid() const { return Grid2D(nx); }
  /// Reference steps from 0 to T.
  std::size_t total_steps() const;
  double sample_interval() const { return dt * save_stride; }
};

/// Parses a JSON document. Keys absent from the document keep the values of
/// `base`; unknown keys are rejected with InvalidArgument.
ExperimentConfig parse_config(const std::string& json_text, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base = {});
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace spinn
