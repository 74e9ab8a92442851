#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spinn/config.hpp"
#include "spinn/error.hpp"
#include "spinn/io.hpp"

namespace spinn {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

int exit_code_for(const Error& e) noexcept;

/// Observations restricted to [t0, T] of the config and split at t1.
Dataset dataset_for(const ObservationSeries& obs, const ExperimentConfig& cfg);

/// Snapshots of `data` at the times of `times` (t0, interval, count);
/// throws ShapeMismatch when a time is not on the snapshot grid.
std::vector<VectorField> align_snapshots(const SnapshotData& data, double t0, double interval,
                                         std::size_t count);

SnapshotData cmd_generate(const ExperimentConfig& cfg);
ObservationSeries cmd_observe(const SnapshotData& trajectory, int pool, double noise_bound,
                              std::uint64_t seed);
TrainResult cmd_train(const ExperimentConfig& cfg, const ObservationSeries& obs);
/// Predicted high-resolution snapshots over the prediction span of cfg.
SnapshotData cmd_predict(const SpinnParams& params, const ExperimentConfig& cfg,
                         const ObservationSeries& obs);
ErrorCurve cmd_evaluate(const SnapshotData& prediction, const SnapshotData& reference);
/// Bicubic errors over the prediction span of cfg.
ErrorCurve cmd_baseline(const ObservationSeries& obs, const SnapshotData& reference,
                        const ExperimentConfig& cfg);
SweepResult cmd_sweep(const ExperimentConfig& cfg, const ObservationSeries& obs,
                      const std::optional<SnapshotData>& reference);

/// Full command line: parses, runs one subcommand and maps failures onto
/// exit codes. Messages go to `out` and `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spinn
