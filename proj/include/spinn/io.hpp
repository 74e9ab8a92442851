#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spinn/observe.hpp"
#include "spinn/simulate.hpp"
#include "spinn/spinn.hpp"
#include "spinn/train.hpp"

namespace spinn {

inline constexpr std::uint32_t kFormatVersion = 1;

/// High-resolution snapshots at a fixed interval dt * save_stride from t0.
struct SnapshotData {
  std::vector<VectorField> frames;
  double dt = 0.0;
  int save_stride = 1;
  double t0 = 0.0;

  static SnapshotData from(const Trajectory& traj);
  double interval() const noexcept { return dt * save_stride; }
  double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * interval(); }
};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void atomic_write(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Snapshot file "SPNN": magic, version u32, nx u32, ny u32, n_components u32,
// n_frames u32, dt f64, save_stride u32, t0 f64, then little-endian f64
// values frame by frame, component by component, row by row.
std::vector<std::uint8_t> encode_snapshots(const SnapshotData& data);
SnapshotData decode_snapshots(std::span<const std::uint8_t> bytes);
void write_snapshots(const std::filesystem::path& path, const SnapshotData& data);
SnapshotData read_snapshots(const std::filesystem::path& path);

// Observation file "SPOB": magic, version u32, n_low u32, pool u32,
// n_frames u32, t0 f64, sample_interval f64, noise_bound f64, then f64 values
// frame by frame, component by component, row by row.
std::vector<std::uint8_t> encode_observations(const ObservationSeries& obs);
ObservationSeries decode_observations(std::span<const std::uint8_t> bytes);
void write_observations(const std::filesystem::path& path, const ObservationSeries& obs);
ObservationSeries read_observations(const std::filesystem::path& path);

// Model file "SPMD": magic, version u32, in u32, out u32, kernel u32,
// n_levels u32, channels u32 x n_levels, seed u64, n_params u64, adam step
// i64, then weights, first moments and second moments as f64.
std::vector<std::uint8_t> encode_model(const SpinnParams& params);
SpinnParams decode_model(std::span<const std::uint8_t> bytes);
void write_model(const std::filesystem::path& path, const SpinnParams& params);
SpinnParams read_model(const std::filesystem::path& path);

std::string report_to_json(const TrainReport& report);
TrainReport report_from_json(const std::string& text);

struct ErrorCurve {
  std::vector<double> t;
  std::vector<double> eps1;
  std::vector<double> eps2;

  friend bool operator==(const ErrorCurve&, const ErrorCurve&) = default;
};

ErrorCurve make_error_curve(std::span<const VectorField> reference,
                            std::span<const VectorField> prediction, double t0, double interval);

/// Header "t,eps_1,eps_2"; values with 17 significant digits.
std::string curve_to_csv(const ErrorCurve& curve);
ErrorCurve curve_from_csv(const std::string& text);

}  // namespace spinn
