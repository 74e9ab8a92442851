#include "spinn/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "spinn/error.hpp"

namespace spinn {

namespace fs = std::filesystem;

SnapshotData SnapshotData::from(const Trajectory& traj) {
  SnapshotData d;
  d.frames = traj.snapshots;
  d.dt = traj.config.dt;
  d.save_stride = traj.config.save_stride;
  d.t0 = traj.t0;
  return d;
}

void atomic_write(const fs::path& path, std::span<const std::uint8_t> bytes) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) throw InvalidArgument("output directory does not exist: " + dir.string());
  std::random_device rd;
  const fs::path tmp = dir / (path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InvalidArgument("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InvalidArgument("cannot rename into " + path.string());
  }
}

void atomic_write(const fs::path& path, const std::string& text) {
  atomic_write(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

namespace {

class Writer {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) { little(v, 4); }
  void u64(std::uint64_t v) { little(v, 8); }
  void i64(std::int64_t v) { little(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { little(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void little(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> b, const char* kind) : b_(b), kind_(kind) {}

  void magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::memcmp(b_.data() + pos_, m.data(), m.size()) != 0) {
      throw FormatError(std::string(kind_) + ": bad magic at offset 0, expected \"" +
                        std::string(m) + "\"");
    }
    pos_ += m.size();
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(little(4, what)); }
  std::uint64_t u64(const char* what) { return little(8, what); }
  std::int64_t i64(const char* what) { return static_cast<std::int64_t>(little(8, what)); }
  double f64(const char* what) { return std::bit_cast<double>(little(8, what)); }
  void f64s(std::span<double> out) {
    for (double& v : out) v = std::bit_cast<double>(little(8, "payload"));
  }

  /// Checks the remaining length against an exact payload size.
  void expect_payload(std::uint64_t count, std::string_view layout) {
    const std::uint64_t want = count * 8;
    const std::uint64_t have = b_.size() - pos_;
    if (have != want) {
      throw FormatError(std::string(kind_) + ": payload at offset " + std::to_string(pos_) +
                        " should hold " + std::to_string(want) + " bytes (" + std::string(layout) +
                        " x 8), found " + std::to_string(have));
    }
  }
  std::size_t offset() const noexcept { return pos_; }

  void version() {
    const std::size_t at = pos_;
    const auto v = u32("version");
    if (v != kFormatVersion) {
      throw FormatError(std::string(kind_) + ": unsupported version " + std::to_string(v) +
                        " at offset " + std::to_string(at) + ", expected " +
                        std::to_string(kFormatVersion));
    }
  }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) {
      throw FormatError(std::string(kind_) + ": truncated at offset " + std::to_string(pos_) +
                        " reading " + what + ", expected " + std::to_string(n) + " more bytes, " +
                        std::to_string(b_.size() - pos_) + " available");
    }
  }
  std::uint64_t little(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> b_;
  const char* kind_;
  std::size_t pos_ = 0;
};

void write_bytes(const fs::path& path, std::vector<std::uint8_t> bytes) { atomic_write(path, bytes); }

}  // namespace

// --- snapshots ----------------------------------------------------------------

std::vector<std::uint8_t> encode_snapshots(const SnapshotData& d) {
  if (d.frames.empty()) throw InvalidArgument("no snapshots to write");
  const Grid2D& g = d.frames.front().grid();
  Writer w;
  w.bytes("SPNN");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(g.nx()));
  w.u32(static_cast<std::uint32_t>(g.ny()));
  w.u32(2);
  w.u32(static_cast<std::uint32_t>(d.frames.size()));
  w.f64(d.dt);
  w.u32(static_cast<std::uint32_t>(d.save_stride));
  w.f64(d.t0);
  for (const auto& f : d.frames) {
    require_same_grid(g, f.grid(), "encode_snapshots");
    w.f64s(f.c1().values());
    w.f64s(f.c2().values());
  }
  return w.take();
}

SnapshotData decode_snapshots(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "snapshot file");
  r.magic("SPNN");
  r.version();
  const auto nx = r.u32("nx");
  const auto ny = r.u32("ny");
  const auto nc = r.u32("n_components");
  const auto nf = r.u32("n_frames");
  SnapshotData d;
  d.dt = r.f64("dt");
  d.save_stride = static_cast<int>(r.u32("save_stride"));
  d.t0 = r.f64("t0");
  if (nx != ny) throw FormatError("snapshot file: grid must be square, header says " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
  if (nc != 2) throw FormatError("snapshot file: expected 2 components, header says " + std::to_string(nc));
  if (nx < 8 || nx > 65536) throw FormatError("snapshot file: implausible nx " + std::to_string(nx));
  r.expect_payload(static_cast<std::uint64_t>(nf) * nc * nx * ny,
                   std::to_string(nf) + " frames x 2 components x " + std::to_string(nx) + " x " +
                       std::to_string(ny));
  const Grid2D g(static_cast<int>(nx));
  d.frames.reserve(nf);
  for (std::uint32_t k = 0; k < nf; ++k) {
    VectorField v(g);
    r.f64s(v.c1().values());
    r.f64s(v.c2().values());
    d.frames.push_back(std::move(v));
  }
  return d;
}

void write_snapshots(const fs::path& path, const SnapshotData& data) {
  write_bytes(path, encode_snapshots(data));
}

SnapshotData read_snapshots(const fs::path& path) { return decode_snapshots(read_file(path)); }

// --- observations -------------------------------------------------------------

std::vector<std::uint8_t> encode_observations(const ObservationSeries& obs) {
  obs.validate();
  Writer w;
  w.bytes("SPOB");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(obs.partition.n_low));
  w.u32(static_cast<std::uint32_t>(obs.partition.pool));
  w.u32(static_cast<std::uint32_t>(obs.size()));
  w.f64(obs.t0);
  w.f64(obs.sample_interval);
  w.f64(obs.noise_bound);
  for (const auto& f : obs.frames) {
    w.f64s(f.values[0]);
    w.f64s(f.values[1]);
  }
  return w.take();
}

ObservationSeries decode_observations(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "observation file");
  r.magic("SPOB");
  r.version();
  const auto n_low = r.u32("n_low");
  const auto pool = r.u32("pool");
  const auto nf = r.u32("n_frames");
  ObservationSeries obs;
  obs.t0 = r.f64("t0");
  obs.sample_interval = r.f64("sample_interval");
  obs.noise_bound = r.f64("noise_bound");
  if (n_low < 1 || n_low > 65536 || pool < 1 || pool > 65536) {
    throw FormatError("observation file: implausible partition " + std::to_string(n_low) + " blocks of " +
                      std::to_string(pool));
  }
  obs.partition.n_low = static_cast<int>(n_low);
  obs.partition.pool = static_cast<int>(pool);
  r.expect_payload(static_cast<std::uint64_t>(nf) * 2 * n_low * n_low,
                   std::to_string(nf) + " frames x 2 components x " + std::to_string(n_low) + " x " +
                       std::to_string(n_low));
  obs.frames.reserve(nf);
  for (std::uint32_t k = 0; k < nf; ++k) {
    LowResFrame f(static_cast<int>(n_low));
    r.f64s(f.values[0]);
    r.f64s(f.values[1]);
    obs.frames.push_back(std::move(f));
  }
  return obs;
}

void write_observations(const fs::path& path, const ObservationSeries& obs) {
  write_bytes(path, encode_observations(obs));
}

ObservationSeries read_observations(const fs::path& path) {
  return decode_observations(read_file(path));
}

// --- models -------------------------------------------------------------------

std::vector<std::uint8_t> encode_model(const SpinnParams& p) {
  p.spec.validate();
  const std::size_t n = p.weights.size();
  if (UNet(p.spec).parameter_count() != n) throw ShapeMismatch("weights do not match the network");
  const bool moments = !p.adam.m.empty() || !p.adam.v.empty();
  if (moments && (p.adam.m.size() != n || p.adam.v.size() != n)) {
    throw ShapeMismatch("optimiser moments do not match the weights");
  }
  Writer w;
  w.bytes("SPMD");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(p.spec.in_channels));
  w.u32(static_cast<std::uint32_t>(p.spec.out_channels));
  w.u32(static_cast<std::uint32_t>(p.spec.kernel));
  w.u32(static_cast<std::uint32_t>(p.spec.channels.size()));
  for (int c : p.spec.channels) w.u32(static_cast<std::uint32_t>(c));
  w.u64(p.seed);
  w.u64(n);
  w.i64(p.adam.step);
  w.f64s(p.weights);
  const std::vector<double> zeros(moments ? 0 : n, 0.0);
  w.f64s(moments ? p.adam.m : zeros);
  w.f64s(moments ? p.adam.v : zeros);
  return w.take();
}

SpinnParams decode_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "model file");
  r.magic("SPMD");
  r.version();
  SpinnParams p;
  p.spec.in_channels = static_cast<int>(r.u32("in_channels"));
  p.spec.out_channels = static_cast<int>(r.u32("out_channels"));
  p.spec.kernel = static_cast<int>(r.u32("kernel"));
  const auto levels = r.u32("n_levels");
  if (levels < 1 || levels > 16) throw FormatError("model file: implausible level count " + std::to_string(levels));
  p.spec.channels.resize(levels);
  for (auto& c : p.spec.channels) c = static_cast<int>(r.u32("channels"));
  p.seed = r.u64("seed");
  const auto n = r.u64("n_params");
  p.adam.step = r.i64("adam_step");
  try {
    p.spec.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("model file: invalid network description: ") + e.what());
  }
  if (UNet(p.spec).parameter_count() != n) {
    throw FormatError("model file: header declares " + std::to_string(n) +
                      " parameters but the network has " + std::to_string(UNet(p.spec).parameter_count()));
  }
  r.expect_payload(3 * n, "3 x " + std::to_string(n) + " parameters");
  p.weights.resize(n);
  p.adam.m.resize(n);
  p.adam.v.resize(n);
  r.f64s(p.weights);
  r.f64s(p.adam.m);
  r.f64s(p.adam.v);
  return p;
}

void write_model(const fs::path& path, const SpinnParams& params) {
  write_bytes(path, encode_model(params));
}

SpinnParams read_model(const fs::path& path) { return decode_model(read_file(path)); }

// --- reports ------------------------------------------------------------------

using nlohmann::json;

std::string report_to_json(const TrainReport& rep) {
  json doc;
  doc["seed"] = rep.seed;
  doc["loss_curve"] = rep.loss_curve;
  doc["probe_loss_initial"] = rep.probe_loss_initial;
  doc["probe_loss_final"] = rep.probe_loss_final;
  json gs = json::array();
  for (const auto& g : rep.gammas) {
    json e{{"gamma", g.gamma}, {"selection_misfit", g.selection_misfit}};
    e["averaged_error"] = g.averaged_error ? json(*g.averaged_error) : json(nullptr);
    gs.push_back(std::move(e));
  }
  doc["gammas"] = std::move(gs);
  doc["selected_gamma"] = rep.selected_gamma ? json(*rep.selected_gamma) : json(nullptr);
  doc["wall_seconds"] = rep.wall_seconds;
  return doc.dump(2) + "\n";
}

TrainReport report_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    TrainReport rep;
    rep.seed = doc.at("seed").get<std::uint64_t>();
    rep.loss_curve = doc.at("loss_curve").get<std::vector<double>>();
    rep.probe_loss_initial = doc.at("probe_loss_initial").get<double>();
    rep.probe_loss_final = doc.at("probe_loss_final").get<double>();
    for (const auto& e : doc.at("gammas")) {
      GammaResult g;
      g.gamma = e.at("gamma").get<double>();
      g.selection_misfit = e.at("selection_misfit").get<double>();
      if (!e.at("averaged_error").is_null()) g.averaged_error = e.at("averaged_error").get<double>();
      rep.gammas.push_back(g);
    }
    if (!doc.at("selected_gamma").is_null()) rep.selected_gamma = doc.at("selected_gamma").get<double>();
    rep.wall_seconds = doc.at("wall_seconds").get<double>();
    return rep;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

// --- error curves -------------------------------------------------------------

ErrorCurve make_error_curve(std::span<const VectorField> reference,
                            std::span<const VectorField> prediction, double t0, double interval) {
  ErrorCurve c;
  c.eps1 = error_curve(reference, prediction, 1);
  c.eps2 = error_curve(reference, prediction, 2);
  c.t.resize(c.eps1.size());
  for (std::size_t k = 0; k < c.t.size(); ++k) c.t[k] = t0 + static_cast<double>(k) * interval;
  return c;
}

std::string curve_to_csv(const ErrorCurve& c) {
  if (c.t.size() != c.eps1.size() || c.t.size() != c.eps2.size()) {
    throw ShapeMismatch("error curve columns differ in length");
  }
  std::string out = "t,eps_1,eps_2\n";
  char buf[96];
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", c.t[k], c.eps1[k], c.eps2[k]);
    out += buf;
  }
  return out;
}

ErrorCurve curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,eps_1,eps_2") {
    throw FormatError("csv: line 1 must be the header 't,eps_1,eps_2'");
  }
  ErrorCurve c;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double v[3];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int i = 0; i < 3; ++i) {
      auto [next, ec] = std::from_chars(p, end, v[i]);
      if (ec != std::errc() || (i < 2 && (next == end || *next != ',')) || (i == 2 && next != end)) {
        throw FormatError("csv: line " + std::to_string(lineno) + " must hold three numbers");
      }
      p = next + 1;
    }
    c.t.push_back(v[0]);
    c.eps1.push_back(v[1]);
    c.eps2.push_back(v[2]);
  }
  return c;
}

}  // namespace spinn
