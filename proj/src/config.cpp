#include "spinn/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "spinn/error.hpp"

namespace spinn {

using nlohmann::json;

ExperimentConfig ExperimentConfig::full_scale() { return {}; }

ExperimentConfig ExperimentConfig::desk_scale() {
  ExperimentConfig c;
  c.dt = 0.002;
  c.nx = 32;
  c.pool = 2;
  c.train_t1 = 30.0;
  c.predict_t1 = 32.0;
  c.learning_rate = 1e-3;
  c.batch_windows = 1;
  c.window_len = 200;
  c.steps = 600;
  c.output_gain = 0.1;
  c.channels = {8, 16};
  return c;
}

void ExperimentConfig::validate() const {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("nu must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (pool < 1) throw InvalidArgument("pool.k must be >= 1");
  const Grid2D g(nx);
  PartitionSpec::for_grid(g, pool);
  forcing.validate();
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be >= 0");
  if (!(train_t0 >= 0.0 && train_t0 < train_t1 && train_t1 < predict_t1)) {
    throw InvalidArgument("spans must satisfy 0 <= t0 < t1 < T");
  }
  if (save_stride < 1) throw InvalidArgument("save_stride must be >= 1");
  if (!(noise_bound >= 0.0)) throw InvalidArgument("noise_bound must be >= 0");
  for (double gm : gammas) {
    if (!(gm >= 0.0)) throw InvalidArgument("swept gamma values must be >= 0");
  }
  const double steps_t = predict_t1 / dt;
  if (std::abs(steps_t - std::round(steps_t)) > 1e-6 * steps_t) {
    throw InvalidArgument("T must be a whole number of time steps");
  }
  UNetSpec spec = setup().unet;
  spec.validate();
  if (nx % spec.size_multiple() != 0 || nx / spec.size_multiple() < 2) {
    throw InvalidArgument("grid.nx " + std::to_string(nx) + " does not fit a " +
                          std::to_string(channels.size()) + "-level network");
  }
  train_config().validate();
}

SolverConfig ExperimentConfig::solver() const {
  SolverConfig s;
  s.nu = nu;
  s.dt = dt;
  s.forcing = forcing;
  s.gamma = gamma;
  s.save_stride = save_stride;
  s.feed = feed;
  return s;
}

SpinnSetup ExperimentConfig::setup() const {
  SpinnSetup s;
  s.nx = nx;
  s.solver = solver();
  s.unet.channels = channels;
  s.known_forcing = known_forcing;
  return s;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.lambda = lambda;
  t.learning_rate = learning_rate;
  t.batch_windows = batch_windows;
  t.window_len = window_len;
  t.steps = steps;
  t.gamma = gamma;
  t.seed = seed;
  t.init = init;
  t.output_gain = output_gain;
  return t;
}

std::size_t ExperimentConfig::total_steps() const {
  return static_cast<std::size_t>(std::llround(predict_t1 / dt));
}

namespace {

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) throw InvalidArgument(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) {
      throw InvalidArgument("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, std::string_view where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("bad value for '" + std::string(key) + "' in " + std::string(where));
  }
}

ForcingKind forcing_kind(const std::string& s) {
  if (s == "fourier") return ForcingKind::FourierMode;
  if (s == "zero") return ForcingKind::Zero;
  throw InvalidArgument("forcing.kind must be 'fourier' or 'zero', got '" + s + "'");
}

std::string forcing_name(ForcingKind k) {
  switch (k) {
    case ForcingKind::FourierMode: return "fourier";
    case ForcingKind::Zero: return "zero";
    case ForcingKind::Custom: break;
  }
  throw InvalidArgument("custom forcing cannot be written to a config file");
}

FrameFeed feed_kind(const std::string& s) {
  if (s == "zero_order_hold") return FrameFeed::ZeroOrderHold;
  if (s == "on_arrival") return FrameFeed::OnArrival;
  throw InvalidArgument("feed must be 'zero_order_hold' or 'on_arrival', got '" + s + "'");
}

WindowInit init_kind(const std::string& s) {
  if (s == "bicubic") return WindowInit::Bicubic;
  if (s == "lift") return WindowInit::Lift;
  throw InvalidArgument("training.init must be 'bicubic' or 'lift', got '" + s + "'");
}

std::pair<double, double> read_span(const json& spans, const char* key) {
  const json& v = spans.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw InvalidArgument(std::string("spans.") + key + " must be a pair of numbers");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const ExperimentConfig& base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = base;
  reject_unknown(doc, "config",
                 {"nu", "dt", "grid", "pool", "forcing", "gamma", "lambda", "spans", "training",
                  "save_stride", "ic_scale", "noise_bound", "feed", "unet", "gammas"});
  read(doc, "nu", c.nu, "config");
  read(doc, "dt", c.dt, "config");
  read(doc, "gamma", c.gamma, "config");
  read(doc, "lambda", c.lambda, "config");
  read(doc, "save_stride", c.save_stride, "config");
  read(doc, "ic_scale", c.ic_scale, "config");
  read(doc, "noise_bound", c.noise_bound, "config");
  read(doc, "gammas", c.gammas, "config");
  if (doc.contains("feed")) {
    std::string s;
    read(doc, "feed", s, "config");
    c.feed = feed_kind(s);
  }
  if (doc.contains("grid")) {
    reject_unknown(doc["grid"], "grid", {"nx"});
    read(doc["grid"], "nx", c.nx, "grid");
  }
  if (doc.contains("pool")) {
    reject_unknown(doc["pool"], "pool", {"k"});
    read(doc["pool"], "k", c.pool, "pool");
  }
  if (doc.contains("forcing")) {
    const json& f = doc["forcing"];
    reject_unknown(f, "forcing", {"kind", "mode", "amplitude"});
    if (f.contains("kind")) {
      std::string s;
      read(f, "kind", s, "forcing");
      c.forcing.kind = forcing_kind(s);
    }
    read(f, "mode", c.forcing.mode, "forcing");
    read(f, "amplitude", c.forcing.amplitude, "forcing");
  }
  if (doc.contains("spans")) {
    const json& s = doc["spans"];
    reject_unknown(s, "spans", {"train", "predict"});
    if (s.contains("train")) std::tie(c.train_t0, c.train_t1) = read_span(s, "train");
    if (s.contains("predict")) {
      const auto [lo, hi] = read_span(s, "predict");
      if (s.contains("train") && lo != c.train_t1) {
        throw InvalidArgument("spans.predict must start where spans.train ends");
      }
      c.train_t1 = lo;
      c.predict_t1 = hi;
    }
  }
  if (doc.contains("training")) {
    const json& t = doc["training"];
    reject_unknown(t, "training",
                   {"lr", "batch_windows", "window_len", "steps", "seed", "init", "output_gain",
                    "known_forcing"});
    read(t, "lr", c.learning_rate, "training");
    read(t, "batch_windows", c.batch_windows, "training");
    read(t, "window_len", c.window_len, "training");
    read(t, "steps", c.steps, "training");
    read(t, "seed", c.seed, "training");
    read(t, "output_gain", c.output_gain, "training");
    read(t, "known_forcing", c.known_forcing, "training");
    if (t.contains("init")) {
      std::string s;
      read(t, "init", s, "training");
      c.init = init_kind(s);
    }
  }
  if (doc.contains("unet")) {
    reject_unknown(doc["unet"], "unet", {"channels"});
    read(doc["unet"], "channels", c.channels, "unet");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["nu"] = c.nu;
  doc["dt"] = c.dt;
  doc["grid"] = {{"nx", c.nx}};
  doc["pool"] = {{"k", c.pool}};
  doc["forcing"] = {{"kind", forcing_name(c.forcing.kind)},
                    {"mode", c.forcing.mode},
                    {"amplitude", c.forcing.amplitude}};
  doc["gamma"] = c.gamma;
  doc["lambda"] = c.lambda;
  doc["spans"] = {{"train", {c.train_t0, c.train_t1}}, {"predict", {c.train_t1, c.predict_t1}}};
  doc["training"] = {{"lr", c.learning_rate},
                     {"batch_windows", c.batch_windows},
                     {"window_len", c.window_len},
                     {"steps", c.steps},
                     {"seed", c.seed},
                     {"init", c.init == WindowInit::Bicubic ? "bicubic" : "lift"},
                     {"output_gain", c.output_gain},
                     {"known_forcing", c.known_forcing}};
  doc["save_stride"] = c.save_stride;
  doc["ic_scale"] = c.ic_scale;
  doc["noise_bound"] = c.noise_bound;
  doc["feed"] = c.feed == FrameFeed::ZeroOrderHold ? "zero_order_hold" : "on_arrival";
  doc["unet"] = {{"channels", c.channels}};
  doc["gammas"] = c.gammas;
  return doc.dump(2) + "\n";
}

}  // namespace spinn
