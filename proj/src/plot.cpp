#include "spinn/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "spinn/error.hpp"

namespace spinn {

namespace {

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string error_curves_svg(const std::vector<LabelledCurve>& curves, int component) {
  if (component != 1 && component != 2) throw InvalidArgument("component must be 1 or 2");
  if (curves.empty()) throw InvalidArgument("nothing to plot");
  double t_lo = INFINITY, t_hi = -INFINITY, e_hi = 0.0;
  for (const auto& c : curves) {
    const auto& e = component == 1 ? c.curve.eps1 : c.curve.eps2;
    if (c.curve.t.empty() || e.size() != c.curve.t.size()) {
      throw ShapeMismatch("curve '" + c.label + "' is empty or ragged");
    }
    t_lo = std::min(t_lo, c.curve.t.front());
    t_hi = std::max(t_hi, c.curve.t.back());
    for (double v : e) {
      if (std::isfinite(v)) e_hi = std::max(e_hi, v);
    }
  }
  if (t_hi <= t_lo) t_hi = t_lo + 1.0;
  if (e_hi <= 0.0) e_hi = 1.0;
  e_hi *= 1.05;

  const double W = 720, H = 420, L = 70, R = 170, T = 20, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  auto X = [&](double t) { return L + (t - t_lo) / (t_hi - t_lo) * pw; };
  auto Y = [&](double e) { return T + ph - std::clamp(e / e_hi, 0.0, 1.0) * ph; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" +
                  fmt(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(pw) + "\" height=\"" +
       fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double e = e_hi * i / 5.0, t = t_lo + (t_hi - t_lo) * i / 5.0;
    s += "<text x=\"" + fmt(L - 6) + "\" y=\"" + fmt(Y(e) + 4) + "\" text-anchor=\"end\">" +
         fmt(e) + "</text>\n";
    s += "<text x=\"" + fmt(X(t)) + "\" y=\"" + fmt(T + ph + 18) + "\" text-anchor=\"middle\">" +
         fmt(t) + "</text>\n";
  }
  s += "<text x=\"" + fmt(L + pw / 2) + "\" y=\"" + fmt(H - 10) + "\" text-anchor=\"middle\">t</text>\n";
  s += "<text x=\"16\" y=\"" + fmt(T + ph / 2) + "\" transform=\"rotate(-90 16 " + fmt(T + ph / 2) +
       ")\" text-anchor=\"middle\">eps_" + std::to_string(component) + "</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const auto& e = component == 1 ? c.curve.eps1 : c.curve.eps2;
    const char* colour = kPalette[k % kPalette.size()];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!std::isfinite(e[i])) continue;
      s += fmt(X(c.curve.t[i])) + "," + fmt(Y(e[i])) + " ";
    }
    s += "\"/>\n";
    const double ly = T + 16 + 18.0 * static_cast<double>(k);
    s += "<line x1=\"" + fmt(W - R + 12) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(W - R + 36) +
         "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt(W - R + 42) + "\" y=\"" + fmt(ly) + "\">" + escape(c.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::uint8_t> heatmap_triptych_ppm(const VectorField& truth, const LowResFrame& low,
                                               const VectorField& prediction, int component,
                                               int scale) {
  if (component != 1 && component != 2) throw InvalidArgument("component must be 1 or 2");
  if (scale < 1) throw InvalidArgument("scale must be >= 1");
  require_same_grid(truth.grid(), prediction.grid(), "heatmap_triptych_ppm");
  const Grid2D& g = truth.grid();
  const VectorField lifted = lift(low, g, partition_for(g, low));
  const std::array<const ScalarField*, 3> panels = {&truth.component(component),
                                                    &lifted.component(component),
                                                    &prediction.component(component)};
  double vmax = 0.0;
  for (const auto* p : panels) vmax = std::max(vmax, max_abs(*p));
  if (vmax == 0.0) vmax = 1.0;

  const int n = g.n(), side = n * scale, gap = 4;
  const int width = 3 * side + 2 * gap, height = side;
  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> img(header.begin(), header.end());
  const std::size_t base = img.size();
  img.resize(base + static_cast<std::size_t>(width) * height * 3, 255);

  // Blue for negative, white at zero, red for positive.
  auto colour = [](double v) -> std::array<std::uint8_t, 3> {
    const double a = std::clamp(std::abs(v), 0.0, 1.0);
    const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - a)));
    if (v >= 0.0) return {255, fade, fade};
    return {fade, fade, 255};
  };

  for (int p = 0; p < 3; ++p) {
    const ScalarField& f = *panels[static_cast<std::size_t>(p)];
    const int x0 = p * (side + gap);
    for (int py = 0; py < side; ++py) {
      const int j = n - 1 - py / scale;  // x2 grows upwards
      for (int px = 0; px < side; ++px) {
        const auto c = colour(f(px / scale, j) / vmax);
        const std::size_t at = base + (static_cast<std::size_t>(py) * width + x0 + px) * 3;
        img[at] = c[0];
        img[at + 1] = c[1];
        img[at + 2] = c[2];
      }
    }
  }
  return img;
}

}  // namespace spinn
