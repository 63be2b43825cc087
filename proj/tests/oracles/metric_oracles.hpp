#pragma once

// Brute-force reference metrics. Every window is recomputed from scratch in double precision;
// nothing here is shared with the library.

#include <algorithm>
#include <cmath>
#include <vector>

#include "softaug/image.hpp"

namespace softaug::oracle {

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

inline Plane luma(const Image& img) {
  Plane p{img.width(), img.height(), {}};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.channels() == 1) {
        p.v.push_back(img.at(x, y, 0));
      } else {
        p.v.push_back(0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2));
      }
    }
  }
  return p;
}

struct WindowStats {
  double mx, my, vx, vy, cxy;
  bool x_const, y_const, equal;
};

inline WindowStats window(const Plane& a, const Plane& b, int x0, int y0, int ww, int wh) {
  const double n = static_cast<double>(ww) * wh;
  double sx = 0, sy = 0;
  for (int y = y0; y < y0 + wh; ++y)
    for (int x = x0; x < x0 + ww; ++x) {
      sx += a.at(x, y);
      sy += b.at(x, y);
    }
  const double mx = sx / n, my = sy / n;
  double vx = 0, vy = 0, c = 0;
  bool x_const = true, y_const = true, equal = true;
  for (int y = y0; y < y0 + wh; ++y)
    for (int x = x0; x < x0 + ww; ++x) {
      const double dx = a.at(x, y) - mx, dy = b.at(x, y) - my;
      vx += dx * dx;
      vy += dy * dy;
      c += dx * dy;
      x_const = x_const && a.at(x, y) == a.at(x0, y0);
      y_const = y_const && b.at(x, y) == b.at(x0, y0);
      equal = equal && a.at(x, y) == b.at(x, y);
    }
  return {mx, my, vx / n, vy / n, c / n, x_const, y_const, equal};
}

template <class F>
double window_mean(const Image& a, const Image& b, F score) {
  const Plane pa = luma(a), pb = luma(b);
  const int ww = std::min(8, pa.w), wh = std::min(8, pa.h);
  double total = 0;
  int count = 0;
  for (int y = 0; y + wh <= pa.h; ++y)
    for (int x = 0; x + ww <= pa.w; ++x) {
      total += score(window(pa, pb, x, y, ww, wh));
      ++count;
    }
  return total / count;
}

inline double ssim(const Image& a, const Image& b) {
  const double c1 = 6.5025, c2 = 58.5225;
  return window_mean(a, b, [&](const WindowStats& s) {
    return (2 * s.mx * s.my + c1) * (2 * s.cxy + c2) / ((s.mx * s.mx + s.my * s.my + c1) * (s.vx + s.vy + c2));
  });
}

inline double uiq(const Image& a, const Image& b) {
  return window_mean(a, b, [](const WindowStats& s) {
    if (s.equal) return 1.0;
    if (s.x_const && s.y_const) return s.mx == s.my ? 1.0 : 0.0;
    const double den = (s.vx + s.vy) * (s.mx * s.mx + s.my * s.my);
    if (den == 0) return 0.0;
    return 4 * s.cxy * s.mx * s.my / den;
  });
}

inline double correlation(const Plane& a, const Plane& b) {
  const WindowStats s = window(a, b, 0, 0, a.w, a.h);
  if (s.equal) return 1.0;
  if (s.x_const && s.y_const) return s.mx == s.my ? 1.0 : 0.0;
  if (s.x_const || s.y_const) return 0.0;
  return std::clamp(s.cxy / std::sqrt(s.vx * s.vy), -1.0, 1.0);
}

inline double ncc(const Image& a, const Image& b) { return correlation(luma(a), luma(b)); }

/// [0 1 0; 1 -4 1; 0 1 0] with edge replication.
inline Plane laplacian(const Plane& p) {
  auto px = [&](int x, int y) { return p.at(std::clamp(x, 0, p.w - 1), std::clamp(y, 0, p.h - 1)); };
  Plane out{p.w, p.h, std::vector<double>(p.v.size())};
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x)
      out.v[static_cast<std::size_t>(y) * p.w + x] =
          px(x, y - 1) + px(x - 1, y) + px(x + 1, y) + px(x, y + 1) - 4 * px(x, y);
  return out;
}

inline double scc(const Image& a, const Image& b) {
  const Plane la = laplacian(luma(a)), lb = laplacian(luma(b));
  return correlation(la, lb);
}

/// Pixels (all channels) where the two images agree.
inline std::size_t equal_pixels(const Image& a, const Image& b) {
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      bool same = true;
      for (int c = 0; c < a.channels(); ++c) same = same && a.at(x, y, c) == b.at(x, y, c);
      n += same;
    }
  return n;
}

inline Image inverted(const Image& img) {
  Image out = img;
  for (auto& v : out.data()) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

}  // namespace softaug::oracle
