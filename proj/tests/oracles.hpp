// Independent reference implementations used only by the tests. Nothing here
// calls into the library code paths it is used to check.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// Lanczos approximation (g = 7, n = 9).
inline double lanczos_gamma(double x) {
  static const double c[9] = {0.99999999999980993,  676.5203681218851,   -1259.1392167224028,
                              771.32342877765313,   -176.61502916214059, 12.507343278686905,
                              -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  const double pi = 3.14159265358979323846;
  if (x < 0.5) return pi / (std::sin(pi * x) * lanczos_gamma(1.0 - x));
  x -= 1.0;
  double a = c[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
  return std::sqrt(2 * pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

inline double levy_sigma(double beta) {
  const double pi = 3.14159265358979323846;
  const double num = lanczos_gamma(1 + beta) * std::sin(pi * beta / 2);
  const double den = lanczos_gamma((1 + beta) / 2) * beta * std::pow(2.0, (beta - 1) / 2);
  return std::pow(num / den, 1 / beta);
}

// Otsu by direct evaluation of the two-class weighted variance, two-pass
// class statistics for every t.
inline int otsu_brute_force(const std::vector<std::uint8_t>& pixels) {
  const double n = static_cast<double>(pixels.size());
  int best_t = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= 254; ++t) {
    double score = 0.0;
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<double> members;
      for (auto p : pixels)
        if ((p <= t) == (cls == 0)) members.push_back(p);
      if (members.empty()) continue;
      double mean = 0;
      for (double v : members) mean += v;
      mean /= members.size();
      double var = 0;
      for (double v : members) var += (v - mean) * (v - mean);
      var /= members.size();
      score += (members.size() / n) * var;
    }
    if (score < best) {
      best = score;
      best_t = t;
    }
  }
  return best_t;
}

// Otsu by maximising the between-class variance w0 w1 (mu0 - mu1)^2.
inline int otsu_between_class(const std::vector<std::uint8_t>& pixels) {
  std::vector<double> hist(256, 0.0);
  for (auto p : pixels) hist[p] += 1;
  const double n = static_cast<double>(pixels.size());
  int best_t = -1;
  double best = -1;
  for (int t = 0; t <= 254; ++t) {
    double w0 = 0, s0 = 0, w1 = 0, s1 = 0;
    for (int v = 0; v < 256; ++v) {
      if (v <= t) { w0 += hist[v]; s0 += v * hist[v]; }
      else { w1 += hist[v]; s1 += v * hist[v]; }
    }
    double between = 0;
    if (w0 > 0 && w1 > 0) {
      const double d = s0 / w0 - s1 / w1;
      between = (w0 / n) * (w1 / n) * d * d;
    }
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

// Naive nested-loop convolution. kernels[f][c][z][s] flattened as in the library.
inline std::vector<double> conv_naive(const std::vector<double>& in, int C, int H, int W,
                                      const std::vector<double>& kernels, const std::vector<double>& bias,
                                      int F, int K, int stride, int& OH, int& OW) {
  OH = (H - K) / stride + 1;
  OW = (W - K) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(F * OH * OW));
  for (int f = 0; f < F; ++f)
    for (int p = 0; p < OH; ++p)
      for (int w = 0; w < OW; ++w) {
        double acc = bias[f];
        for (int c = 0; c < C; ++c)
          for (int z = 0; z < K; ++z)
            for (int s = 0; s < K; ++s)
              acc += kernels[((f * C + c) * K + z) * K + s] * in[(c * H + p * stride + z) * W + w * stride + s];
        out[(f * OH + p) * OW + w] = acc;
      }
  return out;
}

inline std::vector<double> maxpool_naive(const std::vector<double>& in, int C, int H, int W, int& OH, int& OW) {
  OH = (H - 3) / 2 + 1;
  OW = (W - 3) / 2 + 1;
  std::vector<double> out(static_cast<std::size_t>(C * OH * OW), -std::numeric_limits<double>::infinity());
  for (int c = 0; c < C; ++c)
    for (int p = 0; p < OH; ++p)
      for (int w = 0; w < OW; ++w)
        for (int dy = 0; dy < 3; ++dy)
          for (int dx = 0; dx < 3; ++dx)
            out[(c * OH + p) * OW + w] =
                std::max(out[(c * OH + p) * OW + w], in[(c * H + 2 * p + dy) * W + 2 * w + dx]);
  return out;
}

// Holes = zero pixels not reachable from the border through 4-neighbours,
// found by repeated relaxation rather than a queue.
inline std::vector<int> fill_holes_relaxation(const std::vector<int>& mask, int rows, int cols) {
  std::vector<int> reach(mask.size(), 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (!mask[r * cols + c] && (r == 0 || c == 0 || r == rows - 1 || c == cols - 1)) reach[r * cols + c] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const int i = r * cols + c;
        if (mask[i] || reach[i]) continue;
        const bool adj = (r > 0 && reach[i - cols]) || (r + 1 < rows && reach[i + cols]) ||
                         (c > 0 && reach[i - 1]) || (c + 1 < cols && reach[i + 1]);
        if (adj) { reach[i] = 1; changed = true; }
      }
  }
  std::vector<int> out(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] || !reach[i];
  return out;
}

// Union-find 8-connected labelling. Returns, per pixel, the smallest flat
// index of its component (-1 for background).
inline std::vector<int> components_union_find(const std::vector<int>& mask, int rows, int cols) {
  std::vector<int> parent(mask.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!mask[r * cols + c]) continue;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nc < 0 || nr >= rows || nc >= cols || !mask[nr * cols + nc]) continue;
          unite(r * cols + c, nr * cols + nc);
        }
    }
  std::vector<int> root(mask.size(), -1);
  for (int i = 0; i < rows * cols; ++i)
    if (mask[i]) root[i] = find(i);
  return root;
}

// Canonical sequential HHO (in-place updates, J inside every dive).
inline double minimal_hho(int dim, int n, int iters, double lb, double ub, std::uint64_t seed,
                          double (*f)(const Eigen::VectorXd&)) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(0, 1);
  std::normal_distribution<double> N(0, 1);
  std::vector<Eigen::VectorXd> X(n);
  for (auto& x : X) {
    x.resize(dim);
    for (int k = 0; k < dim; ++k) x[k] = lb + U(gen) * (ub - lb);
  }
  auto clamp = [&](Eigen::VectorXd v) { return Eigen::VectorXd(v.cwiseMax(lb).cwiseMin(ub)); };
  const double beta = 1.5, sigma = levy_sigma(beta);
  auto levy = [&]() {
    Eigen::VectorXd s(dim);
    for (int k = 0; k < dim; ++k) s[k] = 0.01 * N(gen) * sigma / std::pow(std::abs(N(gen)), 1 / beta);
    return s;
  };
  Eigen::VectorXd rabbit = X[0];
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < iters; ++t) {
    for (auto& x : X) {
      x = clamp(x);
      const double fx = f(x);
      if (fx < best) { best = fx; rabbit = x; }
    }
    const double e1 = 2 * (1 - static_cast<double>(t) / iters);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (auto& x : X) mean += x;
    mean /= n;
    for (int i = 0; i < n; ++i) {
      const double E = e1 * (2 * U(gen) - 1);
      Eigen::VectorXd& x = X[i];
      if (std::abs(E) >= 1) {
        const double q = U(gen);
        if (q >= 0.5) {
          const Eigen::VectorXd& xr = X[static_cast<int>(U(gen) * n) % n];
          x = xr - U(gen) * (xr - 2 * U(gen) * x).cwiseAbs();
        } else {
          x = (rabbit - mean).array() - U(gen) * ((ub - lb) * U(gen) + lb);
        }
        continue;
      }
      const double r = U(gen), J = 2 * (1 - U(gen));
      if (r >= 0.5 && std::abs(E) >= 0.5) {
        x = (rabbit - x) - E * (J * rabbit - x).cwiseAbs();
      } else if (r >= 0.5) {
        x = rabbit - E * (rabbit - x).cwiseAbs();
      } else {
        const Eigen::VectorXd anchor = std::abs(E) >= 0.5 ? x : mean;
        Eigen::VectorXd y = clamp(rabbit - E * (J * rabbit - anchor).cwiseAbs());
        Eigen::VectorXd s(dim);
        for (int k = 0; k < dim; ++k) s[k] = U(gen);
        Eigen::VectorXd z = clamp(y + s.cwiseProduct(levy()));
        const double fx = f(clamp(x));
        if (f(y) < fx) x = y;
        else if (f(z) < fx) x = z;
      }
    }
  }
  for (auto& x : X) best = std::min(best, f(clamp(x)));
  return best;
}

// Canonical GWO with persistent leaders.
inline double minimal_gwo(int dim, int n, int iters, double lb, double ub, std::uint64_t seed,
                          double (*f)(const Eigen::VectorXd&)) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<Eigen::VectorXd> X(n);
  for (auto& x : X) {
    x.resize(dim);
    for (int k = 0; k < dim; ++k) x[k] = lb + U(gen) * (ub - lb);
  }
  Eigen::VectorXd L[3];
  double Ls[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  for (auto& l : L) l = X[0];
  for (int t = 0; t < iters; ++t) {
    for (auto& x : X) {
      x = x.cwiseMax(lb).cwiseMin(ub);
      const double fx = f(x);
      if (fx < Ls[0]) { L[2] = L[1]; Ls[2] = Ls[1]; L[1] = L[0]; Ls[1] = Ls[0]; L[0] = x; Ls[0] = fx; }
      else if (fx < Ls[1]) { L[2] = L[1]; Ls[2] = Ls[1]; L[1] = x; Ls[1] = fx; }
      else if (fx < Ls[2]) { L[2] = x; Ls[2] = fx; }
    }
    const double a = 2 * (1 - static_cast<double>(t) / iters);
    for (auto& x : X) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
      for (auto& l : L) {
        for (int k = 0; k < dim; ++k) {
          const double A = 2 * a * U(gen) - a, C = 2 * U(gen);
          sum[k] += l[k] - A * std::abs(C * l[k] - x[k]);
        }
      }
      x = sum / 3;
    }
  }
  return Ls[0];
}

}  // namespace oracle
