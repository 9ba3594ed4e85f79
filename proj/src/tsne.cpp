#include "s2s/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "s2s/common.hpp"

namespace s2s {
namespace {

// Shannon entropy and row probabilities for one point at a given precision.
double row_entropy(const std::vector<double>& d2, int i, double beta, std::vector<double>& p) {
  const int n = static_cast<int>(p.size());
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    p[j] = (j == i) ? 0.0 : std::exp(-beta * d2[static_cast<size_t>(i) * n + j]);
    sum += p[j];
  }
  if (sum <= 0.0) {
    std::fill(p.begin(), p.end(), 0.0);
    return 0.0;
  }
  double h = 0.0;
  for (int j = 0; j < n; ++j) {
    if (p[j] > 0.0) h += beta * d2[static_cast<size_t>(i) * n + j] * p[j];
    p[j] /= sum;
  }
  return h / sum + std::log(sum);
}

}  // namespace

TsneResult tsne2d(const std::vector<std::vector<double>>& rows, uint64_t seed) {
  const int n = static_cast<int>(rows.size());
  if (n < 2) throw ProtocolError("tsne2d needs at least two rows");
  const size_t dim = rows[0].size();
  if (dim == 0) throw DimensionError("tsne2d: empty feature rows");
  for (const auto& r : rows) {
    if (r.size() != dim) throw DimensionError("tsne2d: ragged feature rows");
  }

  TsneResult result;
  std::vector<std::vector<double>> x = rows;

  // Degenerate clouds (all points coincident) have no neighborhood structure;
  // perturb slightly so the affinity search can proceed.
  bool identical = true;
  for (int i = 1; i < n && identical; ++i) {
    identical = std::equal(x[i].begin(), x[i].end(), x[0].begin());
  }
  if (identical) {
    Rng jrng(splitmix64(seed ^ fnv1a64("tsne-jitter")));
    for (auto& r : x) {
      for (auto& v : r) v += 1e-6 * jrng.normal();
    }
    result.jittered = true;
    std::fprintf(stderr, "warning: identical feature rows, jittering before embedding\n");
  }

  std::vector<double> d2(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (size_t k = 0; k < dim; ++k) {
        const double d = x[i][k] - x[j][k];
        s += d * d;
      }
      d2[static_cast<size_t>(i) * n + j] = s;
      d2[static_cast<size_t>(j) * n + i] = s;
    }
  }

  // Per-point precision search to hit the target perplexity.
  const double perplexity = std::min(30.0, (n - 1) / 3.0);
  const double target_h = std::log(std::max(perplexity, 1e-3));
  std::vector<double> p(static_cast<size_t>(n) * n, 0.0);
  std::vector<double> prow(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double h = row_entropy(d2, i, beta, prow);
    for (int it = 0; it < 50 && std::abs(h - target_h) > 1e-5; ++it) {
      if (h > target_h) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
      h = row_entropy(d2, i, beta, prow);
    }
    for (int j = 0; j < n; ++j) p[static_cast<size_t>(i) * n + j] = prow[j];
  }

  // Symmetrize and apply early exaggeration.
  const double exaggeration = 12.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v =
          (p[static_cast<size_t>(i) * n + j] + p[static_cast<size_t>(j) * n + i]) / (2.0 * n);
      const double pe = std::max(v, 1e-12) * exaggeration;
      p[static_cast<size_t>(i) * n + j] = pe;
      p[static_cast<size_t>(j) * n + i] = pe;
    }
    p[static_cast<size_t>(i) * n + i] = 0.0;
  }

  Rng rng(splitmix64(seed ^ fnv1a64("tsne-init")));
  std::vector<std::array<double, 2>> y(n), inc(n, {0.0, 0.0}), gains(n, {1.0, 1.0});
  for (auto& yi : y) {
    yi[0] = 1e-4 * rng.normal();
    yi[1] = 1e-4 * rng.normal();
  }

  const int iterations = 1000;
  const int exaggeration_until = 250;
  const double lr = 200.0;
  std::vector<double> num(static_cast<size_t>(n) * n, 0.0);
  std::vector<std::array<double, 2>> grad(n);
  for (int it = 0; it < iterations; ++it) {
    if (it == exaggeration_until) {
      for (auto& v : p) v /= exaggeration;
    }
    const double momentum = it < exaggeration_until ? 0.5 : 0.8;

    double z = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double dy0 = y[i][0] - y[j][0];
        const double dy1 = y[i][1] - y[j][1];
        const double q = 1.0 / (1.0 + dy0 * dy0 + dy1 * dy1);
        num[static_cast<size_t>(i) * n + j] = q;
        num[static_cast<size_t>(j) * n + i] = q;
        z += 2.0 * q;
      }
    }
    z = std::max(z, 1e-12);

    for (int i = 0; i < n; ++i) {
      grad[i] = {0.0, 0.0};
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double q = num[static_cast<size_t>(i) * n + j];
        const double mult = 4.0 * (p[static_cast<size_t>(i) * n + j] - q / z) * q;
        grad[i][0] += mult * (y[i][0] - y[j][0]);
        grad[i][1] += mult * (y[i][1] - y[j][1]);
      }
    }

    double mean0 = 0.0, mean1 = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 2; ++k) {
        const bool same_sign = (grad[i][k] > 0.0) == (inc[i][k] > 0.0);
        gains[i][k] = same_sign ? std::max(gains[i][k] * 0.8, 0.01) : gains[i][k] + 0.2;
        inc[i][k] = momentum * inc[i][k] - lr * gains[i][k] * grad[i][k];
        y[i][k] += inc[i][k];
      }
      mean0 += y[i][0];
      mean1 += y[i][1];
    }
    mean0 /= n;
    mean1 /= n;
    for (int i = 0; i < n; ++i) {
      y[i][0] -= mean0;
      y[i][1] -= mean1;
    }
  }

  result.coords = std::move(y);
  return result;
}

}  // namespace s2s
