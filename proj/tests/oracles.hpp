#pragma once

// Literal reference implementations used as test oracles. They deliberately
// share no code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ad/parameters.hpp"
#include "ad/tensor.hpp"
#include "common/vec3.hpp"

namespace oracle {

using cd::Index;
using cd::Vec3;

inline std::vector<Index> knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k) {
  std::vector<std::pair<double, Index>> all;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = pts[i].x - q.x, dy = pts[i].y - q.y, dz = pts[i].z - q.z;
    all.emplace_back(dx * dx + dy * dy + dz * dz, static_cast<Index>(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<Index> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[std::min(i, all.size() - 1)].second);
  return out;
}

// Row-major dense matrix as nested vectors.
using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const cd::ad::Tensor& t) {
  Mat m(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m[i][j] = t.at(i, j);
  return m;
}

// y = W x + b for one vector.
inline std::vector<double> affine(const Mat& w, const std::vector<double>& b,
                                  const std::vector<double>& x) {
  std::vector<double> y(w.size());
  for (std::size_t o = 0; o < w.size(); ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < x.size(); ++i) s += w[o][i] * x[i];
    y[o] = s;
  }
  return y;
}

inline std::vector<double> relu(std::vector<double> v) {
  for (double& x : v) x = std::max(0.0, x);
  return v;
}

struct Affine {
  Mat w;
  std::vector<double> b;
  std::vector<double> operator()(const std::vector<double>& x) const { return affine(w, b, x); }
};

struct Mlp2 {
  Affine first, second;
  std::vector<double> operator()(const std::vector<double>& x) const {
    return second(relu(first(x)));
  }
};

inline Affine affine_from(const cd::ad::ParameterStore& store, const std::string& weight,
                          const std::string& bias) {
  Affine a;
  a.w = to_mat(store.get(weight).value);
  const auto b = store.get(bias).value.values();
  a.b.assign(b.begin(), b.end());
  return a;
}

// Dynamic graph: self first, then the others by (squared distance, index).
inline std::vector<std::vector<Index>> feature_knn(const Mat& x, std::size_t k) {
  std::vector<std::vector<Index>> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<std::pair<double, Index>> cand;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j == i) continue;
      double d = 0;
      for (std::size_t c = 0; c < x[i].size(); ++c) d += (x[i][c] - x[j][c]) * (x[i][c] - x[j][c]);
      cand.emplace_back(d, static_cast<Index>(j));
    }
    std::sort(cand.begin(), cand.end());
    out[i].push_back(static_cast<Index>(i));
    for (std::size_t t = 0; out[i].size() < k; ++t) {
      out[i].push_back(cand.empty() ? static_cast<Index>(i) : cand[std::min(t, cand.size() - 1)].second);
    }
  }
  return out;
}

struct AttentionWeights {
  Affine query, key, value;
  Mlp2 mapping, position;
};

// Vector attention evaluated one query, one neighbor and one channel at a time.
inline Mat attention_layer(const AttentionWeights& p, const Mat& qf, const std::vector<Vec3>& qc,
                           const Mat& sf, const std::vector<Vec3>& sc,
                           const std::vector<std::vector<Index>>& nbrs) {
  Mat out = qf;
  for (std::size_t i = 0; i < qf.size(); ++i) {
    const std::vector<double> phi = p.query(qf[i]);
    const std::size_t k = nbrs[i].size();
    const std::size_t channels = qf[i].size();
    Mat logits(k), values(k);
    for (std::size_t t = 0; t < k; ++t) {
      const Index j = nbrs[i][t];
      const Vec3 d{qc[i].x - sc[j].x, qc[i].y - sc[j].y, qc[i].z - sc[j].z};
      const std::vector<double> sigma = p.position({d.x, d.y, d.z});
      const std::vector<double> omega = p.key(sf[j]);
      const std::vector<double> alpha = p.value(sf[j]);
      std::vector<double> rel(channels);
      for (std::size_t c = 0; c < channels; ++c) rel[c] = phi[c] - omega[c] + sigma[c];
      logits[t] = p.mapping(rel);
      values[t].resize(channels);
      for (std::size_t c = 0; c < channels; ++c) values[t][c] = alpha[c] + sigma[c];
    }
    for (std::size_t c = 0; c < channels; ++c) {
      double mx = -INFINITY;
      for (std::size_t t = 0; t < k; ++t) mx = std::max(mx, logits[t][c]);
      std::vector<double> w(k);
      double z = 0;
      for (std::size_t t = 0; t < k; ++t) z += (w[t] = std::exp(logits[t][c] - mx));
      double l1 = 0;
      for (std::size_t t = 0; t < k; ++t) l1 += std::abs(w[t] /= z);
      double y = 0;
      for (std::size_t t = 0; t < k; ++t) y += (w[t] / l1) * values[t][c];
      out[i][c] += y;
    }
  }
  return out;
}

// Edge convolution: max over neighbors of relu(W [x_i, x_j - x_i] + b).
inline Mat edge_conv(const Affine& edge, const Mat& centers, const Mat& source,
                     const std::vector<std::vector<Index>>& nbrs) {
  Mat out(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    std::vector<double> best(edge.w.size(), -INFINITY);
    for (Index j : nbrs[i]) {
      std::vector<double> in = centers[i];
      for (std::size_t c = 0; c < centers[i].size(); ++c) in.push_back(source[j][c] - centers[i][c]);
      const std::vector<double> h = relu(edge(in));
      for (std::size_t o = 0; o < h.size(); ++o) best[o] = std::max(best[o], h[o]);
    }
    out[i] = best;
  }
  return out;
}

inline Mat from_points(const std::vector<Vec3>& pts) {
  Mat m;
  for (const auto& p : pts) m.push_back({p.x, p.y, p.z});
  return m;
}

}  // namespace oracle
