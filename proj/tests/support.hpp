#pragma once

// Independent reference computations used as test oracles. Nothing here
// calls into the library's numerics; only plain data types are shared.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "msgrpo/frozen_lake.hpp"

namespace oracle {

using LD = long double;

/// softmax in extended precision.
inline std::vector<LD> softmax(const std::vector<LD>& logits) {
  LD m = logits[0];
  for (LD x : logits) m = std::max(m, x);
  LD z = 0;
  for (LD x : logits) z += std::exp(x - m);
  std::vector<LD> p;
  for (LD x : logits) p.push_back(std::exp(x - m) / z);
  return p;
}

/// Breadth-first search over non-hole cells; returns the move sequence from
/// start to goal (empty if unreachable or start == goal).
inline bool bfs_path(const msgrpo::LakeMap& map, std::vector<msgrpo::Direction>* path = nullptr) {
  using msgrpo::GridPos;
  const int n = map.size();
  GridPos start{-1, -1}, goal{-1, -1};
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      if (map.at({r, c}) == msgrpo::LakeCell::Start) start = {r, c};
      if (map.at({r, c}) == msgrpo::LakeCell::Goal) goal = {r, c};
    }
  std::vector<int> from(static_cast<std::size_t>(n * n), -2);
  std::vector<int> via(static_cast<std::size_t>(n * n), -1);
  std::queue<GridPos> q;
  q.push(start);
  from[static_cast<std::size_t>(start.row * n + start.col)] = -1;
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  while (!q.empty()) {
    GridPos p = q.front();
    q.pop();
    if (p.row == goal.row && p.col == goal.col) break;
    for (int d = 0; d < 4; ++d) {
      GridPos nb{p.row + dr[d], p.col + dc[d]};
      if (nb.row < 0 || nb.col < 0 || nb.row >= n || nb.col >= n) continue;
      if (map.at(nb) == msgrpo::LakeCell::Hole) continue;
      auto idx = static_cast<std::size_t>(nb.row * n + nb.col);
      if (from[idx] != -2) continue;
      from[idx] = p.row * n + p.col;
      via[idx] = d;
      q.push(nb);
    }
  }
  const auto g = static_cast<std::size_t>(goal.row * n + goal.col);
  if (from[g] == -2) return false;
  if (path) {
    path->clear();
    for (int i = static_cast<int>(g); from[static_cast<std::size_t>(i)] >= 0; i = from[static_cast<std::size_t>(i)])
      path->insert(path->begin(), static_cast<msgrpo::Direction>(via[static_cast<std::size_t>(i)]));
  }
  return true;
}

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<LD> solve(std::vector<std::vector<LD>> a, std::vector<LD> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const LD f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

/// Probability that a uniformly random walker on a not-slippery lake reaches
/// the goal before a hole, with no step limit: absorbing Markov chain.
inline LD random_walk_success(const msgrpo::LakeMap& map) {
  const int n = map.size();
  const int N = n * n;
  std::vector<std::vector<LD>> a(static_cast<std::size_t>(N), std::vector<LD>(static_cast<std::size_t>(N), 0));
  std::vector<LD> b(static_cast<std::size_t>(N), 0);
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const auto i = static_cast<std::size_t>(r * n + c);
      a[i][i] = 1;
      const auto cell = map.at({r, c});
      if (cell == msgrpo::LakeCell::Goal) {
        b[i] = 1;
        continue;
      }
      if (cell == msgrpo::LakeCell::Hole) continue;
      for (int d = 0; d < 4; ++d) {
        int rr = r + dr[d], cc = c + dc[d];
        if (rr < 0 || cc < 0 || rr >= n || cc >= n) rr = r, cc = c;
        a[i][static_cast<std::size_t>(rr * n + cc)] -= 0.25L;
      }
    }
  const auto x = solve(a, b);
  const auto s = map.start();
  return x[static_cast<std::size_t>(s.row * n + s.col)];
}

/// Same chain truncated to `cap` steps (episodes stop at the step cap).
inline LD random_walk_success_within(const msgrpo::LakeMap& map, int cap) {
  const int n = map.size();
  std::vector<LD> dist(static_cast<std::size_t>(n * n), 0);
  const auto s = map.start();
  dist[static_cast<std::size_t>(s.row * n + s.col)] = 1;
  LD success = 0;
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int t = 0; t < cap; ++t) {
    std::vector<LD> next(dist.size(), 0);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const LD m = dist[static_cast<std::size_t>(r * n + c)];
        if (m == 0) continue;
        for (int d = 0; d < 4; ++d) {
          int rr = r + dr[d], cc = c + dc[d];
          if (rr < 0 || cc < 0 || rr >= n || cc >= n) rr = r, cc = c;
          const auto cell = map.at({rr, cc});
          if (cell == msgrpo::LakeCell::Goal) success += m / 4;
          else if (cell != msgrpo::LakeCell::Hole) next[static_cast<std::size_t>(rr * n + cc)] += m / 4;
        }
      }
    dist = std::move(next);
  }
  return success;
}

/// Upper tail of the chi-square distribution via the regularized gamma
/// function (series / continued fraction).
inline double chi_square_p(double x, int dof) {
  const double a = dof / 2.0;
  const double z = x / 2.0;
  if (z <= 0) return 1.0;
  const double lg = std::lgamma(a);
  if (z < a + 1) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 1000; ++n) {
      term *= z / (a + n);
      sum += term;
      if (term < sum * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-z + a * std::log(z) - lg);
  }
  double b = z + 1 - a, c = 1e300, d = 1 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1) < 1e-15) break;
  }
  return std::exp(-z + a * std::log(z) - lg) * h;
}

inline double chi_square_stat(const std::vector<double>& counts, const std::vector<double>& probs) {
  double total = 0;
  for (double c : counts) total += c;
  double x = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = total * probs[i];
    x += (counts[i] - e) * (counts[i] - e) / e;
  }
  return x;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("msgrpo-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}


/// The token model evaluated from scratch in extended precision:
/// features = [signed distinct-n-gram hash block | previous token one-hot |
/// position bucket one-hot], logits = W * features.
struct TokenModel {
  int order, dim, buckets, horizon;
  double scale;
  std::size_t vocab;
  int end_id;

  static std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
  }

  std::vector<LD> features(const std::string& prompt, const std::vector<int>& prefix) const {
    std::vector<LD> phi(static_cast<std::size_t>(dim) + vocab + static_cast<std::size_t>(buckets), 0);
    std::set<std::string> grams;
    for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= prompt.size(); ++i)
      grams.insert(prompt.substr(i, static_cast<std::size_t>(order)));
    for (const auto& g : grams) {
      const std::uint64_t h = fnv1a(g);
      phi[h % static_cast<std::uint64_t>(dim)] += ((h >> 40) & 1) ? -1 : 1;
    }
    LD norm = 0;
    for (int i = 0; i < dim; ++i) norm += phi[static_cast<std::size_t>(i)] * phi[static_cast<std::size_t>(i)];
    norm = std::sqrt(norm);
    if (norm > 0)
      for (int i = 0; i < dim; ++i) phi[static_cast<std::size_t>(i)] *= scale / norm;
    const int prev = prefix.empty() ? end_id : prefix.back();
    phi[static_cast<std::size_t>(dim + prev)] = 1;
    const std::size_t pos = prefix.size();
    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(buckets) - 1,
                                                pos * static_cast<std::size_t>(buckets) / static_cast<std::size_t>(horizon));
    phi[static_cast<std::size_t>(dim) + vocab + b] = 1;
    return phi;
  }

  template <typename Matrix>
  std::vector<LD> probs(const Matrix& w, const std::string& prompt, const std::vector<int>& prefix) const {
    const auto phi = features(prompt, prefix);
    std::vector<LD> logits(vocab, 0);
    for (std::size_t r = 0; r < vocab; ++r)
      for (std::size_t c = 0; c < phi.size(); ++c)
        logits[r] += static_cast<LD>(w(static_cast<long>(r), static_cast<long>(c))) * phi[c];
    return softmax(logits);
  }

  template <typename Matrix>
  LD logprob(const Matrix& w, const std::string& prompt, const std::vector<int>& completion) const {
    LD total = 0;
    std::vector<int> prefix;
    for (int y : completion) {
      total += std::log(probs(w, prompt, prefix)[static_cast<std::size_t>(y)]);
      prefix.push_back(y);
    }
    return total;
  }
};

}  // namespace oracle
