// Copyright 2026 The qrng-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qrng/coincidence.hpp"

#include <algorithm>
#include <limits>

#include "qrng/error.hpp"

namespace qrng {

void CoincidenceConfig::validate() const {
  if (window_ps < 1) {
    throw Error(ErrorKind::kConfig, "coincidence window must be at least 1 ps");
  }
}

CoincidenceMatcher::CoincidenceMatcher(CoincidenceConfig config) : config_(config) {
  config_.validate();
}

std::vector<std::array<std::size_t, 2>> CoincidenceMatcher::match_indices(
    std::span<const Picoseconds> a, std::span<const Picoseconds> b) {
  std::vector<std::array<std::size_t, 2>> out;
  match(a, b, [&](std::size_t ia, std::size_t ib) { out.push_back({ia, ib}); });
  return out;
}

void CoincidenceMatcher::solve_cluster(std::vector<std::array<std::size_t, 2>>& out) {
  if (cluster_a_.empty() || cluster_b_.empty()) {
    return;
  }
  if (cluster_a_.size() + cluster_b_.size() > kExactClusterLimit) {
    solve_greedy(out);
  } else {
    solve_exact(out);
  }
  // Chronological order of the earlier tag; ties by index in a.
  std::sort(out.begin(), out.end(), [&](const auto& x, const auto& y) {
    const auto& ax = cluster_a_[x[0]];
    const auto& bx = cluster_b_[x[1]];
    const auto& ay = cluster_a_[y[0]];
    const auto& by = cluster_b_[y[1]];
    const Picoseconds tx = std::min(ax.time, bx.time);
    const Picoseconds ty = std::min(ay.time, by.time);
    return tx != ty ? tx < ty : ax.index < ay.index;
  });
  for (auto& m : out) {
    m = {cluster_a_[m[0]].index, cluster_b_[m[1]].index};
  }
}

// Successive shortest augmenting paths: each round adds the cheapest
// augmenting path, so the final matching is maximum and, among maximum
// matchings, of minimum total |delta|. Cluster-local indices in `out`.
void CoincidenceMatcher::solve_exact(std::vector<std::array<std::size_t, 2>>& out) {
  const std::size_t na = cluster_a_.size();
  const std::size_t nb = cluster_b_.size();
  const Picoseconds tau = config_.window_ps;
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

  auto cost = [&](std::size_t i, std::size_t j) -> std::int64_t {
    const Picoseconds ta = cluster_a_[i].time;
    const Picoseconds tb = cluster_b_[j].time;
    const Picoseconds d = ta > tb ? ta - tb : tb - ta;
    return d <= tau ? static_cast<std::int64_t>(d) : -1;
  };

  std::vector<int> match_a(na, -1);
  std::vector<int> match_b(nb, -1);
  std::vector<std::int64_t> dist_a(na);
  std::vector<std::int64_t> dist_b(nb);
  std::vector<int> parent_b(nb);  // a-node that reached b

  while (true) {
    for (std::size_t i = 0; i < na; ++i) {
      dist_a[i] = match_a[i] < 0 ? 0 : kInf;
    }
    std::fill(dist_b.begin(), dist_b.end(), kInf);
    std::fill(parent_b.begin(), parent_b.end(), -1);
    // Bellman-Ford on the residual graph: a -> b over free edges (+cost),
    // b -> a over matched edges (-cost).
    for (std::size_t round = 0; round < na + nb; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < na; ++i) {
        if (dist_a[i] >= kInf) {
          continue;
        }
        for (std::size_t j = 0; j < nb; ++j) {
          if (match_a[i] == static_cast<int>(j)) {
            continue;
          }
          const std::int64_t c = cost(i, j);
          if (c < 0) {
            continue;
          }
          if (dist_a[i] + c < dist_b[j]) {
            dist_b[j] = dist_a[i] + c;
            parent_b[j] = static_cast<int>(i);
            changed = true;
          }
        }
      }
      for (std::size_t j = 0; j < nb; ++j) {
        const int i = match_b[j];
        if (i < 0 || dist_b[j] >= kInf) {
          continue;
        }
        const std::int64_t via = dist_b[j] - cost(static_cast<std::size_t>(i), j);
        if (via < dist_a[static_cast<std::size_t>(i)]) {
          dist_a[static_cast<std::size_t>(i)] = via;
          changed = true;
        }
      }
      if (!changed) {
        break;
      }
    }
    int best = -1;
    for (std::size_t j = 0; j < nb; ++j) {
      if (match_b[j] < 0 && dist_b[j] < kInf &&
          (best < 0 || dist_b[j] < dist_b[static_cast<std::size_t>(best)])) {
        best = static_cast<int>(j);
      }
    }
    if (best < 0) {
      break;
    }
    // Walk the path back, flipping matched/free edges.
    int j = best;
    while (j >= 0) {
      const int i = parent_b[static_cast<std::size_t>(j)];
      const int prev_j = match_a[static_cast<std::size_t>(i)];
      match_a[static_cast<std::size_t>(i)] = j;
      match_b[static_cast<std::size_t>(j)] = i;
      j = prev_j;
    }
  }
  for (std::size_t i = 0; i < na; ++i) {
    if (match_a[i] >= 0) {
      out.push_back({i, static_cast<std::size_t>(match_a[i])});
    }
  }
}

void CoincidenceMatcher::solve_greedy(std::vector<std::array<std::size_t, 2>>& out) {
  const Picoseconds tau = config_.window_ps;
  std::vector<bool> used_b(cluster_b_.size(), false);
  std::size_t lo = 0;
  for (std::size_t i = 0; i < cluster_a_.size(); ++i) {
    const Picoseconds ta = cluster_a_[i].time;
    while (lo < cluster_b_.size() && cluster_b_[lo].time + tau < ta) {
      ++lo;
    }
    int best = -1;
    Picoseconds best_d = 0;
    for (std::size_t j = lo; j < cluster_b_.size() && cluster_b_[j].time <= ta + tau; ++j) {
      if (used_b[j]) {
        continue;
      }
      const Picoseconds tb = cluster_b_[j].time;
      const Picoseconds d = ta > tb ? ta - tb : tb - ta;
      if (best < 0 || d < best_d) {
        best = static_cast<int>(j);
        best_d = d;
      }
    }
    if (best >= 0) {
      used_b[static_cast<std::size_t>(best)] = true;
      out.push_back({i, static_cast<std::size_t>(best)});
    }
  }
}

std::vector<CoincidenceEvent> find_coincidences(std::span<const Picoseconds> a, Channel channel_a,
                                                std::span<const Picoseconds> b, Channel channel_b,
                                                const CoincidenceConfig& config) {
  CoincidenceMatcher matcher(config);
  std::vector<CoincidenceEvent> out;
  matcher.match(a, b, [&](std::size_t ia, std::size_t ib) {
    out.push_back(CoincidenceEvent{std::min(a[ia], b[ib]), channel_a, channel_b,
                                   static_cast<std::int64_t>(b[ib]) -
                                       static_cast<std::int64_t>(a[ia])});
  });
  return out;
}

std::vector<CoincidenceEvent> find_coincidences(const TagStream& a, const TagStream& b,
                                                const CoincidenceConfig& config) {
  std::vector<Picoseconds> ta(a.size());
  std::vector<Picoseconds> tb(b.size());
  std::transform(a.tags().begin(), a.tags().end(), ta.begin(),
                 [](const TimeTag& t) { return t.timestamp; });
  std::transform(b.tags().begin(), b.tags().end(), tb.begin(),
                 [](const TimeTag& t) { return t.timestamp; });
  CoincidenceMatcher matcher(config);
  std::vector<CoincidenceEvent> out;
  matcher.match(ta, tb, [&](std::size_t ia, std::size_t ib) {
    out.push_back(CoincidenceEvent{std::min(ta[ia], tb[ib]), a.tags()[ia].channel,
                                   b.tags()[ib].channel,
                                   static_cast<std::int64_t>(tb[ib]) -
                                       static_cast<std::int64_t>(ta[ia])});
  });
  return out;
}

CountMatrix count_matrix(const TagStream& merged, const CoincidenceConfig& config) {
  std::array<std::vector<Picoseconds>, kChannelCount> times;
  for (const TimeTag& t : merged.tags()) {
    times[index_of(t.channel)].push_back(t.timestamp);
  }
  CountMatrix m{};
  CoincidenceMatcher matcher(config);
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    for (std::size_t j = i + 1; j < kChannelCount; ++j) {
      std::uint64_t n = 0;
      matcher.match(times[i], times[j], [&](std::size_t, std::size_t) { ++n; });
      m[i][j] = n;
      m[j][i] = n;
    }
  }
  return m;
}

double accidental_rate(double rate_a_hz, double rate_b_hz, const CoincidenceConfig& config) {
  return 2.0 * config.window_s() * rate_a_hz * rate_b_hz;
}

std::vector<RawBitRecord> assign_bits(std::span<const CoincidenceEvent> coincidences) {
  std::vector<RawBitRecord> out;
  out.reserve(coincidences.size());
  auto is = [](const CoincidenceEvent& e, Channel x, Channel y) {
    return (e.first == x && e.second == y) || (e.first == y && e.second == x);
  };
  for (const CoincidenceEvent& e : coincidences) {
    if (is(e, Channel::kD1, Channel::kU2)) {
      out.push_back(RawBitRecord{e.time, 0, {Channel::kD1, Channel::kU2}});
    } else if (is(e, Channel::kD2, Channel::kU1)) {
      out.push_back(RawBitRecord{e.time, 1, {Channel::kD2, Channel::kU1}});
    }
  }
  auto before = [](const RawBitRecord& x, const RawBitRecord& y) {
    return x.time != y.time ? x.time < y.time : x.bit < y.bit;
  };
  if (!std::is_sorted(out.begin(), out.end(), before)) {
    std::stable_sort(out.begin(), out.end(), before);
  }
  return out;
}

}  // namespace qrng
