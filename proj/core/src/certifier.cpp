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

#include "qrng/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qrng/error.hpp"

namespace qrng {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kAngleTolerance = 1e-6;

// Index of a CHSH combination: ((i * 2 + j) * 2 + perp1) * 2 + perp2.
constexpr std::size_t combo(std::size_t i, std::size_t j, std::size_t p1, std::size_t p2) {
  return ((i * 2 + j) * 2 + p1) * 2 + p2;
}

bool same_angle_mod_180(double x, double y) {
  double d = std::fmod(x - y, 180.0);
  if (d < 0) {
    d += 180.0;
  }
  return d < kAngleTolerance || 180.0 - d < kAngleTolerance;
}

// (setting index, perpendicular flag) of an analyzer angle, or -1.
std::pair<int, int> classify(double theta, double first, double second) {
  const double targets[2] = {first, second};
  for (int s = 0; s < 2; ++s) {
    for (int p = 0; p < 2; ++p) {
      if (same_angle_mod_180(theta, targets[s] + 90.0 * p)) {
        return {s, p};
      }
    }
  }
  return {-1, -1};
}

// Time spent in schedule entry idx during [0, t).
double exposure_until(const AnalyzerSchedule& schedule, std::size_t idx, Picoseconds t) {
  const Picoseconds dwell = schedule.dwell;
  const Picoseconds cycle = dwell * schedule.settings.size();
  const Picoseconds full = t / cycle;
  const Picoseconds rem = t % cycle;
  const Picoseconds offset = idx * dwell;
  const Picoseconds partial = rem > offset ? std::min(rem - offset, dwell) : 0;
  return static_cast<double>(full) * static_cast<double>(dwell) + static_cast<double>(partial);
}

std::string angle_key(double theta) {
  std::ostringstream os;
  os << "C2@" << theta;
  return os.str();
}

}  // namespace

AnalyzerSchedule chsh_schedule(const ChshAngles& angles, Picoseconds dwell) {
  AnalyzerSchedule schedule;
  schedule.dwell = dwell;
  schedule.settings.clear();
  for (double t1 : {angles.a, angles.a_prime}) {
    for (double t2 : {angles.b, angles.b_prime}) {
      for (double p1 : {0.0, 90.0}) {
        for (double p2 : {0.0, 90.0}) {
          schedule.settings.push_back(AnalyzerSetting{t1 + p1, t2 + p2});
        }
      }
    }
  }
  return schedule;
}

double correlation_E(const CorrelationCounts& c) {
  const double total = c.total();
  if (!(total > 0.0)) {
    throw Error(ErrorKind::kInsufficientData, "correlation needs a positive total count");
  }
  return std::clamp((c.n_tt + c.n_rr - c.n_tr - c.n_rt) / total, -1.0, 1.0);
}

double chsh_s(double e_ab, double e_ab_prime, double e_a_prime_b, double e_a_prime_b_prime) {
  return std::abs(e_ab - e_ab_prime + e_a_prime_b + e_a_prime_b_prime);
}

double g2_cross(std::uint64_t n_a, std::uint64_t n_b, std::uint64_t n_coinc, Picoseconds duration,
                const CoincidenceConfig& config) {
  if (n_a == 0 || n_b == 0) {
    throw Error(ErrorKind::kInsufficientData, "g2 needs non-zero singles on both channels");
  }
  const double window = 2.0 * static_cast<double>(config.window_ps);
  return static_cast<double>(n_coinc) * static_cast<double>(duration) /
         (static_cast<double>(n_a) * static_cast<double>(n_b) * window);
}

VisibilityFit visibility(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 8) {
    throw Error(ErrorKind::kInsufficientData, "visibility fit needs at least 8 angle samples");
  }
  double lo = samples.front().first;
  double hi = lo;
  double min_count = samples.front().second;
  double max_count = min_count;
  for (const auto& [theta, n] : samples) {
    lo = std::min(lo, theta);
    hi = std::max(hi, theta);
    min_count = std::min(min_count, n);
    max_count = std::max(max_count, n);
  }
  const double n = static_cast<double>(samples.size());
  if ((hi - lo) * n / (n - 1.0) < 180.0 - 1e-9) {
    throw Error(ErrorKind::kInsufficientData, "visibility samples must cover a 180-degree period");
  }

  // Normal equations for [1, cos 2t, sin 2t].
  double m[3][4] = {};
  for (const auto& [theta, count] : samples) {
    const double basis[3] = {1.0, std::cos(2 * theta * kDeg), std::sin(2 * theta * kDeg)};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        m[r][c] += basis[r] * basis[c];
      }
      m[r][3] += basis[r] * count;
    }
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) {
        pivot = r;
      }
    }
    if (std::abs(m[pivot][col]) < 1e-12 * n) {
      throw Error(ErrorKind::kFit, "singular visibility fit");
    }
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) {
        continue;
      }
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) {
        m[r][c] -= f * m[col][c];
      }
    }
  }
  const double a = m[0][3] / m[0][0];
  const double c = m[1][3] / m[1][1];
  const double s = m[2][3] / m[2][2];
  if (!(a > 0.0)) {
    throw Error(ErrorKind::kFit, "fitted fringe offset is not positive");
  }
  VisibilityFit fit;
  fit.offset = a;
  fit.amplitude = std::hypot(c, s);
  fit.phase_deg = std::atan2(s, c) / 2.0 / kDeg;
  fit.visibility = std::clamp(fit.amplitude / a, 0.0, 1.0);
  fit.raw_visibility =
      max_count + min_count > 0.0 ? (max_count - min_count) / (max_count + min_count) : 0.0;
  return fit;
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::kCertifiedBell: return "CERTIFIED_BELL";
    case Verdict::kCertifiedG2: return "CERTIFIED_G2";
    case Verdict::kUncertified: return "UNCERTIFIED";
  }
  return "UNCERTIFIED";
}

Verdict weaker(Verdict x, Verdict y) noexcept {
  return static_cast<std::uint8_t>(x) >= static_cast<std::uint8_t>(y) ? x : y;
}

void CertifierConfig::validate() const {
  if (block < 4000) {
    throw Error(ErrorKind::kConfig, "certification block must hold at least 4000 events");
  }
  if (!(sigma_margin >= 0.0)) {
    throw Error(ErrorKind::kConfig, "sigma margin must be non-negative");
  }
  coincidence.validate();
}

Verdict decide_verdict(const CertBlock& block, const CertifierConfig& config) noexcept {
  if (!block.full_coverage) {
    return Verdict::kUncertified;
  }
  if (block.S - config.sigma_margin * block.S_stderr > 2.0) {
    return Verdict::kCertifiedBell;
  }
  if (block.g2 > config.g2_threshold) {
    return Verdict::kCertifiedG2;
  }
  return Verdict::kUncertified;
}

CertBlock certify_range(const CertificationData& data, std::size_t first, std::size_t last,
                        Picoseconds t_start, Picoseconds t_end, const AnalyzerSchedule& schedule,
                        const CertifierConfig& config) {
  CertBlock block;
  block.t_start = t_start;
  block.t_end = t_end;
  block.n_cert_events = last - first;

  // Singles in [t_start, t_end), closing the interval on the run's last instant.
  auto count_in = [&](std::span<const Picoseconds> times) {
    const auto lo = std::lower_bound(times.begin(), times.end(), t_start);
    const auto hi = t_end >= data.duration ? std::upper_bound(times.begin(), times.end(), t_end)
                                           : std::lower_bound(times.begin(), times.end(), t_end);
    return static_cast<std::uint64_t>(hi - lo);
  };
  block.n_c1 = count_in(data.c1_singles);
  block.n_c2 = count_in(data.c2_singles);

  const Picoseconds span = t_end - t_start;
  if (block.n_c1 > 0 && block.n_c2 > 0 && span > 0) {
    block.g2 = g2_cross(block.n_c1, block.n_c2, block.n_cert_events, span, config.coincidence);
  }

  std::vector<int> combo_of(schedule.settings.size(), -1);
  std::array<double, 16> counts{};
  std::array<double, 16> exposure{};
  const ChshAngles& ang = config.angles;
  for (std::size_t k = 0; k < schedule.settings.size(); ++k) {
    const auto [i, p1] = classify(schedule.settings[k].theta_c1, ang.a, ang.a_prime);
    const auto [j, p2] = classify(schedule.settings[k].theta_c2, ang.b, ang.b_prime);
    if (i < 0 || j < 0) {
      continue;
    }
    const std::size_t c = combo(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                static_cast<std::size_t>(p1), static_cast<std::size_t>(p2));
    combo_of[k] = static_cast<int>(c);
    exposure[c] += exposure_until(schedule, k, t_end) - exposure_until(schedule, k, t_start);
  }
  for (std::size_t e = first; e < last; ++e) {
    const int c = combo_of[schedule.index_at(data.cert_events[e].time)];
    if (c >= 0) {
      counts[static_cast<std::size_t>(c)] += 1.0;
    }
  }

  block.full_coverage = true;
  double variance = 0.0;
  for (std::size_t i = 0; i < 2 && block.full_coverage; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double rate[2][2];
      double n[2][2];
      double total_rate = 0.0;
      for (std::size_t p1 = 0; p1 < 2; ++p1) {
        for (std::size_t p2 = 0; p2 < 2; ++p2) {
          const std::size_t c = combo(i, j, p1, p2);
          if (!(exposure[c] > 0.0)) {
            block.full_coverage = false;
          }
          n[p1][p2] = counts[c];
          rate[p1][p2] = exposure[c] > 0.0 ? counts[c] / exposure[c] : 0.0;
          total_rate += rate[p1][p2];
        }
      }
      if (!block.full_coverage || !(total_rate > 0.0)) {
        block.full_coverage = false;
        break;
      }
      const double e_val =
          correlation_E(CorrelationCounts{rate[0][0], rate[1][0], rate[0][1], rate[1][1]});
      block.correlations[i * 2 + j] = e_val;
      // Independent Poisson counts: dE/dn = (sign - E) / (exposure * total_rate).
      for (std::size_t p1 = 0; p1 < 2; ++p1) {
        for (std::size_t p2 = 0; p2 < 2; ++p2) {
          const double sign = p1 == p2 ? 1.0 : -1.0;
          const double x = exposure[combo(i, j, p1, p2)];
          const double d = (sign - e_val) / (x * total_rate);
          variance += d * d * n[p1][p2];
        }
      }
    }
  }

  if (block.full_coverage) {
    const auto& e = block.correlations;
    block.S = chsh_s(e[0], e[1], e[2], e[3]);
    block.S_stderr = std::sqrt(variance);
    const double delta = 2.0 * (ang.a_prime - ang.a) * kDeg;
    const double sin_d = std::sin(delta);
    if (std::abs(sin_d) > 1e-9) {
      auto fringe = [&](double e1, double e2) {
        return std::sqrt(std::max(0.0, e1 * e1 + e2 * e2 - 2.0 * e1 * e2 * std::cos(delta))) /
               std::abs(sin_d);
      };
      block.visibility[angle_key(ang.b)] = fringe(e[0], e[2]);
      block.visibility[angle_key(ang.b_prime)] = fringe(e[1], e[3]);
    }
  } else {
    block.S = std::numeric_limits<double>::quiet_NaN();
    block.S_stderr = std::numeric_limits<double>::quiet_NaN();
  }
  block.verdict = decide_verdict(block, config);
  return block;
}

std::vector<CertBlock> live_certify(const CertificationData& data, const AnalyzerSchedule& schedule,
                                    const CertifierConfig& config) {
  config.validate();
  schedule.validate();
  const auto& events = data.cert_events;
  const std::size_t n = events.size();
  const std::size_t size = config.block;

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + size <= n; s += size) {
    starts.push_back(s);
  }
  const std::size_t covered = starts.size() * size;
  if (starts.empty()) {
    starts.push_back(0);
  } else if (n - covered >= (size + 1) / 2) {
    starts.push_back(covered);
  }

  std::vector<CertBlock> blocks;
  blocks.reserve(starts.size());
  for (std::size_t b = 0; b < starts.size(); ++b) {
    const std::size_t first = starts[b];
    const std::size_t last = b + 1 < starts.size() ? starts[b + 1] : n;
    const Picoseconds t_start = b == 0 ? 0 : events[first].time;
    const Picoseconds t_end =
        b + 1 < starts.size() ? events[starts[b + 1]].time : std::max(data.duration, t_start);
    blocks.push_back(certify_range(data, first, last, t_start, t_end, schedule, config));
  }
  return blocks;
}

std::vector<Verdict> join_verdicts(std::span<const Picoseconds> times,
                                   std::span<const CertBlock> blocks) {
  std::vector<Verdict> out;
  out.reserve(times.size());
  std::size_t b = 0;
  for (Picoseconds t : times) {
    // Times are usually sorted; restart the scan when they are not.
    if (b > 0 && t < blocks[b].t_start) {
      b = 0;
    }
    while (b + 1 < blocks.size() && blocks[b + 1].t_start <= t) {
      ++b;
    }
    out.push_back(blocks.empty() ? Verdict::kUncertified : blocks[b].verdict);
  }
  return out;
}

}  // namespace qrng
