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

#include "qrng/source.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qrng/error.hpp"
#include "qrng/parallel.hpp"

namespace qrng {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMaxJitterSigmas = 8.0;

std::string channel_field(std::string_view field, Channel c) {
  return std::string(field) + "[" + std::string(channel_name(c)) + "]";
}

}  // namespace

void TwoPhotonState::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorKind::kDomain, "state amplitudes must lie in [0, 1]");
  }
  if (std::abs(alpha * alpha + beta * beta - 1.0) > 1e-12) {
    throw Error(ErrorKind::kDomain, "state amplitudes must satisfy alpha^2 + beta^2 = 1");
  }
  if (!(noise_p >= 0.0 && noise_p <= 1.0)) {
    throw Error(ErrorKind::kDomain, "noise_p must lie in [0, 1]");
  }
}

TwoPhotonState TwoPhotonState::from_alpha(double alpha, double noise_p) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kDomain, "alpha must lie in [0, 1]");
  }
  TwoPhotonState s{alpha, std::sqrt(std::max(0.0, 1.0 - alpha * alpha)), noise_p};
  s.validate();
  return s;
}

TwoPhotonState state_from_hwp(double theta_deg) {
  if (!(theta_deg >= 0.0 && theta_deg <= 45.0)) {
    throw Error(ErrorKind::kDomain, "half-wave-plate angle must lie in [0, 45] degrees");
  }
  // Exact endpoints; sin/cos of pi/2 are not exactly 1 and 0 in floating point.
  if (theta_deg == 0.0) {
    return TwoPhotonState{0.0, 1.0, 1.0};
  }
  if (theta_deg == 45.0) {
    return TwoPhotonState{1.0, 0.0, 1.0};
  }
  const double two_theta = 2.0 * theta_deg * kDeg;
  return TwoPhotonState{std::sin(two_theta), std::cos(two_theta), 1.0};
}

double projection_probability(const TwoPhotonState& state, double theta1_deg, double theta2_deg) {
  const double t1 = theta1_deg * kDeg;
  const double t2 = theta2_deg * kDeg;
  const double amp =
      state.alpha * std::cos(t1) * std::cos(t2) - state.beta * std::sin(t1) * std::sin(t2);
  const double p = state.noise_p * amp * amp + (1.0 - state.noise_p) / 4.0;
  return std::clamp(p, 0.0, 1.0);
}

void AnalyzerSchedule::validate() const {
  if (settings.empty()) {
    throw Error(ErrorKind::kConfig, "analyzer schedule needs at least one setting");
  }
  if (dwell == 0) {
    throw Error(ErrorKind::kConfig, "analyzer dwell must be positive");
  }
}

void SourceConfig::validate() const {
  if (!(pump_power_mw > 0.0) || !std::isfinite(pump_power_mw)) {
    throw Error(ErrorKind::kConfig, "pump power must be positive");
  }
  if (!(pair_rate_coeff >= 0.0) || !std::isfinite(pair_rate_coeff)) {
    throw Error(ErrorKind::kConfig, "pair rate coefficient must be non-negative");
  }
  try {
    state.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  for (Channel c : kAllChannels) {
    const double eta = det_efficiency[index_of(c)];
    if (!(eta > 0.0 && eta <= 1.0)) {
      throw Error(ErrorKind::kConfig, channel_field("det_efficiency", c) + " must lie in (0, 1]");
    }
    const double dark = dark_rate_hz[index_of(c)];
    if (!(dark >= 0.0) || !std::isfinite(dark)) {
      throw Error(ErrorKind::kConfig, channel_field("dark_rate", c) + " must be non-negative");
    }
  }
  if (!(jitter_sigma_ps >= 0.0) || !std::isfinite(jitter_sigma_ps)) {
    throw Error(ErrorKind::kConfig, "jitter sigma must be non-negative");
  }
  if (duration_ps > kMaxTimestamp / 2) {
    throw Error(ErrorKind::kConfig, "duration exceeds the timestamp range");
  }
  analyzer_schedule.validate();
  const double expected_pairs = pair_rate_hz() * duration_s();
  if (expected_pairs >= std::ldexp(1.0, 40)) {
    throw Error(ErrorKind::kResource, "expected pair count exceeds the 2^40 event budget");
  }
}

RateSummary expected_rates(const SourceConfig& config) {
  RateSummary out;
  const double per_section = config.pair_rate_hz() / 3.0;
  const auto& eta = config.det_efficiency;

  // Schedule-averaged analyzer transmission for C1, C2 and the pair.
  double t1 = 0.0, t2 = 0.0, t12 = 0.0;
  for (const AnalyzerSetting& s : config.analyzer_schedule.settings) {
    const double tt = projection_probability(config.state, s.theta_c1, s.theta_c2);
    t1 += tt + projection_probability(config.state, s.theta_c1, s.theta_c2 + 90.0);
    t2 += tt + projection_probability(config.state, s.theta_c1 + 90.0, s.theta_c2);
    t12 += tt;
  }
  const double n = static_cast<double>(config.analyzer_schedule.settings.size());
  t1 /= n;
  t2 /= n;
  t12 /= n;

  for (Channel c : kAllChannels) {
    const std::size_t i = index_of(c);
    double transmission = 1.0;
    if (c == Channel::kC1) {
      transmission = t1;
    } else if (c == Channel::kC2) {
      transmission = t2;
    }
    out.singles_hz[i] = per_section * eta[i] * transmission + config.dark_rate_hz[i];
  }
  for (std::size_t p = 0; p < kSectionPairCount; ++p) {
    const auto [a, b] = section_channels(static_cast<SectionPair>(p));
    const double analyzer = static_cast<SectionPair>(p) == SectionPair::kC1C2 ? t12 : 1.0;
    out.pair_coincidence_hz[p] = per_section * eta[index_of(a)] * eta[index_of(b)] * analyzer;
  }
  return out;
}

EventGenerator::EventGenerator(SourceConfig config) : config_(std::move(config)) {
  config_.validate();
  slice_count_ = static_cast<std::size_t>((config_.duration_ps + kSliceLength - 1) / kSliceLength);
  margin_ = static_cast<Picoseconds>(std::ceil(kMaxJitterSigmas * config_.jitter_sigma_ps)) + 1;
  last_kept_.fill(-1);

  // Only pairs with at least one surviving photon are drawn: thinning the
  // Poisson pair process by the per-pair detection probability.
  const double per_section_per_ps = config_.pair_rate_hz() / 3.0 / 1e12;
  double cumulative = 0.0;
  for (std::size_t p = 0; p < kSectionPairCount; ++p) {
    const auto [a, b] = section_channels(static_cast<SectionPair>(p));
    const double ea = config_.det_efficiency[index_of(a)];
    const double eb = config_.det_efficiency[index_of(b)];
    const double q = 1.0 - (1.0 - ea) * (1.0 - eb);
    cumulative += per_section_per_ps * q;
    thinning_.cumulative[p] = cumulative;
    thinning_.pattern_cdf[p] = {ea * eb / q, ea / q};
  }
  thinning_.total_rate_per_ps = cumulative;

  for (const AnalyzerSetting& s : config_.analyzer_schedule.settings) {
    const double tt = projection_probability(config_.state, s.theta_c1, s.theta_c2);
    const double tr = projection_probability(config_.state, s.theta_c1, s.theta_c2 + 90.0);
    const double rt = projection_probability(config_.state, s.theta_c1 + 90.0, s.theta_c2);
    settings_.push_back(SettingTable{{tt, tt + tr, tt + tr + rt}});
  }
}

double EventGenerator::jittered(Rng& rng, double t) const {
  if (config_.jitter_sigma_ps <= 0.0) {
    return t;
  }
  double z = rng.normal();
  while (std::abs(z) > kMaxJitterSigmas) {
    z = rng.normal();
  }
  return t + z * config_.jitter_sigma_ps;
}

void EventGenerator::generate_slice(std::size_t slice, std::vector<TimeTag>& out) const {
  Rng rng(config_.rng_seed, slice);
  const double begin = static_cast<double>(slice * kSliceLength);
  const double end =
      static_cast<double>(std::min<Picoseconds>((slice + 1) * kSliceLength, config_.duration_ps));
  const double duration = static_cast<double>(config_.duration_ps);

  auto emit = [&](double t, Channel c) {
    const double rounded = std::nearbyint(t);
    if (rounded >= 0.0 && rounded <= duration) {
      out.push_back(TimeTag{static_cast<Picoseconds>(rounded), c});
    }
  };

  if (thinning_.total_rate_per_ps > 0.0) {
    const double scale = 1.0 / thinning_.total_rate_per_ps;
    for (double t = begin + rng.exponential() * scale; t < end; t += rng.exponential() * scale) {
      const double route = rng.uniform() * thinning_.total_rate_per_ps;
      std::size_t p = 0;
      while (p + 1 < kSectionPairCount && route >= thinning_.cumulative[p]) {
        ++p;
      }
      const double pattern = rng.uniform();
      const bool survive_a = pattern < thinning_.pattern_cdf[p][1];
      const bool survive_b = pattern < thinning_.pattern_cdf[p][0] || !survive_a;
      const auto [a, b] = section_channels(static_cast<SectionPair>(p));

      bool emit_a = survive_a;
      bool emit_b = survive_b;
      if (static_cast<SectionPair>(p) == SectionPair::kC1C2) {
        const SettingTable& table =
            settings_[config_.analyzer_schedule.index_at(static_cast<Picoseconds>(t))];
        const double u = rng.uniform();
        const bool pass_a = u < table.cdf[1];                   // TT or TR
        const bool pass_b = u < table.cdf[0] || (u >= table.cdf[1] && u < table.cdf[2]);  // TT or RT
        emit_a = emit_a && pass_a;
        emit_b = emit_b && pass_b;
      }
      if (emit_a) {
        emit(jittered(rng, t), a);
      }
      if (emit_b) {
        emit(jittered(rng, t), b);
      }
    }
  }

  for (Channel c : kAllChannels) {
    const double rate_per_ps = config_.dark_rate_hz[index_of(c)] / 1e12;
    if (rate_per_ps <= 0.0) {
      continue;
    }
    const double scale = 1.0 / rate_per_ps;
    for (double t = begin + rng.exponential() * scale; t < end; t += rng.exponential() * scale) {
      emit(t, c);
    }
  }
}

std::vector<TimeTag> EventGenerator::next_chunk(std::size_t max_slices) {
  if (done()) {
    return {};
  }
  const std::size_t first = next_slice_;
  const std::size_t count = std::min(std::max<std::size_t>(max_slices, 1), slice_count_ - first);
  std::vector<std::vector<TimeTag>> per_slice(count);
  parallel_for(count, [&](std::size_t i) { generate_slice(first + i, per_slice[i]); });
  next_slice_ += count;

  std::size_t added = 0;
  for (const auto& v : per_slice) {
    added += v.size();
  }
  pending_.reserve(pending_.size() + added);
  for (auto& v : per_slice) {
    pending_.insert(pending_.end(), v.begin(), v.end());
  }
  // Stable: equal timestamps keep generation order (earlier slice first).
  std::stable_sort(pending_.begin(), pending_.end(), [](const TimeTag& x, const TimeTag& y) {
    return x.timestamp < y.timestamp;
  });

  std::size_t split = pending_.size();
  if (next_slice_ < slice_count_) {
    const Picoseconds generated_to = next_slice_ * kSliceLength;
    const Picoseconds frontier = generated_to > margin_ ? generated_to - margin_ : 0;
    split = static_cast<std::size_t>(
        std::lower_bound(pending_.begin(), pending_.end(), frontier,
                         [](const TimeTag& t, Picoseconds v) { return t.timestamp < v; }) -
        pending_.begin());
  }

  std::vector<TimeTag> out;
  out.reserve(split);
  const auto dead = static_cast<std::int64_t>(config_.dead_time_ps);
  for (std::size_t i = 0; i < split; ++i) {
    const TimeTag& t = pending_[i];
    if (dead > 0) {
      std::int64_t& last = last_kept_[index_of(t.channel)];
      const auto ts = static_cast<std::int64_t>(t.timestamp);
      if (last >= 0 && ts - last < dead) {
        continue;
      }
      last = ts;
    }
    out.push_back(t);
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(split));
  return out;
}

TagStream generate_events(const SourceConfig& config) {
  EventGenerator gen(config);
  std::vector<TimeTag> all;
  while (!gen.done()) {
    auto chunk = gen.next_chunk();
    if (all.empty()) {
      all = std::move(chunk);
    } else {
      all.insert(all.end(), chunk.begin(), chunk.end());
    }
  }
  return TagStream(std::move(all), config.duration_ps);
}

}  // namespace qrng
