#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hsbc/cut.hpp"
#include "hsbc/env.hpp"
#include "hsbc/oracle.hpp"
#include "hsbc/reward.hpp"

namespace fixtures {

using namespace hsbc;

inline Trajectory random_trajectory(const EnvSpec& env, int length, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Trajectory t;
  for (int k = 0; k <= length; ++k) {
    State s(env.state_dim());
    for (int i = 0; i < s.size(); ++i) s(i) = n(rng);
    t.states.push_back(s);
    if (k < length) {
      Action a(env.action_dim());
      a(0) = std::clamp(n(rng), env.action_low, env.action_high);
      t.actions.push_back(a);
    }
  }
  return t;
}

inline Segment random_segment(const EnvSpec& env, int length, Rng& rng, std::uint64_t id,
                              double scale = 1.0) {
  return {random_trajectory(env, length, rng, scale), id, 0};
}

inline std::vector<Segment> random_segments(const EnvSpec& env, int count, int length, Rng& rng) {
  std::vector<Segment> out;
  for (int k = 0; k < count; ++k) out.push_back(random_segment(env, length, rng, k));
  return out;
}

/// Rational records under `truth`, labels flipped at `flips`.
inline PreferenceBatch labeled_batch(const GroundTruth& truth, const std::vector<Segment>& pool,
                                     int n, int batch_index, Rng& rng,
                                     const std::vector<bool>& flips = {}) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  PreferenceBatch b;
  b.batch_index = batch_index;
  for (int j = 0; j < n; ++j) {
    std::size_t i0 = pick(rng), i1 = pick(rng);
    while (i1 == i0) i1 = pick(rng);
    PreferenceRecord r{pool[i0], pool[i1], rational_label(truth, pool[i0], pool[i1]),
                       static_cast<std::uint64_t>(batch_index * 1000 + j), LabelSource::Simulated};
    if (!flips.empty() && flips[j]) r.label = 1 - r.label;
    b.records.push_back(std::move(r));
  }
  return b;
}

inline RewardModel pointmass_linear() {
  return RewardModel::linear(EnvSpec::make_pointmass().feature_map());
}

inline RewardParams pointmass_theta_h() {
  return EnvSpec::make_pointmass().pointmass.true_weights;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace fixtures
