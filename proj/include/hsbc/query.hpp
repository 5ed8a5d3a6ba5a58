#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hsbc/cut.hpp"
#include "hsbc/oracle.hpp"
#include "hsbc/reward.hpp"
#include "hsbc/sampler.hpp"

namespace hsbc {

struct QueryConfig {
  int batch_size = 10;                  // N
  double disagreement_threshold = 0.75; // eta
  int segments_per_trajectory = 2;      // Z
  int segment_length = 20;              // T_seg
  int max_candidate_draws = 0;          ///< 0 means 200 * N
  int buffer_trajectories = 50;         ///< buffer capacity in trajectories' worth of segments

  int candidate_budget() const { return max_candidate_draws > 0 ? max_candidate_draws : 200 * batch_size; }
  void validate() const;
};

/// Z windows of length T_seg at uniformly random offsets, distinct when the
/// trajectory has enough of them.
std::vector<Segment> segment_trajectory(const Trajectory& traj, int count, int segment_length,
                                        Rng& rng, std::uint64_t source_id = 0);

/// Insertion-ordered segment store with oldest-first eviction.
class SegmentBuffer {
 public:
  struct Entry {
    std::uint64_t id;
    Segment segment;
  };

  explicit SegmentBuffer(std::size_t capacity = 100);

  std::uint64_t add(Segment segment);
  void add_all(std::vector<Segment> segments);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::uint64_t next_id_ = 0;
  std::deque<Entry> entries_;
};

/// 4 n+ n- / M^2 with n+ = #{k : J0_k > J1_k}.
double disagreement_score(const Eigen::VectorXd& returns0, const Eigen::VectorXd& returns1);
double disagreement_score(const RewardModel& model, const Ensemble& ensemble, const Segment& seg0,
                          const Segment& seg1);
double disagreement_from_counts(int n_plus, int members);

/// Member-by-segment table of returns (M x buffer size).
Eigen::MatrixXd ensemble_returns(const RewardModel& model, const Ensemble& ensemble,
                                 const SegmentBuffer& buffer);

struct CandidateDecision {
  std::uint64_t candidate_id;
  std::uint64_t seg0_id;
  std::uint64_t seg1_id;
  double score;
  bool accepted;
};

using CandidateObserver = std::function<void(const CandidateDecision&)>;
using LabelObserver = std::function<void(const PreferenceRecord&, const LabelResult&, double score)>;

/// Thrown when the candidate budget runs out before the batch is full.
class PartialBatchError : public std::runtime_error {
 public:
  PartialBatchError(std::vector<PreferenceRecord> accepted, int draws);
  std::vector<PreferenceRecord> accepted;
  int draws;
};

struct AssemblyContext {
  int batch_index = 0;
  std::uint64_t* next_candidate_id = nullptr;  ///< run-wide counter, query ids come from it
  CandidateObserver on_candidate;
  LabelObserver on_label;
};

/// Draws uniform pairs from the buffer and queries the oracle on pairs whose
/// disagreement exceeds eta until N records are accepted. `accepted` seeds the
/// batch with records from an interrupted attempt.
PreferenceBatch assemble_batch(const SegmentBuffer& buffer, const RewardModel& model,
                               const Ensemble& ensemble, const QueryConfig& config, Oracle& oracle,
                               Rng& rng, const AssemblyContext& context,
                               std::vector<PreferenceRecord> accepted = {});

/// Completes a batch with the most disagreed pairs regardless of eta.
PreferenceBatch fill_batch_by_score(const SegmentBuffer& buffer, const RewardModel& model,
                                    const Ensemble& ensemble, const QueryConfig& config,
                                    Oracle& oracle, Rng& rng, const AssemblyContext& context,
                                    std::vector<PreferenceRecord> accepted);

/// Fraction of `pairs` uniformly drawn buffer pairs whose disagreement exceeds eta.
double disagreement_fraction(const SegmentBuffer& buffer, const RewardModel& model,
                             const Ensemble& ensemble, double eta, int pairs, Rng& rng);

}  // namespace hsbc
