#include "hsbc/query.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

#include "hsbc/errors.hpp"

namespace hsbc {

void QueryConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(disagreement_threshold >= 0.0 && disagreement_threshold < 1.0))
    throw ConfigError("disagreement threshold must lie in [0, 1)");
  if (segments_per_trajectory < 1) throw ConfigError("segments per trajectory must be positive");
  if (segment_length < 1) throw ConfigError("segment length must be positive");
  if (max_candidate_draws < 0) throw ConfigError("candidate budget must be nonnegative");
  if (buffer_trajectories < 1) throw ConfigError("buffer must hold at least one trajectory");
}

std::vector<Segment> segment_trajectory(const Trajectory& traj, int count, int segment_length,
                                        Rng& rng, std::uint64_t source_id) {
  if (count < 1 || segment_length < 1) throw InvalidInput("segment count and length must be positive");
  const auto len = static_cast<std::size_t>(segment_length);
  if (traj.length() < len) throw InvalidInput("trajectory shorter than the segment length");
  const std::size_t choices = traj.length() - len + 1;
  const auto z = static_cast<std::size_t>(count);

  std::vector<std::size_t> offsets;
  if (z <= choices) {
    std::vector<std::size_t> pool(choices);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < z; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, choices - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    offsets.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(z));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, choices - 1);
    for (std::size_t i = 0; i < z; ++i) offsets.push_back(pick(rng));
  }

  std::vector<Segment> out;
  out.reserve(z);
  for (std::size_t o : offsets) {
    Segment seg;
    seg.source_id = source_id;
    seg.offset = o;
    seg.data.states.assign(traj.states.begin() + static_cast<std::ptrdiff_t>(o),
                           traj.states.begin() + static_cast<std::ptrdiff_t>(o + len + 1));
    seg.data.actions.assign(traj.actions.begin() + static_cast<std::ptrdiff_t>(o),
                            traj.actions.begin() + static_cast<std::ptrdiff_t>(o + len));
    out.push_back(std::move(seg));
  }
  return out;
}

SegmentBuffer::SegmentBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 2) throw ConfigError("segment buffer capacity must be at least 2");
}

std::uint64_t SegmentBuffer::add(Segment segment) {
  if (!entries_.empty() && segment.length() != entries_.front().segment.length())
    throw InvalidInput("segment length differs from the buffer's");
  const std::uint64_t id = next_id_++;
  entries_.push_back({id, std::move(segment)});
  while (entries_.size() > capacity_) entries_.pop_front();
  return id;
}

void SegmentBuffer::add_all(std::vector<Segment> segments) {
  for (auto& s : segments) add(std::move(s));
}

double disagreement_from_counts(int n_plus, int members) {
  if (members < 1 || n_plus < 0 || n_plus > members) throw InvalidInput("bad disagreement counts");
  const double m = members;
  return 4.0 * n_plus * (members - n_plus) / (m * m);
}

double disagreement_score(const Eigen::VectorXd& returns0, const Eigen::VectorXd& returns1) {
  if (returns0.size() != returns1.size() || returns0.size() < 2)
    throw InvalidInput("disagreement needs at least two members");
  const int n_plus = static_cast<int>((returns0.array() > returns1.array()).count());
  return disagreement_from_counts(n_plus, static_cast<int>(returns0.size()));
}

double disagreement_score(const RewardModel& model, const Ensemble& ensemble, const Segment& seg0,
                          const Segment& seg1) {
  const auto m = static_cast<Eigen::Index>(ensemble.size());
  Eigen::VectorXd j0(m), j1(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    j0(k) = segment_return(model, ensemble.members[k], seg0);
    j1(k) = segment_return(model, ensemble.members[k], seg1);
  }
  return disagreement_score(j0, j1);
}

Eigen::MatrixXd ensemble_returns(const RewardModel& model, const Ensemble& ensemble,
                                 const SegmentBuffer& buffer) {
  const auto s = static_cast<Eigen::Index>(buffer.size());
  const auto m = static_cast<Eigen::Index>(ensemble.size());
  Eigen::MatrixXd table(m, s);
  if (s == 0) return table;
  const auto len = static_cast<Eigen::Index>(buffer[0].segment.length());
  Eigen::MatrixXd inputs(model.input_dim(), s * len);
  for (Eigen::Index j = 0; j < s; ++j)
    inputs.middleCols(j * len, len) = encode(model, buffer[static_cast<std::size_t>(j)].segment.data);
  for (Eigen::Index k = 0; k < m; ++k) {
    BlockEvaluation eval(model, ensemble.members[static_cast<std::size_t>(k)], inputs);
    table.row(k) = eval.rewards().reshaped(len, s).colwise().sum();
  }
  return table;
}

PartialBatchError::PartialBatchError(std::vector<PreferenceRecord> records, int draw_count)
    : std::runtime_error("candidate budget exhausted with " + std::to_string(records.size()) +
                         " accepted pairs"),
      accepted(std::move(records)),
      draws(draw_count) {}

namespace {

using PairKey = std::pair<std::uint64_t, std::uint64_t>;

PairKey pair_key(std::uint64_t a, std::uint64_t b) { return a < b ? PairKey{a, b} : PairKey{b, a}; }

std::uint64_t take_id(const AssemblyContext& ctx, std::uint64_t& local) {
  return ctx.next_candidate_id ? (*ctx.next_candidate_id)++ : local++;
}

// Segments are identified by (trajectory, offset); offsets stay far below 2^20.
PairKey content_key(const Segment& a, const Segment& b) {
  return pair_key((a.source_id << 20) | a.offset, (b.source_id << 20) | b.offset);
}

std::set<PairKey> keys_of(const std::vector<PreferenceRecord>& records) {
  std::set<PairKey> keys;
  for (const auto& r : records) keys.insert(content_key(r.seg0, r.seg1));
  return keys;
}

PreferenceRecord query(const SegmentBuffer::Entry& e0, const SegmentBuffer::Entry& e1, double score,
                       std::uint64_t id, std::size_t position, const QueryConfig& config,
                       Oracle& oracle, const AssemblyContext& ctx) {
  QueryRequest q;
  q.query_id = id;
  q.batch_index = ctx.batch_index;
  q.position = static_cast<int>(position);
  q.batch_size = config.batch_size;
  q.score = score;
  q.seg0 = &e0.segment;
  q.seg1 = &e1.segment;
  const LabelResult result = oracle.label(q);
  if (result.label != 0 && result.label != 1) throw InvalidInput("oracle returned a non-binary label");
  PreferenceRecord rec{e0.segment, e1.segment, result.label, id, result.source};
  if (ctx.on_label) ctx.on_label(rec, result, score);
  return rec;
}

}  // namespace

PreferenceBatch assemble_batch(const SegmentBuffer& buffer, const RewardModel& model,
                               const Ensemble& ensemble, const QueryConfig& config, Oracle& oracle,
                               Rng& rng, const AssemblyContext& ctx,
                               std::vector<PreferenceRecord> accepted) {
  if (buffer.size() < 2) throw InvalidInput("segment buffer needs at least two segments");
  if (ensemble.size() < 2) throw InvalidInput("disagreement needs at least two ensemble members");
  const auto n = static_cast<std::size_t>(config.batch_size);
  const Eigen::MatrixXd table = ensemble_returns(model, ensemble, buffer);
  std::set<PairKey> used = keys_of(accepted);
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::uint64_t local_id = 0;
  int draws = 0;

  while (accepted.size() < n) {
    if (draws >= config.candidate_budget()) throw PartialBatchError(std::move(accepted), draws);
    ++draws;
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    if (a == b) continue;
    const auto& e0 = buffer[a];
    const auto& e1 = buffer[b];
    const std::uint64_t id = take_id(ctx, local_id);
    const double score = disagreement_score(table.col(static_cast<Eigen::Index>(a)),
                                            table.col(static_cast<Eigen::Index>(b)));
    const bool fresh = !used.count(content_key(e0.segment, e1.segment));
    const bool accept = fresh && score > config.disagreement_threshold;
    if (ctx.on_candidate) ctx.on_candidate({id, e0.id, e1.id, score, accept});
    if (!accept) continue;
    used.insert(content_key(e0.segment, e1.segment));
    accepted.push_back(query(e0, e1, score, id, accepted.size(), config, oracle, ctx));
  }

  PreferenceBatch batch;
  batch.batch_index = ctx.batch_index;
  batch.records = std::move(accepted);
  return batch;
}

PreferenceBatch fill_batch_by_score(const SegmentBuffer& buffer, const RewardModel& model,
                                    const Ensemble& ensemble, const QueryConfig& config,
                                    Oracle& oracle, Rng& rng, const AssemblyContext& ctx,
                                    std::vector<PreferenceRecord> accepted) {
  (void)rng;
  if (buffer.size() < 2) throw InvalidInput("segment buffer needs at least two segments");
  const auto n = static_cast<std::size_t>(config.batch_size);
  const Eigen::MatrixXd table = ensemble_returns(model, ensemble, buffer);
  std::set<PairKey> used = keys_of(accepted);

  struct Scored {
    double score;
    std::size_t a, b;
  };
  std::vector<Scored> pairs;
  for (std::size_t a = 0; a < buffer.size(); ++a)
    for (std::size_t b = a + 1; b < buffer.size(); ++b)
      pairs.push_back({disagreement_score(table.col(static_cast<Eigen::Index>(a)),
                                          table.col(static_cast<Eigen::Index>(b))),
                       a, b});
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Scored& x, const Scored& y) { return x.score > y.score; });

  std::uint64_t local_id = 0;
  for (const auto& p : pairs) {
    if (accepted.size() >= n) break;
    const auto& e0 = buffer[p.a];
    const auto& e1 = buffer[p.b];
    if (!used.insert(content_key(e0.segment, e1.segment)).second) continue;
    const std::uint64_t id = take_id(ctx, local_id);
    if (ctx.on_candidate) ctx.on_candidate({id, e0.id, e1.id, p.score, true});
    accepted.push_back(query(e0, e1, p.score, id, accepted.size(), config, oracle, ctx));
  }
  if (accepted.size() < n) throw PartialBatchError(std::move(accepted), 0);

  PreferenceBatch batch;
  batch.batch_index = ctx.batch_index;
  batch.records = std::move(accepted);
  return batch;
}

double disagreement_fraction(const SegmentBuffer& buffer, const RewardModel& model,
                             const Ensemble& ensemble, double eta, int pairs, Rng& rng) {
  if (buffer.size() < 2 || pairs < 1) throw InvalidInput("need two segments and a positive pair count");
  const Eigen::MatrixXd table = ensemble_returns(model, ensemble, buffer);
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  int above = 0;
  for (int i = 0; i < pairs; ++i) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    if (disagreement_score(table.col(static_cast<Eigen::Index>(a)),
                           table.col(static_cast<Eigen::Index>(b))) > eta)
      ++above;
  }
  return static_cast<double>(above) / pairs;
}

}  // namespace hsbc
