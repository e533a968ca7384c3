#include "kbc/topk.h"

#include <algorithm>
#include <thread>

#include "kbc/error.h"

namespace kbc {

TopKAccumulator::TopKAccumulator(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("top-K capacity must be at least 1");
  heap_.reserve(capacity_);
}

double TopKAccumulator::threshold() const {
  if (!full()) return -std::numeric_limits<double>::infinity();
  return heap_.front().score;
}

void TopKAccumulator::Push(double score, std::uint64_t id) {
  if (!full()) {
    heap_.push_back({score, id});
    std::push_heap(heap_.begin(), heap_.end(), RanksBefore);
    return;
  }
  if (!RanksBefore({score, id}, heap_.front())) return;
  std::pop_heap(heap_.begin(), heap_.end(), RanksBefore);
  heap_.back() = {score, id};
  std::push_heap(heap_.begin(), heap_.end(), RanksBefore);
}

void TopKAccumulator::PushBatch(std::vector<Candidate>& batch) {
  if (batch.size() > capacity_) {
    std::nth_element(batch.begin(),
                     batch.begin() + static_cast<std::ptrdiff_t>(capacity_),
                     batch.end(), RanksBefore);
    batch.resize(capacity_);
  }
  for (const Candidate& c : batch) Push(c.score, c.id);
}

void TopKAccumulator::Merge(const TopKAccumulator& other) {
  for (const Candidate& c : other.heap_) Push(c.score, c.id);
}

std::vector<Candidate> TopKAccumulator::Finalize() const {
  std::vector<Candidate> out = heap_;
  std::sort(out.begin(), out.end(), RanksBefore);
  return out;
}

TopKAccumulator Merge(const TopKAccumulator& a, const TopKAccumulator& b) {
  TopKAccumulator out = a;
  out.Merge(b);
  return out;
}

std::vector<Candidate> TopKSelect(std::vector<Candidate> stream,
                                  std::size_t k) {
  if (k == 0) throw ConfigError("K must be at least 1");
  if (stream.size() > k) {
    std::nth_element(stream.begin(),
                     stream.begin() + static_cast<std::ptrdiff_t>(k),
                     stream.end(), RanksBefore);
    stream.resize(k);
  }
  std::sort(stream.begin(), stream.end(), RanksBefore);
  return stream;
}

std::vector<Candidate> TopKSelect(std::span<const double> scores,
                                  std::size_t k) {
  std::vector<Candidate> stream(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) stream[i] = {scores[i], i};
  return TopKSelect(std::move(stream), k);
}

namespace {

struct Tile {
  EntityRange rows;
  EntityRange cols;
};

struct WorkerState {
  explicit WorkerState(std::size_t k) : acc(k) {}
  TopKAccumulator acc;
  std::uint64_t candidates = 0;
};

void ScanTile(const Scorer& scorer, RelationId k, const Tile& tile,
              const ScanFilter& filter, const std::vector<char>& subject_ok,
              const std::vector<char>& object_ok, std::vector<double>& scores,
              std::vector<EntityId>& skip, std::vector<Candidate>& batch,
              WorkerState& state) {
  const std::size_t ne = scorer.num_entities();
  scores.resize(tile.rows.size() * tile.cols.size());
  scorer.ScoreBlock(k, tile.rows, tile.cols, scores);
  batch.clear();
  std::size_t pos = 0;
  for (EntityId i = tile.rows.begin; i < tile.rows.end;
       ++i, pos += tile.cols.size()) {
    if (!subject_ok.empty() && !subject_ok[i]) continue;
    skip.clear();
    for (const PairIndex* index : filter.excluded) {
      auto objects = index->ObjectsOf(i);
      auto lo = std::lower_bound(objects.begin(), objects.end(), tile.cols.begin);
      auto hi = std::lower_bound(lo, objects.end(), tile.cols.end);
      skip.insert(skip.end(), lo, hi);
    }
    if (filter.excluded.size() > 1) std::sort(skip.begin(), skip.end());
    auto next_skip = skip.begin();
    for (EntityId j = tile.cols.begin; j < tile.cols.end; ++j) {
      while (next_skip != skip.end() && *next_skip < j) ++next_skip;
      if (next_skip != skip.end() && *next_skip == j) continue;
      if (!object_ok.empty() && !object_ok[j]) continue;
      ++state.candidates;
      const double s = scores[pos + (j - tile.cols.begin)];
      const std::uint64_t id = PairId(i, j, ne);
      if (state.acc.WouldAdmit(s, id)) batch.push_back({s, id});
    }
  }
  state.acc.PushBatch(batch);
}

}  // namespace

ScanResult ScanRelation(const Scorer& scorer, RelationId k, std::size_t top_k,
                        const ScanFilter& filter, const ScanOptions& options) {
  if (top_k == 0) throw ConfigError("K must be at least 1");
  const std::size_t side = std::max<std::size_t>(options.block_side, 1);
  const auto ne = static_cast<EntityId>(scorer.num_entities());

  std::vector<Tile> tiles;
  for (EntityId r = 0; r < ne; r += static_cast<EntityId>(side)) {
    const EntityId r_end = static_cast<EntityId>(std::min<std::size_t>(ne, r + side));
    for (EntityId c = 0; c < ne; c += static_cast<EntityId>(side)) {
      const EntityId c_end =
          static_cast<EntityId>(std::min<std::size_t>(ne, c + side));
      tiles.push_back({{r, r_end}, {c, c_end}});
    }
  }

  std::vector<char> subject_ok, object_ok;
  if (filter.types != nullptr && filter.types->IsConstrained(k)) {
    subject_ok = filter.types->SubjectMask(k);
    object_ok = filter.types->ObjectMask(k);
  }

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(options.workers, tiles.size()));
  std::vector<WorkerState> states(workers, WorkerState(top_k));
  auto run = [&](std::size_t w) {
    std::vector<double> scores;
    std::vector<EntityId> skip;
    std::vector<Candidate> batch;
    for (std::size_t t = w; t < tiles.size(); t += workers) {
      ScanTile(scorer, k, tiles[t], filter, subject_ok, object_ok, scores, skip,
               batch, states[w]);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
  }

  ScanResult result;
  TopKAccumulator merged(top_k);
  for (const WorkerState& s : states) {
    merged.Merge(s.acc);
    result.candidates += s.candidates;
  }
  result.top = merged.Finalize();
  return result;
}

}  // namespace kbc
