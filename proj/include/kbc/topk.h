#ifndef KBC_TOPK_H_
#define KBC_TOPK_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "kbc/kb.h"
#include "kbc/scorer.h"

namespace kbc {

struct Candidate {
  double score = 0.0;
  std::uint64_t id = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Total ranking order: higher score first, ties by ascending id.
inline bool RanksBefore(const Candidate& a, const Candidate& b) {
  return a.score > b.score || (a.score == b.score && a.id < b.id);
}

inline std::uint64_t PairId(EntityId subject, EntityId object,
                            std::size_t num_entities) {
  return static_cast<std::uint64_t>(subject) * num_entities + object;
}
inline EntityId PairSubject(std::uint64_t id, std::size_t num_entities) {
  return static_cast<EntityId>(id / num_entities);
}
inline EntityId PairObject(std::uint64_t id, std::size_t num_entities) {
  return static_cast<EntityId>(id % num_entities);
}

// Bounded selection of the K best candidates. Holds a heap whose front is the
// worst retained candidate, which doubles as the admission threshold.
class TopKAccumulator {
 public:
  explicit TopKAccumulator(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return heap_.size(); }
  bool full() const { return heap_.size() >= capacity_; }
  // Score of the current K-th entry; -inf until full.
  double threshold() const;

  bool WouldAdmit(double score, std::uint64_t id) const {
    return !full() || RanksBefore({score, id}, heap_.front());
  }
  void Push(double score, std::uint64_t id);
  // Quickselects the batch down to K before pushing. Reorders the batch.
  void PushBatch(std::vector<Candidate>& batch);
  void Merge(const TopKAccumulator& other);

  // Retained entries in ranking order.
  std::vector<Candidate> Finalize() const;

 private:
  std::size_t capacity_;
  std::vector<Candidate> heap_;
};

TopKAccumulator Merge(const TopKAccumulator& a, const TopKAccumulator& b);

// The K best of a stream, sorted; equal to a full sort truncated to K.
std::vector<Candidate> TopKSelect(std::vector<Candidate> stream, std::size_t k);
// Candidate ids are positions in the span.
std::vector<Candidate> TopKSelect(std::span<const double> scores,
                                  std::size_t k);

struct ScanFilter {
  // Pairs present in any of these indices are never yielded.
  std::vector<const PairIndex*> excluded;
  // When set, only type-admissible pairs are yielded.
  const TypeConstraints* types = nullptr;
};

struct ScanOptions {
  std::size_t block_side = 1024;  // tiles hold block_side^2 score entries
  std::size_t workers = 1;
};

struct ScanResult {
  std::vector<Candidate> top;  // ids are PairId(i, j, |E|)
  std::uint64_t candidates = 0;  // admissible pairs scored
};

// Exact top-K over all admissible (subject, object) pairs of relation k.
// Output does not depend on block size or worker count.
ScanResult ScanRelation(const Scorer& scorer, RelationId k, std::size_t top_k,
                        const ScanFilter& filter,
                        const ScanOptions& options = {});

}  // namespace kbc

#endif  // KBC_TOPK_H_
