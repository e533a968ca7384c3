#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "kbc/model.h"
#include "kbc/topk.h"
#include "test_util.h"

namespace kbc {
namespace {

std::vector<Candidate> SortOracle(std::vector<Candidate> s, std::size_t k) {
  std::sort(s.begin(), s.end(), RanksBefore);
  if (s.size() > k) s.resize(k);
  return s;
}

std::vector<Candidate> Stream(std::initializer_list<double> scores) {
  std::vector<Candidate> out;
  std::uint64_t id = 0;
  for (double s : scores) out.push_back({s, id++});
  return out;
}

TEST(TopKSelect, HandExample) {
  const std::vector<double> scores = {5, 1, 9, 3};
  const auto top = TopKSelect(scores, 2);
  EXPECT_EQ(top, (std::vector<Candidate>{{9, 2}, {5, 0}}));
}

TEST(TopKSelect, KLargerThanStream) {
  const auto top = TopKSelect(Stream({2, 7, 1}), 10);
  EXPECT_EQ(top, (std::vector<Candidate>{{7, 1}, {2, 0}, {1, 2}}));
}

TEST(TopKSelect, TiesPickLowestIds) {
  const auto top = TopKSelect(Stream({4, 4, 4, 4, 4}), 2);
  EXPECT_EQ(top, (std::vector<Candidate>{{4, 0}, {4, 1}}));
}

TEST(TopKSelect, MatchesSortOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng() % 60;
    const std::size_t k = 1 + rng() % 20;
    std::vector<Candidate> s;
    for (std::size_t i = 0; i < n; ++i) {
      // Few distinct values so ties are common; ids shuffled.
      s.push_back({static_cast<double>(rng() % 5), rng() % 1000});
    }
    std::sort(s.begin(), s.end(),
              [](auto& a, auto& b) { return a.id < b.id; });
    s.erase(std::unique(s.begin(), s.end(),
                        [](auto& a, auto& b) { return a.id == b.id; }),
            s.end());
    std::shuffle(s.begin(), s.end(), rng);
    EXPECT_EQ(TopKSelect(s, k), SortOracle(s, k));

    TopKAccumulator acc(k);
    for (const auto& c : s) acc.Push(c.score, c.id);
    EXPECT_LE(acc.size(), k);
    EXPECT_EQ(acc.Finalize(), SortOracle(s, k));
  }
}

TEST(TopKAccumulator, ThresholdIsKthScore) {
  TopKAccumulator acc(2);
  EXPECT_EQ(acc.threshold(), -std::numeric_limits<double>::infinity());
  acc.Push(1.0, 0);
  EXPECT_EQ(acc.threshold(), -std::numeric_limits<double>::infinity());
  acc.Push(3.0, 1);
  EXPECT_EQ(acc.threshold(), 1.0);
  acc.Push(2.0, 2);
  EXPECT_EQ(acc.threshold(), 2.0);
  EXPECT_FALSE(acc.WouldAdmit(2.0, 5));
  EXPECT_TRUE(acc.WouldAdmit(2.0, 0));
}

TEST(TopKAccumulator, MergeWithEmptyIsIdentity) {
  TopKAccumulator a(3), empty(3);
  for (auto c : Stream({5, 1, 9, 3})) a.Push(c.score, c.id);
  EXPECT_EQ(Merge(a, empty).Finalize(), a.Finalize());
  EXPECT_EQ(Merge(empty, a).Finalize(), a.Finalize());
}

TEST(TopKAccumulator, MergeOfDisjointBlocksEqualsSinglePass) {
  const auto s = Stream({5, 1, 9, 3});
  TopKAccumulator a(2), b(2), all(2);
  a.Push(s[0].score, s[0].id);
  a.Push(s[1].score, s[1].id);
  b.Push(s[2].score, s[2].id);
  b.Push(s[3].score, s[3].id);
  for (auto c : s) all.Push(c.score, c.id);
  EXPECT_EQ(Merge(a, b).Finalize(), all.Finalize());
}

TEST(TopKAccumulator, MergeIsCommutative) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng() % 6;
    TopKAccumulator a(k), b(k);
    std::vector<Candidate> all;
    for (std::uint64_t id = 0; id < 30; ++id) {
      const double s = static_cast<double>(rng() % 4);
      (rng() % 2 ? a : b).Push(s, id);
      all.push_back({s, id});
    }
    EXPECT_EQ(Merge(a, b).Finalize(), Merge(b, a).Finalize());
    EXPECT_EQ(Merge(a, b).Finalize(), SortOracle(all, k));
  }
}

TEST(TopKAccumulator, PushBatchMatchesOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng() % 8;
    TopKAccumulator acc(k);
    std::vector<Candidate> all;
    std::uint64_t id = 0;
    for (int b = 0; b < 4; ++b) {
      std::vector<Candidate> batch;
      for (std::size_t i = rng() % 20; i > 0; --i) {
        batch.push_back({static_cast<double>(rng() % 6), id++});
      }
      all.insert(all.end(), batch.begin(), batch.end());
      acc.PushBatch(batch);
    }
    EXPECT_EQ(acc.Finalize(), SortOracle(all, k));
  }
}

TEST(PairIds, RoundTrip) {
  EXPECT_EQ(PairId(2, 1, 3), 7u);
  EXPECT_EQ(PairSubject(7, 3), 2u);
  EXPECT_EQ(PairObject(7, 3), 1u);
}

TEST(ScanRelation, FilteredPairLeavesEightCandidates) {
  const auto kb = testing::MakeKb({{"a", "k", "b"}}, {}, {}, {"a", "b", "c"});
  std::mt19937_64 rng(4);
  const auto table = testing::RandomTable(kb, rng);
  ScanFilter filter;
  filter.excluded = {&kb.pairs(Split::kTrain, 0)};
  const auto r = ScanRelation(table, 0, 100, filter);
  EXPECT_EQ(r.candidates, 8u);
  ASSERT_EQ(r.top.size(), 8u);
  for (const auto& c : r.top) EXPECT_NE(c.id, PairId(0, 1, 3));
}

TEST(ScanRelation, TypeFilterAdmittingOnePair) {
  const auto kb = testing::MakeKb({{"a", "k", "b"}}, {}, {}, {"a", "b", "c"});
  TypeConstraints types(3, 1);
  const TypeId s = types.AddType("S");
  const TypeId o = types.AddType("O");
  types.AddEntityType(2, s);
  types.AddEntityType(0, o);
  types.SetRelationConstraint(0, s, o);
  TableScorer table(3);
  ScanFilter filter;
  filter.types = &types;
  const auto r = ScanRelation(table, 0, 5, filter);
  ASSERT_EQ(r.top.size(), 1u);
  EXPECT_EQ(r.top[0].id, PairId(2, 0, 3));
  EXPECT_EQ(r.candidates, 1u);
}

// Full-sort oracle over every admissible pair.
std::vector<Candidate> ScanOracle(const Scorer& scorer, RelationId k,
                                  std::size_t top_k, const ScanFilter& f) {
  const std::size_t ne = scorer.num_entities();
  std::vector<Candidate> all;
  for (EntityId i = 0; i < ne; ++i) {
    for (EntityId j = 0; j < ne; ++j) {
      bool skip = false;
      for (const PairIndex* p : f.excluded) skip |= p->Contains(i, j);
      if (f.types != nullptr) skip |= !f.types->Admissible(k, i, j);
      if (!skip) all.push_back({scorer.Score(i, k, j), PairId(i, j, ne)});
    }
  }
  return SortOracle(all, top_k);
}

TEST(ScanRelation, InvariantToBlockSizeAndWorkers) {
  std::mt19937_64 rng(5);
  const auto kb = testing::RandomKb(50, 2, 200, 30, 30, rng);
  const auto p = ModelParams::Init(ModelSpec::Make(ModelKind::kDistMult, 8),
                                   kb.num_entities(), kb.num_relations(), 6);
  const ModelScorer scorer(p);
  ScanFilter filter;
  filter.excluded = {&kb.pairs(Split::kTrain, 1), &kb.pairs(Split::kValid, 1)};
  const auto oracle = ScanOracle(scorer, 1, 100, filter);
  const std::size_t expected_candidates =
      2500 - kb.pairs(Split::kTrain, 1).size() - kb.pairs(Split::kValid, 1).size();
  for (std::size_t block : {1u, 7u, 16u, 1024u}) {
    for (std::size_t workers : {1u, 3u, 4u}) {
      const auto r = ScanRelation(scorer, 1, 100, filter, {block, workers});
      EXPECT_EQ(r.top, oracle) << block << " " << workers;
      EXPECT_EQ(r.candidates, expected_candidates);
    }
  }
}

TEST(ScanRelation, TiedTableMatchesOracle) {
  std::mt19937_64 rng(7);
  const auto kb = testing::RandomKb(23, 2, 60, 10, 10, rng);
  const auto table = testing::RandomTable(kb, rng, 3);
  ScanFilter filter;
  filter.excluded = {&kb.pairs(Split::kTrain, 0)};
  for (std::size_t k : {1u, 5u, 40u, 1000u}) {
    const auto oracle = ScanOracle(table, 0, k, filter);
    for (std::size_t block : {2u, 5u, 64u}) {
      EXPECT_EQ(ScanRelation(table, 0, k, filter, {block, 2}).top, oracle);
    }
  }
}

}  // namespace
}  // namespace kbc
