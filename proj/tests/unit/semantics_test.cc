#include <gtest/gtest.h>

#include "keyrep/error.h"
#include "keyrep/semantics.h"
#include "oracles.h"

namespace keyrep {
namespace {

LabelMap two_class_map() {
  // Left half class 1 ("A"), right half class 2 ("B").
  Raster<int> ids(20, 10, 1);
  for (int y = 0; y < 10; ++y) {
    for (int x = 10; x < 20; ++x) ids(x, y) = 2;
  }
  return LabelMap(ids, {{1, "A"}, {2, "B"}});
}

TEST(ClassOf, RoundsAndClamps) {
  Raster<int> ids(20, 20, 0);
  ids(10, 11) = 7;
  const LabelMap labels(ids, {{7, "car"}});
  EXPECT_EQ(class_of({10.2, 10.7, 1, {}}, labels), 7);
  EXPECT_EQ(labels.name_of(class_of({10.2, 10.7, 1, {}}, labels)), "car");
  EXPECT_EQ(class_of({10.0, 11.0, 1, {}}, labels), 7);
  EXPECT_EQ(class_of({19.6, 0.0, 1, {}}, labels), 0);
  EXPECT_EQ(labels.name_of(0), kUnlabelled);
}

TEST(ClassOf, UniformMap) {
  const LabelMap labels(Raster<int>(8, 8, 3), {{3, "road"}});
  for (double x : {0.0, 3.4, 7.0}) EXPECT_EQ(class_of({x, x, 1, {}}, labels), 3);
}

TEST(PerClass, HandEnumeratedExample) {
  KeypointSet k;
  k.width = 20;
  k.height = 10;
  // 3 A points, 2 B points, plus one point outside d1.
  k.points = {{1, 1, 1, {}},  {2, 2, 1, {}},  {3, 3, 1, {}},
              {15, 1, 1, {}}, {16, 2, 1, {}}, {4, 4, 1, {}}};
  PairResult pair;
  pair.d1 = {0, 1, 2, 3, 4};
  pair.d2 = {0, 1, 2, 3, 4};
  pair.matches = {{0, 0, 0.1}, {2, 1, 0.3}};
  pair.repeatability = repeatability(2, 5, 5);
  const ClassReport rep = per_class_repeatability(pair, k, two_class_map());
  ASSERT_EQ(rep.classes().size(), 2u);
  EXPECT_EQ(rep.classes().at(1), (ClassStats{3, 2}));
  EXPECT_EQ(rep.classes().at(2), (ClassStats{2, 0}));
  EXPECT_NEAR(*rep.classes().at(1).repeatability(), 0.6667, 1e-4);
  EXPECT_EQ(*rep.classes().at(2).repeatability(), 0.0);
  EXPECT_EQ(rep.total_d1(), 5u);
  EXPECT_EQ(rep.total_matches(), 2u);
  EXPECT_EQ(rep.name_of(1), "A");

  const auto top = rep.top(5);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].name, "A");
  EXPECT_EQ(rep.bottom(1)[0].name, "B");
}

TEST(PerClass, SingleClassEqualsOverall) {
  KeypointSet k;
  k.width = 20;
  k.height = 10;
  k.points = {{1, 1, 1, {}}, {2, 2, 1, {}}, {3, 3, 1, {}}};
  PairResult pair;
  pair.d1 = {0, 1, 2};
  pair.d2 = {0, 1, 2, 3};
  pair.matches = {{1, 3, 1.0}};
  pair.repeatability = repeatability(1, 3, 4);
  const ClassReport rep = per_class_repeatability(pair, k, LabelMap(Raster<int>(20, 10, 4)));
  EXPECT_EQ(*rep.overall_repeatability(), *pair.repeatability);
}

TEST(PerClass, MergeIsMicroAverage) {
  ClassReport a, b;
  a.add(1, {10, 9});
  b.add(1, {90, 9});
  b.add(2, {0, 0});
  a.merge(b);
  EXPECT_EQ(a.classes().at(1), (ClassStats{100, 18}));
  EXPECT_NEAR(*a.classes().at(1).repeatability(), 0.18, 1e-15);
  EXPECT_FALSE(a.classes().at(2).repeatability());
  // Undefined classes are left out of the ranked views.
  EXPECT_EQ(a.top(5).size(), 1u);
  EXPECT_EQ(a.bottom(5).size(), 1u);
}

TEST(PerClass, PartitionOnRenderedCorridor) {
  const SceneSpec scene = oracle::corridor_scene(3);
  const FrameBundle b1 = render(scene, 0), b2 = render(scene, 1);
  const KeypointSet k1 = detect_fast(b1.image), k2 = detect_fast(b2.image);
  const PairResult pair = evaluate_keypoints(b1, k1, b2, k2, EvalParams{});
  const ClassReport rep = per_class_repeatability(pair, k1, *b1.labels);
  EXPECT_EQ(rep.total_d1(), pair.n_d1());
  EXPECT_EQ(rep.total_matches(), pair.matches.size());
  ASSERT_TRUE(pair.repeatability);
  EXPECT_NEAR(*rep.overall_repeatability(), *pair.repeatability, 1e-12);
}

TEST(PerClass, ShapeMismatchThrows) {
  KeypointSet k;
  k.width = 30;
  k.height = 10;
  EXPECT_THROW(per_class_repeatability(PairResult{}, k, two_class_map()), ParameterError);
}

}  // namespace
}  // namespace keyrep
