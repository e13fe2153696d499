#include <gtest/gtest.h>

#include "lars/engine/annotation.hpp"
#include "support.hpp"

using namespace lars;
using namespace lars::engine;

namespace {

struct Fixture {
  std::shared_ptr<Vocabulary> vocab = std::make_shared<Vocabulary>();
  Database db;

  ExtendedAtom literal(const std::string& text) { return test::literal(text, vocab); }
  void arrive(const std::string& atom, Time t, Count k = 0) {
    GroundAtom g = test::atom(atom, *vocab);
    if (k) {
      db.add_arrival(g, t, k);
    } else {
      db.add(g, Annotation::at(t));
    }
  }
  std::vector<Annotation> annotations(const ExtendedAtom& alpha, Time tb, Time te) {
    std::vector<Annotation> out;
    for (const auto& f : grd(alpha, db, tb, te)) out.push_back(f.annotation);
    std::sort(out.begin(), out.end());
    return out;
  }
};

}  // namespace

TEST(Grd, TimeDiamondExtendsHorizonByWindow) {
  Fixture f;
  auto alpha = f.literal("[9 t] <> a(X)");
  f.arrive("a(y)", 5);
  auto first = grd(alpha, f.db, 0, 5);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].annotation.c, 5u);
  EXPECT_EQ(first[0].annotation.h, 14u);
  EXPECT_EQ(to_string(first[0].formula, *f.vocab), "[9 t] <> a(y)");
  EXPECT_EQ(f.vocab->to_string(*first[0].sigma.lookup(f.vocab->symbols().intern("X"))), "y");

  f.arrive("a(y)", 8);
  auto both = f.annotations(alpha, 0, 8);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[0].c, 5u);
  EXPECT_EQ(both[0].h, 14u);
  EXPECT_EQ(both[1].c, 8u);
  EXPECT_EQ(both[1].h, 17u);
}

TEST(Grd, TimeBoxHoldsOnlyAtTheEvaluationTime) {
  Fixture f;
  auto alpha = f.literal("[2 t] [] a(X)");
  f.arrive("a(y)", 5);
  f.arrive("a(y)", 6);
  f.arrive("a(y)", 7);
  auto got = f.annotations(alpha, 0, 7);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].c, 7u);
  EXPECT_EQ(got[0].h, 7u);
}

TEST(Grd, TimeBoxNeedsEveryPointOfTheWindow) {
  Fixture f;
  auto alpha = f.literal("[2 t] [] a(X)");
  f.arrive("a(y)", 5);
  f.arrive("a(y)", 7);
  EXPECT_TRUE(f.annotations(alpha, 0, 7).empty());
  // Near the timeline start the window is clamped, so one point suffices.
  Fixture g;
  g.arrive("a(y)", 0);
  EXPECT_EQ(g.annotations(g.literal("[2 t] [] a(X)"), 0, 0).size(), 1u);
}

TEST(Grd, TupleDiamondCountsArrivals) {
  Fixture f;
  auto alpha = f.literal("[3 #] <> b(Y,Z)");
  f.arrive("a(x1,y)", 36, 1);
  f.arrive("a(x2,y)", 38, 2);
  f.arrive("b(y,z)", 38, 3);
  auto got = grd(alpha, f.db, 35, 38);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].annotation.cc, 3u);
  EXPECT_EQ(got[0].annotation.hc, 5u);
  EXPECT_TRUE(got[0].annotation.valid_at(41, 4));
  EXPECT_TRUE(got[0].annotation.valid_at(50, 5));
  EXPECT_FALSE(got[0].annotation.valid_at(50, 6));
}

TEST(Grd, PlainAndAtAtoms) {
  Fixture f;
  f.arrive("a(y)", 4);
  f.arrive("a(z)", 6);
  auto plain = f.annotations(f.literal("a(X)"), 0, 6);
  ASSERT_EQ(plain.size(), 2u);
  EXPECT_EQ(plain[0], Annotation::at(4));

  auto at = grd(f.literal("[3 t] @[T] a(X)"), f.db, 0, 6);
  ASSERT_EQ(at.size(), 2u);
  for (const auto& g : at) {
    const Time u = static_cast<Time>(g.sigma.lookup(f.vocab->symbols().intern("T"))->as_integer());
    EXPECT_EQ(g.annotation.c, u);
    EXPECT_EQ(g.annotation.h, u + 3);
  }
}

TEST(Grd, TimeWindowDropsExpiredGroundings) {
  Fixture f;
  f.arrive("a(y)", 1);
  EXPECT_TRUE(f.annotations(f.literal("[2 t] <> a(X)"), 0, 9).empty());
  EXPECT_EQ(f.annotations(f.literal("[8 t] <> a(X)"), 0, 9).size(), 1u);
}
