#include <gtest/gtest.h>

#include "lars/error.hpp"
#include "support.hpp"

using namespace lars;
using test::names_at;

TEST(TimeWindow, SizeThreeAt41) {
  Vocabulary vocab;
  Stream d = test::fig1_stream(vocab);
  Stream w = time_window(d, 41, 3);
  EXPECT_EQ(w.timeline(), Timeline(38, 41));
  EXPECT_EQ(tuple_size(w), 3u);
  EXPECT_EQ(names_at(w, 38, vocab), (std::vector<std::string>{"a(x2,y)", "b(y,z)"}));
  EXPECT_EQ(names_at(w, 40, vocab), (std::vector<std::string>{"a(x3,y)"}));
  EXPECT_TRUE(w.at(36).empty());
}

TEST(TimeWindow, ClampsAtTimelineStart) {
  Vocabulary vocab;
  Stream d = test::fig1_stream(vocab);
  EXPECT_EQ(time_window(d, 36, 9).timeline(), Timeline(35, 36));
  EXPECT_EQ(time_window(d, 38, 0).timeline(), Timeline(38, 38));
  EXPECT_EQ(tuple_size(time_window(d, 38, 0)), 2u);
}

TEST(TupleWindow, SizeThreeAt40And41) {
  Vocabulary vocab;
  Stream d = test::fig1_stream(vocab);
  EXPECT_EQ(tuple_window(d, 40, 3).timeline(), Timeline(38, 40));
  EXPECT_EQ(tuple_window(d, 41, 3).timeline(), Timeline(38, 41));
  EXPECT_EQ(tuple_window(d, 41, 3), time_window(d, 41, 3));
}

TEST(TupleWindow, SizeTwoDropsTheEarlierArrivalAtTheBoundary) {
  Vocabulary vocab;
  Stream d = test::fig1_stream(vocab);
  Stream w = tuple_window(d, 41, 2);
  EXPECT_EQ(w.timeline(), Timeline(38, 41));
  EXPECT_EQ(names_at(w, 38, vocab), (std::vector<std::string>{"b(y,z)"}));
  EXPECT_EQ(tuple_size(w), 2u);
}

TEST(TupleWindow, FewerAtomsThanSizeTakesWholePrefix) {
  Vocabulary vocab;
  Stream d = test::fig1_stream(vocab);
  Stream w = tuple_window(d.restrict(Timeline(35, 37)), 37, 5);
  EXPECT_EQ(w.timeline(), Timeline(35, 37));
  EXPECT_EQ(tuple_size(w), 1u);
}

TEST(TupleWindow, RejectsSizeZero) { EXPECT_THROW(WindowSpec::tuple(0), ValidationError); }

TEST(Stream, AddIsIdempotentAndKeepsArrivalOrder) {
  Vocabulary vocab;
  Stream s(Timeline(0, 3));
  EXPECT_TRUE(s.add(1, test::atom("b", vocab)));
  EXPECT_TRUE(s.add(1, test::atom("a", vocab)));
  EXPECT_FALSE(s.add(1, test::atom("b", vocab)));
  ASSERT_EQ(s.at(1).size(), 2u);
  EXPECT_EQ(to_string(s.at(1)[0].atom, vocab), "b");
  EXPECT_LT(s.at(1)[0].seq, s.at(1)[1].seq);
  EXPECT_TRUE(s.erase(1, test::atom("b", vocab)));
  EXPECT_FALSE(s.contains(1, test::atom("b", vocab)));
}

TEST(WindowProperties, RandomStreams) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 500; ++round) {
    Vocabulary vocab;
    Stream s = test::random_stream(vocab, rng);
    const Timeline tl = s.timeline();
    for (Time t = tl.start; t <= tl.end; ++t) {
      Stream prefix = s.restrict(Timeline(tl.start, t));
      for (std::uint64_t n = 0; n <= 6; ++n) {
        Stream tw = time_window(prefix, t, n);
        EXPECT_TRUE(tw.is_substream_of(prefix));
        EXPECT_EQ(tw.timeline().end, t);
        EXPECT_EQ(tw.timeline().start, t >= tl.start + n ? t - n : tl.start);
        EXPECT_EQ(tw, time_window(prefix, t, n));
        for (Time u = tw.timeline().start; u <= t; ++u) {
          EXPECT_EQ(tw.at(u).size(), prefix.at(u).size());
        }
        if (n == 0) continue;
        Stream uw = tuple_window(prefix, t, n);
        EXPECT_TRUE(uw.is_substream_of(prefix));
        EXPECT_EQ(uw.timeline().end, t);
        EXPECT_GE(uw.timeline().start, tl.start);
        EXPECT_EQ(tuple_size(uw), std::min<std::size_t>(n, tuple_size(prefix)));
        EXPECT_EQ(uw, tuple_window(prefix, t, n));
        if (tuple_size(prefix) < n) {
          EXPECT_EQ(uw.timeline().start, tl.start);
        }
        // Everything strictly after the window start is kept.
        for (Time u = uw.timeline().start + 1; u <= t; ++u) {
          EXPECT_EQ(uw.at(u).size(), prefix.at(u).size());
        }
      }
    }
  }
}
