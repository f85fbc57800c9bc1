#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "textlcd/observation_db.hpp"

using namespace textlcd;

namespace {

TextEntity entity(const std::string& content, const Vec3& t, double conf = 0.9) {
  TextEntity e;
  e.content = content;
  e.pose_in_anchor = Pose::from_translation(t);
  e.confidence = conf;
  return e;
}

struct Inserted {
  std::size_t frame;
  TextEntity e;
};

std::vector<Inserted> random_inserts(std::uint64_t seed, int n) {
  const std::vector<std::string> words = {"EXIT", "DANGER", "POWER", "S1-B1A-01", "OFFICE"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> frame(0, 300), word(0, words.size() - 1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<Inserted> out;
  for (int i = 0; i < n; ++i) {
    auto e = entity(words[word(rng)], {u(rng), u(rng), u(rng)});
    e.category = e.content[0] == 'S' ? TextCategory::ID : TextCategory::Generic;
    out.push_back({frame(rng), e});
  }
  return out;
}

}  // namespace

TEST(ObservationDb, InsertThenRetrieve) {
  ObservationDatabase db;
  EXPECT_TRUE(db.insert(7, entity("EXIT", {1, 0, 0})));
  ASSERT_EQ(db.frames_observing("EXIT").size(), 1u);
  EXPECT_EQ(db.frames_observing("EXIT")[0].frame, 7u);
  ASSERT_EQ(db.entities_in_frame(7).size(), 1u);
  EXPECT_EQ(db.entities_in_frame(7)[0].content, "EXIT");
}

TEST(ObservationDb, SameContentDifferentPosesKept) {
  ObservationDatabase db;
  EXPECT_TRUE(db.insert(3, entity("EXIT", {1, 0, 0})));
  EXPECT_TRUE(db.insert(3, entity("EXIT", {2, 0, 0})));
  EXPECT_EQ(db.entities_in_frame(3).size(), 2u);
  EXPECT_EQ(db.frames_observing("EXIT").size(), 2u);
}

TEST(ObservationDb, ExactDuplicateRejected) {
  ObservationDatabase db;
  EXPECT_TRUE(db.insert(3, entity("EXIT", {1, 0, 0})));
  EXPECT_FALSE(db.insert(3, entity("EXIT", {1, 0, 0}, 0.5)));
  EXPECT_EQ(db.size(), 1u);
  EXPECT_TRUE(db.audit());
}

TEST(ObservationDb, UnseenIsEmpty) {
  ObservationDatabase db;
  EXPECT_TRUE(db.frames_observing("EXIT").empty());
  EXPECT_TRUE(db.entities_in_frame(0).empty());
}

TEST(ObservationDb, FramesInInsertionOrder) {
  ObservationDatabase db;
  db.insert(5, entity("EXIT", {0, 0, 0}));
  db.insert(90, entity("EXIT", {0, 0, 0}));
  const auto& seen = db.frames_observing("EXIT");
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0].frame, 5u);
  EXPECT_EQ(seen[1].frame, 90u);
}

TEST(ObservationDb, AuditAfterRandomInserts) {
  ObservationDatabase db;
  for (const auto& [frame, e] : random_inserts(1, 1000)) db.insert(frame, e);
  EXPECT_EQ(db.size(), 1000u);
  EXPECT_TRUE(db.audit());
}

TEST(ObservationDb, LookupsMatchLinearScan) {
  const auto inserts = random_inserts(2, 10000);
  ObservationDatabase db;
  for (const auto& [frame, e] : inserts) db.insert(frame, e);
  for (const std::string content : {"EXIT", "DANGER", "S1-B1A-01", "MISSING"}) {
    std::vector<std::size_t> expected;
    for (const auto& [frame, e] : inserts) {
      if (e.content == content) expected.push_back(frame);
    }
    const auto& got = db.frames_observing(content);
    ASSERT_EQ(got.size(), expected.size()) << content;
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].frame, expected[i]);
  }
  for (std::size_t f : {0u, 17u, 150u, 300u, 301u}) {
    std::vector<std::string> expected;
    for (const auto& [frame, e] : inserts) {
      if (frame == f) expected.push_back(e.content);
    }
    const auto& got = db.entities_in_frame(f);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].content, expected[i]);
  }
}

TEST(ObservationDb, DumpLoadRoundTrip) {
  ObservationDatabase db;
  for (const auto& [frame, e] : random_inserts(3, 200)) db.insert(frame, e);
  std::stringstream first;
  db.dump_jsonl(first);
  std::istringstream in(first.str());
  const auto loaded = ObservationDatabase::load_jsonl(in);
  EXPECT_EQ(loaded.size(), db.size());
  EXPECT_TRUE(loaded.audit());
  std::stringstream second;
  loaded.dump_jsonl(second);
  EXPECT_EQ(first.str(), second.str());
}

TEST(ObservationDb, LoadRejectsMalformedLine) {
  std::istringstream in("{\"frame\": 1, \"text\": \"EXIT\"}\n");
  try {
    ObservationDatabase::load_jsonl(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRecord);
  }
}
