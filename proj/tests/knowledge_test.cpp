#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "airstar/error.hpp"
#include "airstar/knowledge.hpp"
#include "test_support.hpp"

namespace airstar::kb {
namespace {

KnowledgeEntry entry(std::string id, std::string text, EntryKind kind = EntryKind::kWebInfo) {
  KnowledgeEntry e;
  e.id = std::move(id);
  e.kind = kind;
  e.text = std::move(text);
  return e;
}

std::string temp_journal(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("airstar_kb_" + name + ".ndjson");
  std::filesystem::remove(p);
  return p.string();
}

TEST(KnowledgeBase, IngestReplacesById) {
  KnowledgeBase kb;
  kb.ingest(entry("a", "first text"));
  kb.ingest(entry("a", "second text"));
  EXPECT_EQ(kb.size(), 1u);
  EXPECT_EQ(kb.find("a")->text, "second text");
  EXPECT_EQ(kb.find("b"), nullptr);
  EXPECT_THROW(kb.ingest(entry("", "x")), Error);
  EXPECT_THROW(kb.ingest(entry("c", "   ")), Error);
}

TEST(KnowledgeBase, JournalReplayLastLineWins) {
  const std::string path = temp_journal("replay");
  {
    KnowledgeBase kb(path);
    kb.ingest(entry("a", "library opens at eight"));
    kb.ingest(entry("b", "gym closes at ten"));
    kb.ingest(entry("a", "library opens at nine"));
  }
  KnowledgeBase again(path);
  EXPECT_EQ(again.size(), 2u);
  EXPECT_EQ(again.find("a")->text, "library opens at nine");
  std::filesystem::remove(path);
}

TEST(KnowledgeBase, CorruptJournalNamesTheLine) {
  const std::string path = temp_journal("corrupt");
  {
    std::ofstream out(path);
    out << to_json(entry("a", "fine")).dump() << "\n{not json\n";
  }
  try {
    KnowledgeBase kb(path);
    FAIL() << "expected SchemaError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaError);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(KnowledgeBase, EntryJsonRoundTrip) {
  KnowledgeEntry e = entry("x", "some text", EntryKind::kNavigationRecord);
  e.tags = {"t1", "t2"};
  e.created_at = 12.5;
  EXPECT_EQ(entry_from_json(to_json(e)), e);
  nlohmann::json bad = to_json(e);
  bad["kind"] = "rumor";
  EXPECT_THROW(entry_from_json(bad), Error);
}

TEST(Retrieve, EntryMatchesItsOwnText) {
  const sim::World w = airstar::testing::campus_world();
  KnowledgeBase kb;
  const auto entries = scenario_entries(w.sc());
  kb.ingest(entries);
  for (const auto& e : entries) {
    const auto hits = kb.retrieve(e.text, "", 1);
    ASSERT_FALSE(hits.empty()) << e.id;
    EXPECT_NEAR(hits[0].score, 1.0, 1e-9) << e.id;
  }
}

TEST(Retrieve, NoOverlapIsEmpty) {
  KnowledgeBase kb;
  kb.ingest(entry("a", "library opens at nine"));
  EXPECT_TRUE(kb.retrieve("zebra xylophone", "").empty());
  EXPECT_TRUE(KnowledgeBase().retrieve("library", "").empty());
  EXPECT_THROW(kb.retrieve("library", "", 0), Error);
}

TEST(Retrieve, HandComputedTfIdf) {
  KnowledgeBase kb;
  kb.ingest(entry("a", "red apple"));
  kb.ingest(entry("b", "green apple"));
  kb.ingest(entry("c", "red car red"));
  // N = 3; df(red) = df(apple) = 2, df(car) = df(green) = 1.
  const double i_red = std::log(4.0 / 3.0) + 1.0;
  const double i_car = std::log(2.0) + 1.0;
  const double score_c = 2.0 * i_red / std::sqrt(4.0 * i_red * i_red + i_car * i_car);
  const double score_a = 1.0 / std::sqrt(2.0);
  const auto hits = kb.retrieve("red", "", 5);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].entry.id, "c");
  EXPECT_NEAR(hits[0].score, score_c, 1e-12);
  EXPECT_NEAR(hits[0].score, 0.83559, 1e-5);
  EXPECT_EQ(hits[1].entry.id, "a");
  EXPECT_NEAR(hits[1].score, score_a, 1e-12);
  // The perception summary joins the query.
  const auto both = kb.retrieve("red", "green", 5);
  EXPECT_EQ(both.size(), 3u);
}

TEST(Retrieve, TiesBreakById) {
  KnowledgeBase kb;
  kb.ingest(entry("z", "court"));
  kb.ingest(entry("m", "court"));
  const auto hits = kb.retrieve("court", "", 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].entry.id, "m");
  EXPECT_EQ(hits[1].entry.id, "z");
}

TEST(RecordOutcome, StoresPlanSummary) {
  KnowledgeBase kb;
  const nlohmann::json plan = {
      {"plan_id", "plan-1"},
      {"attempt", 0},
      {"steps", {{{"tool", "geo_navigate"}, {"params", {{"landmark", "Library"}, {"map", "uav_autonomous"}}}},
                 {{"tool", "announce_arrival"}, {"params", nlohmann::json::object()}}}}};
  const KnowledgeEntry& e = kb.record_outcome("Go to the library", plan, "succeeded", 12.3);
  EXPECT_EQ(e.kind, EntryKind::kHistoricalPlan);
  EXPECT_EQ(e.id, "plan-000012300-0");
  EXPECT_EQ(e.text,
            "instruction: Go to the library | plan: geo_navigate landmark=Library map=uav_autonomous; "
            "announce_arrival; | outcome: succeeded");
  const auto hits = kb.retrieve("go to the library", "", 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].entry.id, e.id);
  EXPECT_EQ(kb.record_outcome("x", plan, "failed", 12.3).id, "plan-000012300-1");
}

TEST(PerceptionSummary, UniqueTagsInOrder) {
  sim::ViewFrame f;
  sim::VisibleObject a;
  a.class_tag = "building";
  a.landmark_tags = {"library"};
  sim::VisibleObject b;
  b.class_tag = "tree";
  b.landmark_tags = {"library"};
  f.objects = {a, b};
  EXPECT_EQ(perception_summary(f), "building library tree");
}

}  // namespace
}  // namespace airstar::kb
