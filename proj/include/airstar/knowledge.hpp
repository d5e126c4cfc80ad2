#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airstar/world.hpp"

namespace airstar::kb {

enum class EntryKind { kHistoricalPlan, kNavigationRecord, kLandmarkDescription, kWebInfo };

const char* to_string(EntryKind k);
std::optional<EntryKind> entry_kind_from_string(std::string_view s);

struct KnowledgeEntry {
  std::string id;
  EntryKind kind = EntryKind::kWebInfo;
  std::string text;
  std::vector<std::string> tags;
  double created_at = 0.0;  // simulation seconds

  bool operator==(const KnowledgeEntry&) const = default;
};

nlohmann::json to_json(const KnowledgeEntry& e);
// Throws SchemaError on a malformed or invalid entry (empty id or text).
KnowledgeEntry entry_from_json(const nlohmann::json& j);

struct ScoredEntry {
  KnowledgeEntry entry;
  double score = 0.0;
};

inline constexpr std::size_t kDefaultTopK = 3;

// Entries keyed by id, optionally mirrored to an append-only NDJSON journal.
// Single writer; copies are independent snapshots.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  // Replays the journal when it exists, then appends to it. Throws IoError,
  // or SchemaError naming the bad line.
  explicit KnowledgeBase(std::string journal_path);

  // Insert or replace by id.
  void ingest(std::span<const KnowledgeEntry> entries);
  void ingest(const KnowledgeEntry& e) { ingest(std::span(&e, 1)); }

  std::size_t size() const { return entries_.size(); }
  const KnowledgeEntry* find(const std::string& id) const;
  std::vector<KnowledgeEntry> entries() const;
  const std::string& journal_path() const { return journal_; }

  // TF-IDF cosine between the query (instruction plus perception summary) and
  // each entry text. Descending score, ties by id; zero scores are dropped.
  std::vector<ScoredEntry> retrieve(const std::string& instruction, const std::string& perception,
                                    std::size_t k = kDefaultTopK) const;

  // Appends a historical_plan entry describing a finished mission.
  const KnowledgeEntry& record_outcome(const std::string& instruction, const nlohmann::json& plan,
                                       const std::string& outcome, double time);

 private:
  std::map<std::string, KnowledgeEntry> entries_;
  std::string journal_;
};

// web_info entries from the scenario's knowledge block plus one
// landmark_description per landmark.
std::vector<KnowledgeEntry> scenario_entries(const sim::Scene& scene);

// Visible tags of a frame joined with spaces: the perception summary.
std::string perception_summary(const sim::ViewFrame& frame);

}  // namespace airstar::kb
