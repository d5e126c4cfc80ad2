#include "airstar/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "airstar/error.hpp"
#include "airstar/text.hpp"

namespace airstar::kb {

using nlohmann::json;

namespace {

constexpr std::pair<EntryKind, const char*> kKindNames[] = {
    {EntryKind::kHistoricalPlan, "historical_plan"},
    {EntryKind::kNavigationRecord, "navigation_record"},
    {EntryKind::kLandmarkDescription, "landmark_description"},
    {EntryKind::kWebInfo, "web_info"},
};

using TermCounts = std::unordered_map<std::string, double>;

TermCounts term_counts(const std::string& s) {
  TermCounts tf;
  for (auto& t : text::tokenize(s)) tf[std::move(t)] += 1.0;
  return tf;
}

}  // namespace

const char* to_string(EntryKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<EntryKind> entry_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (s == name) return kind;
  }
  return std::nullopt;
}

json to_json(const KnowledgeEntry& e) {
  return {{"id", e.id},
          {"kind", to_string(e.kind)},
          {"text", e.text},
          {"tags", e.tags},
          {"created_at", e.created_at}};
}

KnowledgeEntry entry_from_json(const json& j) {
  try {
    KnowledgeEntry e;
    e.id = j.at("id").get<std::string>();
    const auto kind = entry_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) fail(ErrorCode::kSchemaError, "knowledge entry " + e.id + ": unknown kind");
    e.kind = *kind;
    e.text = j.at("text").get<std::string>();
    e.tags = j.value("tags", std::vector<std::string>{});
    e.created_at = j.value("created_at", 0.0);
    if (e.id.empty()) fail(ErrorCode::kSchemaError, "knowledge entry with empty id");
    if (text::trim(e.text).empty()) fail(ErrorCode::kSchemaError, "knowledge entry " + e.id + ": empty text");
    return e;
  } catch (const json::exception& ex) {
    fail(ErrorCode::kSchemaError, std::string("knowledge entry: ") + ex.what());
  }
}

KnowledgeBase::KnowledgeBase(std::string journal_path) : journal_(std::move(journal_path)) {
  std::ifstream in(journal_);
  if (!in) return;  // a fresh journal
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      KnowledgeEntry e = entry_from_json(json::parse(line));
      entries_[e.id] = std::move(e);
    } catch (const std::exception& ex) {
      fail(ErrorCode::kSchemaError, journal_ + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
}

void KnowledgeBase::ingest(std::span<const KnowledgeEntry> entries) {
  for (const auto& e : entries) {
    if (e.id.empty() || text::trim(e.text).empty()) {
      fail(ErrorCode::kInvalidArgument, "knowledge entries need an id and text");
    }
  }
  if (!journal_.empty()) {
    std::ofstream out(journal_, std::ios::app);
    if (!out) fail(ErrorCode::kIoError, "cannot append to " + journal_);
    for (const auto& e : entries) out << to_json(e).dump() << '\n';
    if (!out) fail(ErrorCode::kIoError, "write failed on " + journal_);
  }
  for (const auto& e : entries) entries_[e.id] = e;
}

const KnowledgeEntry* KnowledgeBase::find(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<KnowledgeEntry> KnowledgeBase::entries() const {
  std::vector<KnowledgeEntry> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(e);
  return out;
}

std::vector<ScoredEntry> KnowledgeBase::retrieve(const std::string& instruction,
                                                 const std::string& perception,
                                                 std::size_t k) const {
  if (k == 0) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  std::vector<const KnowledgeEntry*> docs;
  std::vector<TermCounts> tfs;
  std::unordered_map<std::string, double> df;
  for (const auto& [id, e] : entries_) {
    docs.push_back(&e);
    tfs.push_back(term_counts(e.text));
    for (const auto& [t, n] : tfs.back()) df[t] += 1.0;
  }
  const double n_docs = static_cast<double>(docs.size());
  auto idf = [&](const std::string& t) {
    auto it = df.find(t);
    return it == df.end() ? 0.0 : std::log((1.0 + n_docs) / (1.0 + it->second)) + 1.0;
  };

  const TermCounts q_tf = term_counts(instruction + " " + perception);
  TermCounts q;
  double q_norm = 0.0;
  for (const auto& [t, n] : q_tf) {
    const double w = n * idf(t);
    if (w == 0.0) continue;
    q[t] = w;
    q_norm += w * w;
  }
  std::vector<ScoredEntry> out;
  if (q_norm == 0.0) return out;
  q_norm = std::sqrt(q_norm);

  for (std::size_t i = 0; i < docs.size(); ++i) {
    double dot = 0.0;
    double d_norm = 0.0;
    for (const auto& [t, n] : tfs[i]) {
      const double w = n * idf(t);
      d_norm += w * w;
      if (auto it = q.find(t); it != q.end()) dot += w * it->second;
    }
    if (dot <= 0.0) continue;
    out.push_back({*docs[i], dot / (q_norm * std::sqrt(d_norm))});
  }
  std::sort(out.begin(), out.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entry.id < b.entry.id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

const KnowledgeEntry& KnowledgeBase::record_outcome(const std::string& instruction, const json& plan,
                                                    const std::string& outcome, double time) {
  std::size_t n = 0;
  for (const auto& [id, e] : entries_) n += e.kind == EntryKind::kHistoricalPlan ? 1 : 0;
  std::ostringstream id;
  id << "plan-" << std::setw(9) << std::setfill('0') << std::llround(time * 1000.0) << "-" << n;

  std::ostringstream body;
  body << "instruction: " << instruction << " | plan:";
  if (plan.is_object() && plan.contains("steps")) {
    for (const auto& s : plan["steps"]) {
      body << " " << s.value("tool", std::string("?"));
      const json params = s.value("params", json::object());
      for (const auto& [key, value] : params.items()) {
        body << " " << key << "=" << (value.is_string() ? value.get<std::string>() : value.dump());
      }
      body << ";";
    }
  }
  body << " | outcome: " << outcome;

  KnowledgeEntry e;
  e.id = id.str();
  e.kind = EntryKind::kHistoricalPlan;
  e.text = body.str();
  e.tags = {"plan", outcome};
  e.created_at = time;
  ingest(e);
  return entries_.at(e.id);
}

std::vector<KnowledgeEntry> scenario_entries(const sim::Scene& scene) {
  std::vector<KnowledgeEntry> out;
  for (const auto& j : scene.knowledge) out.push_back(entry_from_json(j));
  for (const auto& lm : scene.landmarks) {
    KnowledgeEntry e;
    e.id = "landmark:" + lm.id;
    e.kind = EntryKind::kLandmarkDescription;
    e.text = lm.name + ". " + lm.description + " " + lm.orientation_tag;
    e.tags = lm.aliases;
    e.tags.insert(e.tags.begin(), lm.name);
    out.push_back(std::move(e));
  }
  return out;
}

std::string perception_summary(const sim::ViewFrame& frame) {
  std::vector<std::string> tags;
  auto add = [&](const std::string& t) {
    if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
  };
  for (const auto& o : frame.objects) {
    add(o.class_tag);
    for (const auto& t : o.landmark_tags) add(t);
  }
  std::string out;
  for (const auto& t : tags) out += (out.empty() ? "" : " ") + t;
  return out;
}

}  // namespace airstar::kb
