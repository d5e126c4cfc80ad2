// Deterministic stand-in for the LLM planning backend.
#include <cstdio>
#include <limits>
#include <regex>

#include "airstar/error.hpp"
#include "airstar/geo_nav.hpp"
#include "airstar/planner.hpp"
#include "airstar/text.hpp"

namespace airstar::planner {

namespace {

std::string strip_phrase(std::string s) {
  s = text::trim(s);
  while (!s.empty() && std::string_view(".!?,;:").find(s.back()) != std::string_view::npos) s.pop_back();
  s = text::trim(s);
  for (const char* article : {"the ", "a ", "an "}) {
    if (s.rfind(article, 0) == 0) s = s.substr(std::string_view(article).size());
  }
  return s;
}

bool is_question(const std::string& lower) {
  if (lower.find('?') != std::string::npos) return true;
  const auto tokens = text::tokenize(lower);
  if (tokens.empty()) return false;
  static const std::set<std::string> openers = {"what", "which", "who",  "where", "when",
                                                "how",  "why",   "is",   "are",   "can",
                                                "could", "does", "tell", "describe"};
  return openers.contains(tokens.front());
}

json step(const std::string& tool, json params = json::object()) {
  return {{"tool", tool}, {"params", std::move(params)}};
}

// Whole-word occurrence of `needle` in `hay` (both lowercase).
bool contains_phrase(const std::string& hay, const std::string& needle) {
  if (needle.empty()) return false;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(hay[pos - 1]));
    const std::size_t end = pos + needle.size();
    const bool right = end == hay.size() || !std::isalnum(static_cast<unsigned char>(hay[end]));
    if (left && right) return true;
  }
  return false;
}

}  // namespace

std::string make_plan_id(const std::string& instruction, int attempt) {
  // FNV-1a over the normalized instruction and attempt.
  std::uint64_t h = 1469598103934665603ULL;
  const std::string key = text::to_lower(text::trim(instruction)) + "#" + std::to_string(attempt);
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "plan-%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

std::string MockPlanner::canonical_landmark(const std::string& phrase) const {
  if (phrase.empty()) fail(ErrorCode::kNoMatch, "no landmark named");
  const sim::LandmarkNode* lm = geo::find_landmark(landmarks_, phrase);
  if (lm == nullptr) fail(ErrorCode::kNoMatch, "no landmark matches '" + phrase + "'");
  return lm->name;
}

json MockPlanner::first_plan(const PromptContext& ctx) const {
  const std::string lower = text::to_lower(text::trim(ctx.instruction));
  const auto icase = std::regex::ECMAScript | std::regex::icase;
  static const std::regex guide(R"(\b(?:guide|lead|take) me to (.+)$)", icase);
  static const std::regex relation(R"(\bfly (ahead of|in front of|behind|above|over) (.+)$)", icase);
  static const std::regex go(R"(\b(?:go|fly|navigate) to (.+)$)", icase);
  static const std::regex follow(R"(\b(?:follow|track) (.+)$)", icase);
  static const std::regex picture(R"(\b(?:take (?:my|a) (?:picture|photo)|photo of me|gesture)\b)", icase);
  static const std::regex near(R"(\bnear (.+)$)", icase);
  std::smatch m;

  json steps = json::array();
  if (std::regex_search(lower, m, guide)) {
    steps.push_back(step("geo_navigate", {{"landmark", canonical_landmark(strip_phrase(m[1]))},
                                          {"map", "pedestrian_guide"}}));
    steps.push_back(step("announce_arrival"));
    steps.push_back(step("return_to_user"));
  } else if (std::regex_search(lower, m, relation)) {
    steps.push_back(step("object_navigate", {{"instruction", text::trim(ctx.instruction)}}));
  } else if (std::regex_search(lower, m, go)) {
    steps.push_back(step("geo_navigate", {{"landmark", canonical_landmark(strip_phrase(m[1]))},
                                          {"map", "uav_autonomous"}}));
  } else if (std::regex_search(lower, m, follow)) {
    const std::string query = strip_phrase(m[1]);
    if (query.empty()) fail(ErrorCode::kNoMatch, "nothing to follow");
    steps.push_back(step("track", {{"query", query}}));
  } else if (std::regex_search(lower, m, picture)) {
    steps.push_back(step("frame_human"));
    steps.push_back(step("gesture_session"));
  } else if (is_question(lower)) {
    std::string landmark;
    if (std::regex_search(lower, m, near)) {
      landmark = canonical_landmark(strip_phrase(m[1]));
    } else {
      // The longest landmark name or alias spelled out in the question.
      std::size_t best_len = 0;
      for (const auto& lm : landmarks_) {
        std::vector<std::string> names = lm.aliases;
        names.push_back(lm.name);
        for (const auto& n : names) {
          const std::string ln = text::to_lower(n);
          if (contains_phrase(lower, ln) &&
              (ln.size() > best_len || (ln.size() == best_len && landmark > lm.name))) {
            best_len = ln.size();
            landmark = lm.name;
          }
        }
      }
    }
    if (landmark.empty()) fail(ErrorCode::kNoMatch, "question names no landmark");
    steps.push_back(step("geo_navigate", {{"landmark", landmark}, {"map", "uav_autonomous"}}));
    steps.push_back(step("search_qa", {{"question", text::trim(ctx.instruction)}}));
  } else {
    fail(ErrorCode::kNoMatch, "no rule matches the instruction");
  }
  return {{"plan_id", make_plan_id(ctx.instruction, ctx.attempt)},
          {"attempt", ctx.attempt},
          {"steps", steps}};
}

json MockPlanner::repair(const PromptContext& ctx) const {
  const ExecutionLog& log = ctx.prior_logs.back();
  const StepRecord* failed = log.failure();
  if (failed == nullptr || !log.plan.contains("steps")) return first_plan(ctx);

  const json& old_steps = log.plan["steps"];
  json steps = json::array();
  for (std::size_t i = failed->step; i < old_steps.size(); ++i) steps.push_back(old_steps[i]);
  json& head = steps[0];
  const std::string tool = head.value("tool", std::string());

  switch (failed->failure_cause.value_or(FailureCause::kBlocked)) {
    case FailureCause::kNoPath:
      if (tool == "geo_navigate") {
        const bool was_ped = head["params"].value("map", std::string()) == "pedestrian_guide";
        head["params"]["map"] = was_ped ? "uav_autonomous" : "pedestrian_guide";
      }
      break;
    case FailureCause::kNoTarget:
      if (tool == "object_navigate") {
        const std::string phrase = head["params"].value("instruction", ctx.instruction);
        const sim::LandmarkNode* lm = geo::find_landmark(landmarks_, phrase);
        if (lm == nullptr) {
          // No landmark is named: the closest one to the UAV.
          double best = std::numeric_limits<double>::infinity();
          for (const auto& cand : landmarks_) {
            const double d = horizontal_distance(geo::gps_to_local(reference_, cand.gps), ctx.uav_position);
            if (d < best) {
              best = d;
              lm = &cand;
            }
          }
        }
        if (lm != nullptr) {
          steps.insert(steps.begin(), step("geo_navigate", {{"landmark", lm->name}, {"map", "uav_autonomous"}}));
        }
      }
      break;
    case FailureCause::kTimeout:
      head["params"][kBudgetParam] = 2 * std::max<std::uint64_t>(failed->budget_ticks, 1);
      break;
    default:
      break;
  }
  return {{"plan_id", make_plan_id(ctx.instruction, ctx.attempt)},
          {"attempt", ctx.attempt},
          {"steps", steps}};
}

json MockPlanner::plan(const PromptContext& ctx) {
  if (ctx.attempt > 0 && !ctx.prior_logs.empty()) return repair(ctx);
  return first_plan(ctx);
}

}  // namespace airstar::planner
