/*
 * Copyright 2026 The cfscope Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "cfscope/json_io.h"

#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <thread>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "cfscope/status_macros.h"

namespace cfscope {
namespace {

namespace fs = std::filesystem;
using ::nlohmann::json;

absl::Status JsonError(absl::string_view message) {
  return MakeError(absl::StatusCode::kInvalidArgument, kInvalidJson, message);
}

absl::Status ForestError(absl::string_view message) {
  return MakeError(absl::StatusCode::kInvalidArgument, "InvalidForest",
                   message);
}

OrderedJson OptionalInt(const std::optional<int>& v) {
  return v ? OrderedJson(*v) : OrderedJson(nullptr);
}

std::optional<int> ReadOptionalInt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

OrderedJson SpansJson(const std::vector<CharSpan>& spans) {
  OrderedJson out = OrderedJson::array();
  for (const CharSpan& s : spans) out.push_back({s.start, s.end});
  return out;
}

}  // namespace

OrderedJson CounterfactualToJson(const std::string& id,
                                 const Counterfactual& cf) {
  OrderedJson j;
  j["id"] = id;
  j["bits"] = cf.vector.BitString();
  j["choices"] = cf.vector.choice;
  j["text"] = cf.text;
  j["word_count"] = cf.word_count;
  return j;
}

absl::StatusOr<std::pair<std::string, Counterfactual>> CounterfactualFromJson(
    const json& j) {
  try {
    Counterfactual cf;
    const std::string bits = j.at("bits").get<std::string>();
    for (char c : bits) {
      if (c != '0' && c != '1') return JsonError("bits must be 0/1");
      cf.vector.inclusion.push_back(c == '1');
    }
    cf.vector.choice = j.at("choices").get<std::vector<int>>();
    if (cf.vector.choice.size() != cf.vector.inclusion.size()) {
      return JsonError("choices and bits differ in length");
    }
    cf.text = j.at("text").get<std::string>();
    cf.word_count = j.at("word_count").get<int>();
    return std::make_pair(j.at("id").get<std::string>(), std::move(cf));
  } catch (const json::exception& e) {
    return JsonError(absl::StrCat("counterfactual: ", e.what()));
  }
}

OrderedJson EvaluatorToJson(const Evaluator& ev) {
  OrderedJson j;
  j["name"] = ev.name;
  j["operator"] = std::string(OperatorName(ev.op));
  j["argument"] = ev.argument;
  return j;
}

absl::StatusOr<Evaluator> EvaluatorFromJson(const json& j) {
  Evaluator ev;
  try {
    ev.name = j.at("name").get<std::string>();
    ev.argument = j.at("argument").get<std::string>();
    ASSIGN_OR_RETURN(ev.op,
                     ParseOperator(j.at("operator").get<std::string>()));
  } catch (const json::exception& e) {
    return MakeError(absl::StatusCode::kInvalidArgument, "EvaluatorInvalid",
                     e.what());
  }
  RETURN_IF_ERROR(ValidateEvaluator(ev));
  return ev;
}

OrderedJson OutcomeRecordToJson(const OutcomeRecord& r) {
  OrderedJson j;
  j["id"] = r.cf_id;
  j["outcome"] = r.samples.empty() ? OrderedJson(nullptr) : OrderedJson(r.outcome);
  OrderedJson samples = OrderedJson::array();
  for (bool s : r.samples) samples.push_back(s);
  j["samples"] = std::move(samples);
  j["requested_n"] = r.requested_n;
  OrderedJson failures = OrderedJson::array();
  for (const SampleFailure& f : r.failures) {
    OrderedJson fj;
    fj["index"] = f.sample_index;
    fj["code"] = f.code;
    fj["message"] = f.message;
    failures.push_back(std::move(fj));
  }
  j["failures"] = std::move(failures);
  j["raw_responses"] = r.raw_responses;
  return j;
}

absl::StatusOr<OutcomeRecord> OutcomeRecordFromJson(const json& j) {
  try {
    OutcomeRecord r;
    r.cf_id = j.at("id").get<std::string>();
    r.outcome = j.at("outcome").is_null() ? 0.0 : j.at("outcome").get<double>();
    r.samples = j.at("samples").get<std::vector<bool>>();
    r.requested_n = j.at("requested_n").get<int>();
    for (const json& f : j.at("failures")) {
      r.failures.push_back({f.at("index").get<int>(),
                            f.at("code").get<std::string>(),
                            f.at("message").get<std::string>()});
    }
    r.raw_responses = j.at("raw_responses").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    return JsonError(absl::StrCat("outcome record: ", e.what()));
  }
}

OrderedJson ShapResultToJson(const ShapResult& r) {
  OrderedJson j;
  j["v"] = 1;
  j["phi0"] = r.phi0;
  j["phi"] = r.phi;
  j["segment_ids"] = r.segment_ids;
  j["non_identifiable"] = r.non_identifiable;
  OrderedJson d;
  d["rows"] = r.rows;
  d["condition_estimate"] = r.condition_estimate;
  d["residual_norm"] = r.residual_norm;
  j["diagnostics"] = std::move(d);
  return j;
}

absl::StatusOr<ShapResult> ShapResultFromJson(const json& j) {
  try {
    if (j.at("v").get<int>() != 1) return JsonError("unsupported SHAP version");
    ShapResult r;
    r.phi0 = j.at("phi0").get<double>();
    r.phi = j.at("phi").get<std::vector<double>>();
    r.segment_ids = j.at("segment_ids").get<std::vector<int>>();
    r.non_identifiable = j.at("non_identifiable").get<std::vector<int>>();
    const json& d = j.at("diagnostics");
    r.rows = d.at("rows").get<int>();
    r.condition_estimate = d.at("condition_estimate").get<double>();
    r.residual_norm = d.at("residual_norm").get<double>();
    return r;
  } catch (const json::exception& e) {
    return JsonError(absl::StrCat("SHAP result: ", e.what()));
  }
}

OrderedJson SegmentToJson(const Segment& s) {
  OrderedJson j;
  j["id"] = s.id;
  j["kind"] = s.kind == SegmentKind::kDummy ? "dummy" : "normal";
  j["tokens"] = s.token_indices;
  j["cc_token"] = OptionalInt(s.cc_token);
  j["connectors"] = s.connectors;
  j["parent"] = OptionalInt(s.parent);
  j["removability"] = s.removability == Removability::kRemovable
                          ? "removable"
                          : "unremovable";
  j["children"] = s.children;
  j["alternatives"] = s.alternatives;
  j["merged"] = s.merged;
  return j;
}

absl::StatusOr<Segment> SegmentFromJson(const json& j) {
  try {
    Segment s;
    s.id = j.at("id").get<int>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "normal" && kind != "dummy") return JsonError("bad kind");
    s.kind = kind == "dummy" ? SegmentKind::kDummy : SegmentKind::kNormal;
    s.token_indices = j.at("tokens").get<std::vector<int>>();
    s.cc_token = ReadOptionalInt(j.at("cc_token"));
    s.connectors = j.at("connectors").get<std::vector<int>>();
    s.parent = ReadOptionalInt(j.at("parent"));
    const std::string rem = j.at("removability").get<std::string>();
    if (rem != "removable" && rem != "unremovable") {
      return JsonError("bad removability");
    }
    s.removability = rem == "removable" ? Removability::kRemovable
                                        : Removability::kUnremovable;
    s.children = j.at("children").get<std::vector<int>>();
    s.alternatives = j.at("alternatives").get<std::vector<std::string>>();
    s.merged = j.at("merged").get<bool>();
    return s;
  } catch (const json::exception& e) {
    return JsonError(absl::StrCat("segment: ", e.what()));
  }
}

OrderedJson ForestToJson(const SegmentForest& forest) {
  OrderedJson j;
  j["root_id"] = forest.root_id();
  OrderedJson segments = OrderedJson::array();
  for (const auto& [id, seg] : forest.segments()) {
    segments.push_back(SegmentToJson(seg));
  }
  j["segments"] = std::move(segments);
  OrderedJson log = OrderedJson::array();
  for (const MergeRecord& m : forest.merge_log()) {
    OrderedJson before = OrderedJson::array();
    for (const Segment& s : m.before) before.push_back(SegmentToJson(s));
    OrderedJson mj;
    mj["segment_id"] = m.segment_id;
    mj["before"] = std::move(before);
    log.push_back(std::move(mj));
  }
  j["merge_log"] = std::move(log);
  return j;
}

absl::StatusOr<SegmentForest> ForestFromJson(
    const json& j, std::shared_ptr<const SentenceParse> sentence) {
  std::map<int, Segment> segments;
  std::vector<MergeRecord> log;
  int root_id = 0;
  try {
    root_id = j.at("root_id").get<int>();
    for (const json& sj : j.at("segments")) {
      ASSIGN_OR_RETURN(Segment s, SegmentFromJson(sj));
      const int id = s.id;
      if (!segments.emplace(id, std::move(s)).second) {
        return ForestError(absl::StrCat("duplicate segment id ", id));
      }
    }
    for (const json& mj : j.at("merge_log")) {
      MergeRecord m;
      m.segment_id = mj.at("segment_id").get<int>();
      for (const json& sj : mj.at("before")) {
        ASSIGN_OR_RETURN(Segment s, SegmentFromJson(sj));
        m.before.push_back(std::move(s));
      }
      log.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    return JsonError(absl::StrCat("forest: ", e.what()));
  }

  // Tree shape: a root without parent, symmetric parent/child links, every
  // segment reachable from the root.
  auto root = segments.find(root_id);
  if (root == segments.end() || root->second.parent.has_value()) {
    return ForestError("root segment missing or has a parent");
  }
  for (const auto& [id, seg] : segments) {
    if (seg.parent) {
      auto p = segments.find(*seg.parent);
      if (p == segments.end() ||
          std::count(p->second.children.begin(), p->second.children.end(),
                     id) != 1) {
        return ForestError(absl::StrCat("segment ", id, " has a bad parent"));
      }
    } else if (id != root_id) {
      return ForestError(absl::StrCat("segment ", id, " has no parent"));
    }
    for (int c : seg.children) {
      auto child = segments.find(c);
      if (child == segments.end() || child->second.parent != id) {
        return ForestError(absl::StrCat("segment ", id, " has a bad child"));
      }
    }
  }
  std::set<int> seen;
  std::vector<int> stack = {root_id};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur).second) return ForestError("segments form a cycle");
    for (int c : segments.at(cur).children) stack.push_back(c);
  }
  if (seen.size() != segments.size()) {
    return ForestError("some segments are unreachable from the root");
  }

  // Token ownership: each token exactly once.
  const int n = sentence->size();
  std::vector<int> owners(n + 1, 0);
  for (const auto& [id, seg] : segments) {
    std::vector<int> tokens = seg.token_indices;
    tokens.insert(tokens.end(), seg.connectors.begin(), seg.connectors.end());
    if (seg.cc_token) tokens.push_back(*seg.cc_token);
    for (int t : tokens) {
      if (t < 1 || t > n) {
        return ForestError(absl::StrCat("token ", t, " out of range"));
      }
      ++owners[t];
    }
  }
  for (int t = 1; t <= n; ++t) {
    if (owners[t] != 1) {
      return ForestError(
          absl::StrCat("token ", t, " is owned ", owners[t], " times"));
    }
  }
  return SegmentForest(std::move(sentence), std::move(segments), root_id,
                       std::move(log));
}

OrderedJson DocumentSpaceToJson(const DocumentSpace& space) {
  OrderedJson j;
  j["text"] = space.text();
  OrderedJson sentences = OrderedJson::array();
  for (int i = 0; i < space.sentence_count(); ++i) {
    const SpaceSentence& s = space.sentence(i);
    OrderedJson sj;
    sj["conllu"] = SerializeConllu(s.forest.sentence());
    sj["frozen"] = s.frozen;
    sj["base_id"] = s.base_id;
    sj["forest"] = ForestToJson(s.forest);
    sentences.push_back(std::move(sj));
  }
  j["sentences"] = std::move(sentences);
  return j;
}

absl::StatusOr<DocumentSpace> DocumentSpaceFromJson(const json& j) {
  std::string text;
  std::vector<SpaceSentence> sentences;
  try {
    text = j.at("text").get<std::string>();
    for (const json& sj : j.at("sentences")) {
      ASSIGN_OR_RETURN(std::vector<SentenceParse> parses,
                       ParseConlluStrict(sj.at("conllu").get<std::string>()));
      if (parses.size() != 1) {
        return JsonError("each sentence needs exactly one CoNLL-U block");
      }
      auto parse = std::make_shared<const SentenceParse>(std::move(parses[0]));
      ASSIGN_OR_RETURN(SegmentForest forest,
                       ForestFromJson(sj.at("forest"), std::move(parse)));
      sentences.push_back({std::move(forest), sj.at("frozen").get<bool>(),
                           sj.at("base_id").get<int>()});
    }
  } catch (const json::exception& e) {
    return JsonError(absl::StrCat("document space: ", e.what()));
  }
  return DocumentSpace::Create(std::move(text), std::move(sentences));
}

OrderedJson SpaceViewJson(const DocumentSpace& space) {
  OrderedJson j;
  j["text"] = space.text();
  j["dimension"] = space.dimension();
  j["variable_ids"] = space.variable_ids();
  OrderedJson sentences = OrderedJson::array();
  for (int i = 0; i < space.sentence_count(); ++i) {
    const SpaceSentence& s = space.sentence(i);
    OrderedJson sj;
    sj["index"] = i;
    sj["offset"] = space.sentence_offset(i);
    sj["length"] = s.forest.sentence().original_text().size();
    sj["frozen"] = s.frozen;
    sj["base_id"] = s.base_id;
    sj["root_id"] = s.base_id + s.forest.root_id();
    sentences.push_back(std::move(sj));
  }
  j["sentences"] = std::move(sentences);
  OrderedJson segments = OrderedJson::array();
  for (int id : space.segment_ids()) {
    const Segment& seg = space.segment(id);
    const DocumentSpace::Local local = *space.Locate(id);
    OrderedJson sj;
    sj["id"] = id;
    sj["sentence"] = local.sentence;
    sj["parent"] = OptionalInt(space.parent_of(id));
    sj["children"] = space.children_of(id);
    sj["kind"] = seg.kind == SegmentKind::kDummy ? "dummy" : "normal";
    sj["removability"] = seg.removability == Removability::kRemovable
                             ? "removable"
                             : "unremovable";
    sj["bit"] = space.bit_of(id);
    sj["text"] = space.SegmentText(id);
    sj["spans"] = SpansJson(space.SegmentSpans(id));
    sj["alternatives"] = seg.alternatives;
    sj["merged"] = seg.merged;
    segments.push_back(std::move(sj));
  }
  j["segments"] = std::move(segments);
  return j;
}

OrderedJson OutcomeStatsToJson(const OutcomeStats& s) {
  OrderedJson j;
  j["count"] = s.count;
  j["min"] = s.min;
  j["q1"] = s.q1;
  j["median"] = s.median;
  j["q3"] = s.q3;
  j["max"] = s.max;
  j["whisker_lo"] = s.whisker_lo;
  j["whisker_hi"] = s.whisker_hi;
  j["outlier_ids"] = s.outlier_ids;
  return j;
}

OrderedJson GroupSummaryToJson(const GroupSummary& g) {
  OrderedJson j;
  OrderedJson key;
  key["segment_ids"] = g.key.segment_ids;
  OrderedJson pattern = OrderedJson::array();
  for (SegmentState s : g.key.pattern) {
    pattern.push_back(std::string(SegmentStateName(s)));
  }
  key["pattern"] = std::move(pattern);
  j["key"] = std::move(key);
  j["member_cf_ids"] = g.member_cf_ids;
  j["outcome_stats"] = g.outcome_stats ? OutcomeStatsToJson(*g.outcome_stats)
                                       : OrderedJson(nullptr);
  OrderedJson influenced = OrderedJson::array();
  for (int id : g.influenced_segments) {
    OrderedJson ij;
    ij["id"] = id;
    ij["state"] = std::string(SegmentStateName(g.influenced_states.at(id)));
    influenced.push_back(std::move(ij));
  }
  j["influenced_segments"] = std::move(influenced);
  OrderedJson annotation = OrderedJson::array();
  for (const AnnotatedSpan& a : g.annotation) {
    OrderedJson aj;
    aj["start"] = a.char_start;
    aj["end"] = a.char_end;
    aj["state"] = std::string(SegmentStateName(a.state));
    aj["segment_id"] = a.segment_id;
    annotation.push_back(std::move(aj));
  }
  j["annotation"] = std::move(annotation);
  return j;
}

std::string ToJsonLines(const std::vector<OrderedJson>& docs) {
  std::string out;
  for (const OrderedJson& d : docs) absl::StrAppend(&out, d.dump(), "\n");
  return out;
}

absl::StatusOr<std::vector<json>> ParseJsonLines(absl::string_view text) {
  std::vector<json> out;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == absl::string_view::npos) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      return JsonError(absl::StrCat("line ", line_no, " is not valid JSON"));
    }
    out.push_back(std::move(j));
  }
  return out;
}

absl::StatusOr<json> ParseJson(absl::string_view text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return JsonError("body is not valid JSON");
  return j;
}

absl::StatusOr<std::string> ReadFileToString(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return MakeError(absl::StatusCode::kNotFound, "FileUnreadable",
                     absl::StrCat("cannot open ", path.string()));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

absl::Status WriteFileAtomic(const fs::path& path, absl::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp =
      path.string() + ".tmp." +
      std::to_string(std::hash<std::thread::id>()(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      return MakeError(absl::StatusCode::kInternal, "FileWriteFailed",
                       absl::StrCat("cannot write ", tmp.string()));
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return MakeError(absl::StatusCode::kInternal, "FileWriteFailed",
                     absl::StrCat("cannot rename into ", path.string()));
  }
  return absl::OkStatus();
}

}  // namespace cfscope
