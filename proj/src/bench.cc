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


#include "cfscope/bench.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "cfscope/cf_engine.h"
#include "cfscope/segmenter.h"
#include "cfscope/status_macros.h"
#include "httplib.h"

namespace cfscope {
namespace {

namespace fs = std::filesystem;
using ::nlohmann::json;
using ::nlohmann::ordered_json;

absl::Status CheckerError(absl::string_view message) {
  return MakeError(absl::StatusCode::kUnavailable, "CheckerUnavailable",
                   message);
}

SentenceBench BenchOne(const CorpusSentence& item, const BenchConfig& config,
                       GrammarChecker& checker) {
  SentenceBench out;
  out.name = item.name;
  out.words = CountWords(item.parse.original_text());

  const auto start = std::chrono::steady_clock::now();
  const SegmentForest forest = SegmentSentence(
      item.parse, config.rules ? *config.rules : RemovabilityRuleTable::Default());
  const CountResult count = CountValid(forest);
  out.count_valid = count.value;
  std::vector<CounterfactualVector> vectors;
  if (!count.saturated && count.value <= static_cast<uint64_t>(config.cap)) {
    absl::StatusOr<std::vector<CounterfactualVector>> all =
        EnumerateValid(forest, config.cap);
    if (!all.ok()) {
      out.error = all.status().ToString();
      return out;
    }
    vectors = *std::move(all);
  } else {
    out.sampled = true;
    vectors = SampleValid(forest, config.sample, config.seed);
  }
  std::set<std::string> texts;
  for (const CounterfactualVector& v : vectors) {
    absl::StatusOr<Counterfactual> cf = RealizeText(forest, v);
    if (!cf.ok()) {
      out.error = cf.status().ToString();
      return out;
    }
    texts.insert(cf->text);
  }
  out.engine_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  out.perturbations = static_cast<int>(texts.size());

  absl::StatusOr<std::vector<std::string>> base =
      checker.Check(item.parse.original_text());
  if (!base.ok()) {
    out.error = base.status().ToString();
    return out;
  }
  for (const std::string& text : texts) {
    absl::StatusOr<std::vector<std::string>> rules = checker.Check(text);
    if (!rules.ok()) {
      out.error = rules.status().ToString();
      return out;
    }
    ++out.checked;
    if (NewErrorCount(*base, *rules) > 0) {
      ++out.with_new_errors;
      out.flagged.push_back(text);
    }
  }
  return out;
}

}  // namespace

absl::StatusOr<std::unique_ptr<LanguageToolClient>> LanguageToolClient::Create(
    absl::string_view base_url, std::string language) {
  ASSIGN_OR_RETURN(HttpEndpoint endpoint, ParseBaseUrl(base_url));
  return std::unique_ptr<LanguageToolClient>(
      new LanguageToolClient(std::move(endpoint), std::move(language)));
}

absl::StatusOr<std::vector<std::string>> LanguageToolClient::Check(
    absl::string_view text) {
  httplib::Client client(endpoint_.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  const httplib::Params form = {{"text", std::string(text)},
                                {"language", language_}};
  const httplib::Result res =
      client.Post(endpoint_.path_prefix + "/v2/check", form);
  if (!res) return CheckerError(httplib::to_string(res.error()));
  if (res->status != 200) {
    return CheckerError(absl::StrCat("HTTP ", res->status));
  }
  std::vector<std::string> ids;
  try {
    const json doc = json::parse(res->body);
    for (const json& m : doc.at("matches")) {
      ids.push_back(m.at("rule").at("id").get<std::string>());
    }
  } catch (const json::exception& e) {
    return CheckerError(absl::StrCat("malformed checker reply: ", e.what()));
  }
  return ids;
}

int NewErrorCount(const std::vector<std::string>& prototype,
                  const std::vector<std::string>& counterfactual) {
  std::map<std::string, int> forgiven;
  for (const std::string& id : prototype) ++forgiven[id];
  int fresh = 0;
  for (const std::string& id : counterfactual) {
    auto it = forgiven.find(id);
    if (it != forgiven.end() && it->second > 0) {
      --it->second;
    } else {
      ++fresh;
    }
  }
  return fresh;
}

absl::StatusOr<int> GrammarNewErrors(absl::string_view prototype,
                                     absl::string_view counterfactual,
                                     GrammarChecker& checker) {
  ASSIGN_OR_RETURN(const std::vector<std::string> base,
                   checker.Check(prototype));
  ASSIGN_OR_RETURN(const std::vector<std::string> cf,
                   checker.Check(counterfactual));
  return NewErrorCount(base, cf);
}

absl::StatusOr<std::vector<CorpusSentence>> LoadCorpus(const fs::path& dir) {
  std::error_code ec;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".conllu") {
      files.push_back(entry.path());
    }
  }
  if (ec) {
    return MakeError(absl::StatusCode::kNotFound, "CorpusUnreadable",
                     absl::StrCat(dir.string(), ": ", ec.message()));
  }
  std::sort(files.begin(), files.end());
  std::vector<CorpusSentence> out;
  for (const fs::path& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in) {
      return MakeError(absl::StatusCode::kNotFound, "CorpusUnreadable",
                       absl::StrCat("cannot read ", file.string()));
    }
    absl::StatusOr<std::vector<SentenceParse>> parses =
        ParseConlluStrict(buf.str());
    if (!parses.ok()) {
      return absl::Status(parses.status().code(),
                          absl::StrCat(parses.status().message(), " (in ",
                                       file.filename().string(), ")"));
    }
    for (size_t i = 0; i < parses->size(); ++i) {
      std::string name = file.stem().string();
      if (i > 0) absl::StrAppend(&name, "#", i);
      out.push_back({std::move(name), std::move((*parses)[i])});
    }
  }
  return out;
}

BenchReport RunBenchmark(const std::vector<CorpusSentence>& corpus,
                         const BenchConfig& config, GrammarChecker& checker) {
  BenchReport report;
  report.dataset = config.dataset;
  report.per_sentence.resize(corpus.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < corpus.size(); i = next++) {
      report.per_sentence[i] = BenchOne(corpus[i], config, checker);
    }
  };
  const size_t workers =
      std::clamp<size_t>(config.workers, 1, std::max<size_t>(corpus.size(), 1));
  std::vector<std::thread> threads;
  for (size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  double words = 0, perturbations = 0, ms = 0;
  int64_t checked = 0, clean = 0;
  for (const SentenceBench& s : report.per_sentence) {
    if (!s.error.empty()) {
      ++report.failed;
      continue;
    }
    ++report.sentences;
    words += s.words;
    perturbations += s.perturbations;
    ms += s.engine_ms;
    checked += s.checked;
    clean += s.checked - s.with_new_errors;
  }
  if (report.sentences > 0) {
    report.avg_sentence_length = words / report.sentences;
    report.avg_perturbations_per_sentence = perturbations / report.sentences;
    report.avg_parse_sample_ms = ms / report.sentences;
  }
  report.grammatical_rate =
      checked > 0 ? static_cast<double>(clean) / checked : 0.0;
  return report;
}

ordered_json BenchReportToJson(const BenchReport& r) {
  ordered_json j;
  j["dataset"] = r.dataset;
  j["sentences"] = r.sentences;
  j["failed"] = r.failed;
  j["avg_sentence_length"] = r.avg_sentence_length;
  j["avg_perturbations_per_sentence"] = r.avg_perturbations_per_sentence;
  j["grammatical_rate"] = r.grammatical_rate;
  j["avg_parse_sample_ms"] = r.avg_parse_sample_ms;
  ordered_json rows = ordered_json::array();
  for (const SentenceBench& s : r.per_sentence) {
    ordered_json row;
    row["name"] = s.name;
    row["words"] = s.words;
    row["count_valid"] = s.count_valid;
    row["sampled"] = s.sampled;
    row["perturbations"] = s.perturbations;
    row["checked"] = s.checked;
    row["with_new_errors"] = s.with_new_errors;
    row["flagged"] = s.flagged;
    row["engine_ms"] = s.engine_ms;
    if (!s.error.empty()) row["error"] = s.error;
    rows.push_back(std::move(row));
  }
  j["per_sentence"] = std::move(rows);
  return j;
}

std::string BenchReportMarkdown(const BenchReport& r) {
  const std::vector<std::string> header = {
      "Dataset", "Sentences", "Sent. length", "Pert./sent.", "Grammatical",
      "Engine ms/sent."};
  const std::vector<std::string> row = {
      r.dataset,
      absl::StrCat(r.sentences, r.failed ? absl::StrCat(" (+", r.failed,
                                                        " failed)")
                                         : ""),
      absl::StrFormat("%.1f", r.avg_sentence_length),
      absl::StrFormat("%.1f", r.avg_perturbations_per_sentence),
      absl::StrFormat("%.1f%%", 100.0 * r.grammatical_rate),
      absl::StrFormat("%.2f", r.avg_parse_sample_ms)};
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) {
    width[c] = std::max(header[c].size(), row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (size_t c = 0; c < cells.size(); ++c) {
      absl::StrAppend(&s, " ", cells[c],
                      std::string(width[c] - cells[c].size(), ' '), " |");
    }
    return s + "\n";
  };
  std::string rule = "|";
  for (size_t w : width) absl::StrAppend(&rule, std::string(w + 2, '-'), "|");
  return absl::StrCat(line(header), rule, "\n", line(row));
}

}  // namespace cfscope
