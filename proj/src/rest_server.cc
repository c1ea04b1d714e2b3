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


#include "cfscope/rest_server.h"

#include <functional>
#include <limits>
#include <optional>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "cfscope/json_io.h"
#include "cfscope/status_macros.h"
#include "httplib.h"

namespace cfscope {
namespace {

using ::nlohmann::json;

absl::Status InvalidQuery(absl::string_view message) {
  return MakeError(absl::StatusCode::kInvalidArgument, "InvalidQuery", message);
}

void SendJson(httplib::Response& res, int code, const OrderedJson& body) {
  res.status = code;
  res.set_content(body.dump() + "\n", "application/json");
}

void SendError(httplib::Response& res, const absl::Status& status) {
  OrderedJson body;
  body["code"] = ErrorCode(status);
  std::string message(status.message());
  // Drop the "[Code] " prefix; the code has its own field.
  if (!message.empty() && message[0] == '[') {
    const size_t close = message.find("] ");
    if (close != std::string::npos) message = message.substr(close + 2);
  }
  body["message"] = message;
  SendJson(res, HttpStatusFor(status), body);
}

absl::StatusOr<json> Body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return ParseJson(req.body);
}

absl::StatusOr<double> Number(const std::string& key, const std::string& v) {
  double d = 0;
  if (!absl::SimpleAtod(v, &d)) {
    return InvalidQuery(absl::StrCat(key, " is not a number: ", v));
  }
  return d;
}

absl::Status SegmentList(const std::string& key, const std::string& v,
                         bool include, FilterSpec& spec) {
  for (absl::string_view part : absl::StrSplit(v, ',', absl::SkipEmpty())) {
    int id = 0;
    if (!absl::SimpleAtoi(part, &id)) {
      return InvalidQuery(absl::StrCat(key, " has a bad segment id: ", part));
    }
    auto [it, inserted] = spec.required.emplace(id, include);
    if (!inserted && it->second != include) {
      return InvalidQuery(absl::StrCat("segment ", id,
                                       " is both included and excluded"));
    }
  }
  return absl::OkStatus();
}

OrderedJson TaskView(const Task& task) {
  OrderedJson j = TaskToJson(task);
  j["view"] = SpaceViewJson(task.space);
  return j;
}

OrderedJson RunJson(const RunInfo& info) {
  OrderedJson j;
  j["run_id"] = info.run_id;
  j["task_id"] = info.task_id;
  const OrderedJson progress = RunProgressToJson(info.progress);
  for (const auto& [k, v] : progress.items()) j[k] = v;
  return j;
}

int IntMatch(const httplib::Request& req, size_t i, bool* ok) {
  int v = 0;
  *ok = absl::SimpleAtoi(req.matches[i].str(), &v);
  return v;
}

}  // namespace

int HttpStatusFor(const absl::Status& status) {
  const std::string code = ErrorCode(status);
  if (code == "RunActive") return 409;
  if (code == "CapExceeded") return 400;
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 200;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
      return 400;
    case absl::StatusCode::kNotFound:
      return 404;
    case absl::StatusCode::kUnavailable:
    case absl::StatusCode::kUnauthenticated:
    case absl::StatusCode::kResourceExhausted:
    case absl::StatusCode::kDataLoss:
    case absl::StatusCode::kDeadlineExceeded:
      return 502;
    default:
      return 500;
  }
}

absl::StatusOr<ResultsQuery> ResultsQueryFromParams(
    const std::multimap<std::string, std::string>& params) {
  ResultsQuery q;
  std::optional<double> outcome_min, outcome_max, words_min, words_max;
  for (const auto& [key, value] : params) {
    if (key == "evaluator") {
      q.evaluator = value;
    } else if (key == "outcome_min") {
      ASSIGN_OR_RETURN(outcome_min, Number(key, value));
    } else if (key == "outcome_max") {
      ASSIGN_OR_RETURN(outcome_max, Number(key, value));
    } else if (key == "words_min") {
      ASSIGN_OR_RETURN(words_min, Number(key, value));
    } else if (key == "words_max") {
      ASSIGN_OR_RETURN(words_max, Number(key, value));
    } else if (key == "include" || key == "exclude") {
      RETURN_IF_ERROR(SegmentList(key, value, key == "include", q.filter));
    } else if (key == "sort") {
      if (value == "outcome") {
        q.filter.sort_key = SortKey::kOutcome;
      } else if (value == "words") {
        q.filter.sort_key = SortKey::kWordCount;
      } else if (value != "none") {
        return InvalidQuery(absl::StrCat("unknown sort key ", value));
      }
    } else if (key == "order") {
      if (value != "asc" && value != "desc") {
        return InvalidQuery(absl::StrCat("order must be asc or desc: ", value));
      }
      q.filter.descending = value == "desc";
    } else {
      return InvalidQuery(absl::StrCat("unknown parameter ", key));
    }
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (outcome_min || outcome_max) {
    q.filter.outcome = ValueRange{outcome_min.value_or(-kInf),
                                  outcome_max.value_or(kInf), true};
  }
  if (words_min || words_max) {
    q.filter.word_count =
        ValueRange{words_min.value_or(-kInf), words_max.value_or(kInf), true};
  }
  return q;
}

absl::StatusOr<CreateTaskRequest> CreateTaskRequestFromJson(const json& j) {
  CreateTaskRequest req;
  try {
    req.prototype = j.at("prototype").get<std::string>();
    if (j.contains("prompt_template")) {
      req.prompt_template = j.at("prompt_template").get<std::string>();
    }
    if (j.contains("pinned")) {
      for (const json& s : j.at("pinned")) {
        req.pinned.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
      }
    }
    if (j.contains("evaluators")) {
      for (const json& e : j.at("evaluators")) {
        ASSIGN_OR_RETURN(Evaluator ev, EvaluatorFromJson(e));
        req.evaluators.push_back(std::move(ev));
      }
    }
    if (j.contains("conllu") && !j.at("conllu").is_null()) {
      req.conllu = j.at("conllu").get<std::string>();
    }
  } catch (const json::exception& e) {
    return MakeError(absl::StatusCode::kInvalidArgument, kInvalidJson,
                     absl::StrCat("task request: ", e.what()));
  }
  return req;
}

RestServer::RestServer(TaskService* service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  Routes();
}

RestServer::~RestServer() { Stop(); }

void RestServer::Routes() {
  httplib::Server& s = *server_;
  TaskService* svc = service_;
  const std::string api = kApiPrefix;

  s.Post(api + "/tasks", [svc](const httplib::Request& req,
                               httplib::Response& res) {
    absl::StatusOr<json> body = Body(req);
    if (!body.ok()) return SendError(res, body.status());
    absl::StatusOr<CreateTaskRequest> request = CreateTaskRequestFromJson(*body);
    if (!request.ok()) return SendError(res, request.status());
    absl::StatusOr<Task> task = svc->CreateTask(*request);
    if (!task.ok()) return SendError(res, task.status());
    SendJson(res, 201, TaskView(*task));
  });

  s.Get(api + "/tasks", [svc](const httplib::Request&, httplib::Response& res) {
    OrderedJson list = OrderedJson::array();
    for (const std::string& id : svc->ListTasks()) {
      absl::StatusOr<Task> t = svc->GetTask(id);
      if (!t.ok()) continue;
      list.push_back({{"id", t->id},
                      {"status", std::string(TaskStatusName(t->status))},
                      {"prototype_text", t->prototype_text}});
    }
    SendJson(res, 200, {{"tasks", list}});
  });

  s.Get(api + R"(/tasks/([^/]+))",
        [svc](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<Task> t = svc->GetTask(req.matches[1].str());
          if (!t.ok()) return SendError(res, t.status());
          SendJson(res, 200, TaskView(*t));
        });

  s.Patch(api + R"(/tasks/([^/]+)/segments)",
          [svc](const httplib::Request& req, httplib::Response& res) {
            absl::StatusOr<json> body = Body(req);
            if (!body.ok()) return SendError(res, body.status());
            absl::StatusOr<SegmentEdit> edit = SegmentEditFromJson(*body);
            if (!edit.ok()) return SendError(res, edit.status());
            absl::StatusOr<Task> t =
                svc->EditSegments(req.matches[1].str(), *edit);
            if (!t.ok()) return SendError(res, t.status());
            SendJson(res, 200, TaskView(*t));
          });

  s.Post(api + R"(/tasks/([^/]+)/segments/([^/]+)/suggestions)",
         [svc](const httplib::Request& req, httplib::Response& res) {
           bool ok = false;
           const int sid = IntMatch(req, 2, &ok);
           if (!ok) {
             return SendError(
                 res, MakeError(absl::StatusCode::kNotFound, "UnknownSegment",
                                absl::StrCat("bad segment id ",
                                             req.matches[2].str())));
           }
           absl::StatusOr<AlternativeSuggestions> s =
               svc->Suggest(req.matches[1].str(), sid);
           if (!s.ok()) return SendError(res, s.status());
           SendJson(res, 200,
                    {{"preserving", s->preserving}, {"altering", s->altering}});
         });

  s.Post(api + R"(/tasks/([^/]+)/runs)",
         [svc](const httplib::Request& req, httplib::Response& res) {
           absl::StatusOr<json> body = Body(req);
           if (!body.ok()) return SendError(res, body.status());
           absl::StatusOr<RunConfig> config = RunConfigFromJson(*body);
           if (!config.ok()) return SendError(res, config.status());
           absl::StatusOr<RunInfo> run =
               svc->StartRun(req.matches[1].str(), *config);
           if (!run.ok()) return SendError(res, run.status());
           SendJson(res, 202, RunJson(*run));
         });

  s.Get(api + R"(/runs/([^/]+))",
        [svc](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<RunInfo> run = svc->GetRun(req.matches[1].str());
          if (!run.ok()) return SendError(res, run.status());
          SendJson(res, 200, RunJson(*run));
        });

  s.Get(api + R"(/runs/([^/]+)/results)",
        [svc](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<ResultsQuery> q = ResultsQueryFromParams(req.params);
          if (!q.ok()) return SendError(res, q.status());
          absl::StatusOr<OrderedJson> r =
              svc->Results(req.matches[1].str(), *q);
          if (!r.ok()) return SendError(res, r.status());
          SendJson(res, 200, *r);
        });

  s.Post(api + R"(/runs/([^/]+)/groupby)",
         [svc](const httplib::Request& req, httplib::Response& res) {
           absl::StatusOr<json> body = Body(req);
           if (!body.ok()) return SendError(res, body.status());
           std::string evaluator;
           std::vector<int> selection;
           try {
             if (body->contains("evaluator")) {
               evaluator = body->at("evaluator").get<std::string>();
             }
             selection = body->at("segments").get<std::vector<int>>();
           } catch (const json::exception& e) {
             return SendError(
                 res, MakeError(absl::StatusCode::kInvalidArgument,
                                kInvalidJson,
                                absl::StrCat("groupby request: ", e.what())));
           }
           absl::StatusOr<std::vector<GroupSummary>> groups =
               svc->GroupBy(req.matches[1].str(), evaluator, selection);
           if (!groups.ok()) return SendError(res, groups.status());
           OrderedJson list = OrderedJson::array();
           for (const GroupSummary& g : *groups) {
             list.push_back(GroupSummaryToJson(g));
           }
           SendJson(res, 200, {{"groups", list}});
         });

  s.Get(api + R"(/runs/([^/]+)/cf/([^/]+)/text)",
        [svc](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<OrderedJson> t = svc->CounterfactualText(
              req.matches[1].str(), req.matches[2].str());
          if (!t.ok()) return SendError(res, t.status());
          SendJson(res, 200, *t);
        });

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 404 ? "NotFound" : "HttpError";
    OrderedJson body{{"code", code},
                     {"message", absl::StrCat(req.method, " ", req.path, ": ",
                                              httplib::status_message(
                                                  res.status))}};
    res.set_content(body.dump() + "\n", "application/json");
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                             std::exception_ptr ep) {
    std::string what = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    SendJson(res, 500, {{"code", "Internal"}, {"message", what}});
  });
}

absl::Status RestServer::Start(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) {
    return MakeError(absl::StatusCode::kUnavailable, "BindFailed",
                     absl::StrCat("cannot bind ", host, ":", port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return absl::OkStatus();
}

absl::Status RestServer::Serve(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    return MakeError(absl::StatusCode::kUnavailable, "BindFailed",
                     absl::StrCat("cannot bind ", host, ":", port));
  }
  port_ = port;
  if (!server_->listen_after_bind()) {
    return MakeError(absl::StatusCode::kUnavailable, "BindFailed",
                     absl::StrCat("listen failed on ", host, ":", port));
  }
  return absl::OkStatus();
}

void RestServer::Stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cfscope
