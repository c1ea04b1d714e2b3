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


// JSON REST front end for TaskService, versioned under /api/v1.
//
//   POST  /tasks                              create (201)
//   GET   /tasks                              list
//   GET   /tasks/{id}                         task plus segment view
//   PATCH /tasks/{id}/segments                merge/expand/alternatives/freeze
//   POST  /tasks/{id}/segments/{sid}/suggestions
//   POST  /tasks/{id}/runs                    start (202)
//   GET   /runs/{id}                          progress
//   GET   /runs/{id}/results                  filtered, sorted rows
//   POST  /runs/{id}/groupby
//   GET   /runs/{id}/cf/{cfId}/text
//
// Errors are {"code": ..., "message": ...}.

#ifndef CFSCOPE_REST_SERVER_H_
#define CFSCOPE_REST_SERVER_H_

#include <memory>
#include <string>
#include <thread>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cfscope/task_service.h"

namespace httplib {
class Server;
}

namespace cfscope {

inline constexpr char kApiPrefix[] = "/api/v1";

// HTTP status for a service error.
int HttpStatusFor(const absl::Status& status);

// Query string of GET /runs/{id}/results. Keys: evaluator, outcome_min,
// outcome_max, words_min, words_max (bounds inclusive), include and exclude
// (comma-separated segment ids), sort (outcome|words), order (asc|desc).
// Error code InvalidQuery.
absl::StatusOr<ResultsQuery> ResultsQueryFromParams(
    const std::multimap<std::string, std::string>& params);

// Body of POST /tasks. Error codes InvalidJson, EvaluatorInvalid,
// UnknownOperator.
absl::StatusOr<CreateTaskRequest> CreateTaskRequestFromJson(
    const nlohmann::json& j);

class RestServer {
 public:
  // `service` must outlive the server.
  explicit RestServer(TaskService* service);
  ~RestServer();

  RestServer(const RestServer&) = delete;
  RestServer& operator=(const RestServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Error code BindFailed.
  absl::Status Start(const std::string& host, int port);
  // Binds and serves on the calling thread until Stop().
  absl::Status Serve(const std::string& host, int port);
  void Stop();
  int port() const { return port_; }

 private:
  void Routes();

  TaskService* service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace cfscope

#endif  // CFSCOPE_REST_SERVER_H_
