#pragma once

// JSON encodings shared by the config loader, the HTTP API, the CLI and the
// session journal.

#include "multimind/driver_manager.hpp"
#include "multimind/task_manager.hpp"
#include "multimind/tasks.hpp"

#include <nlohmann/json.hpp>

namespace multimind {

using Json = nlohmann::json;

Json to_json(const Message& message);
Json to_json(const std::vector<Message>& messages);
Json to_json(const AssistantResponse& response);
Json to_json(const DriverError& error);
Json to_json(const DriverOutcome& outcome);
Json to_json(const FanoutOutcome& outcome);
Json to_json(const ActivityCounters& counters);
// Never includes a credential value; only the variable name is shown.
Json to_json(const DriverConfig& config);
Json to_json(const CodeSelection& selection);
Json to_json(const Verdict& verdict);
Json to_json(const TaskResult& result);
Json to_json(const VerdictResult& result);
Json to_json(const WorkflowResult& result);
Json to_json(const WorkflowSpec& spec);

// Decoders throw InvariantError with a field path on bad input.
Message message_from_json(const Json& j);
std::vector<Message> messages_from_json(const Json& j);
DriverConfig driver_config_from_json(const Json& j);
ScriptedBehavior scripted_behavior_from_json(const Json& j);
CodeSelection selection_from_json(const Json& j);
WorkflowSpec workflow_spec_from_json(const Json& j);
TargetSelector targets_from_json(const Json& j);
AssistantResponse response_from_json(const Json& j);
DriverError driver_error_from_json(const Json& j);
FanoutOutcome fanout_from_json(const Json& j);

} // namespace multimind
