#include "focus/ledger.hpp"

#include "focus/errors.hpp"
#include "json.hpp"

namespace focus {

using ojson = nlohmann::ordered_json;

std::string Endpoint::str() const {
  switch (kind) {
    case EndpointKind::silo: return "silo:" + id;
    case EndpointKind::central: return "central";
    case EndpointKind::public_repo: return "public_repo";
  }
  return {};
}

Endpoint Endpoint::parse(const std::string& s) {
  if (s == "central") return central();
  if (s == "public_repo") return public_repo();
  if (s.rfind("silo:", 0) == 0) return silo(s.substr(5));
  throw IoError("unknown endpoint '" + s + "'");
}

std::string to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::model_params: return "model_params";
    case PayloadKind::local_update: return "local_update";
    case PayloadKind::raw_data: return "raw_data";
    case PayloadKind::demo_read: return "demo_read";
    case PayloadKind::fm_download: return "fm_download";
    case PayloadKind::task_metadata: return "task_metadata";
  }
  return {};
}

PayloadKind parse_payload_kind(const std::string& s) {
  for (auto k : {PayloadKind::model_params, PayloadKind::local_update, PayloadKind::raw_data,
                 PayloadKind::demo_read, PayloadKind::fm_download, PayloadKind::task_metadata})
    if (to_string(k) == s) return k;
  throw IoError("unknown payload kind '" + s + "'");
}

FlowEvent::FlowEvent(std::string run_id, std::uint64_t round, Endpoint source, Endpoint sink,
                     PayloadKind payload, std::uint64_t bytes, bool derived_from_private,
                     bool task_revealing, std::string task)
    : run_id_(std::move(run_id)),
      round_(round),
      source_(std::move(source)),
      sink_(std::move(sink)),
      payload_(payload),
      bytes_(bytes),
      derived_from_private_(derived_from_private),
      task_revealing_(task_revealing),
      task_(std::move(task)) {
  if (payload_ == PayloadKind::raw_data && leaves_silo())
    throw ForbiddenFlow("raw data cannot leave silo '" + source_.id + "'");
}

bool FlowEvent::leaves_silo() const {
  return source_.kind == EndpointKind::silo && !(sink_ == source_);
}

bool FlowEvent::enters_silo() const {
  return sink_.kind == EndpointKind::silo && !(sink_ == source_);
}

std::string FlowEvent::to_jsonl() const {
  ojson j;
  j["run_id"] = run_id_;
  j["round"] = round_;
  j["source"] = source_.str();
  j["sink"] = sink_.str();
  j["payload"] = to_string(payload_);
  j["bytes"] = bytes_;
  j["derived_from_private"] = derived_from_private_;
  j["task_revealing"] = task_revealing_;
  j["task"] = task_;
  return j.dump();
}

FlowEvent FlowEvent::from_jsonl(const std::string& line) {
  auto j = ojson::parse(line);
  return FlowEvent(j.at("run_id").get<std::string>(), j.at("round").get<std::uint64_t>(),
                   Endpoint::parse(j.at("source").get<std::string>()),
                   Endpoint::parse(j.at("sink").get<std::string>()),
                   parse_payload_kind(j.at("payload").get<std::string>()),
                   j.at("bytes").get<std::uint64_t>(), j.at("derived_from_private").get<bool>(),
                   j.at("task_revealing").get<bool>(), j.at("task").get<std::string>());
}

void FlowLedger::append(FlowEvent event) {
  std::lock_guard lock(mu_);
  events_.push_back(std::move(event));
}

std::vector<FlowEvent> FlowLedger::snapshot() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t FlowLedger::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

std::string ledger_to_jsonl(const std::vector<FlowEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += e.to_jsonl();
    out.push_back('\n');
  }
  return out;
}

SecrecyVerdict perfect_secrecy(const std::vector<FlowEvent>& events,
                               const std::set<std::string>& silo_ids) {
  SecrecyVerdict verdict;
  for (const auto& e : events) {
    if (e.source().kind == EndpointKind::silo && silo_ids.count(e.source().id) && e.leaves_silo() &&
        e.derived_from_private())
      verdict.witnesses.push_back(e);
  }
  verdict.holds = verdict.witnesses.empty();
  return verdict;
}

std::map<std::string, bool> task_privacy_exposure(const std::vector<FlowEvent>& events,
                                                  const std::set<std::string>& known_tasks) {
  std::map<std::string, bool> exposed;
  for (const auto& t : known_tasks) exposed[t] = false;
  for (const auto& e : events) {
    if (e.task().empty()) continue;
    bool& flag = exposed[e.task()];
    if (e.leaves_silo() && e.task_revealing()) flag = true;
  }
  return exposed;
}

ByteTotals ledger_bytes(const std::vector<FlowEvent>& events) {
  ByteTotals t;
  for (const auto& e : events) {
    if (e.leaves_silo()) t.up += e.bytes();
    if (e.enters_silo()) t.down += e.bytes();
  }
  return t;
}

}  // namespace focus
