#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace focus {

enum class EndpointKind { silo, central, public_repo };

struct Endpoint {
  EndpointKind kind = EndpointKind::central;
  std::string id;  // client id for silos, empty otherwise

  static Endpoint silo(std::string client) { return {EndpointKind::silo, std::move(client)}; }
  static Endpoint central() { return {EndpointKind::central, {}}; }
  static Endpoint public_repo() { return {EndpointKind::public_repo, {}}; }

  /// "silo:<id>", "central" or "public_repo".
  std::string str() const;
  static Endpoint parse(const std::string& s);

  bool operator==(const Endpoint&) const = default;
};

enum class PayloadKind { model_params, local_update, raw_data, demo_read, fm_download, task_metadata };

std::string to_string(PayloadKind kind);
PayloadKind parse_payload_kind(const std::string& s);

/// One declared data movement. Construction rejects raw data leaving a silo,
/// so the ledger cannot express that flow at all.
class FlowEvent {
 public:
  FlowEvent(std::string run_id, std::uint64_t round, Endpoint source, Endpoint sink,
            PayloadKind payload, std::uint64_t bytes, bool derived_from_private,
            bool task_revealing, std::string task);

  const std::string& run_id() const { return run_id_; }
  std::uint64_t round() const { return round_; }
  const Endpoint& source() const { return source_; }
  const Endpoint& sink() const { return sink_; }
  PayloadKind payload() const { return payload_; }
  std::uint64_t bytes() const { return bytes_; }
  bool derived_from_private() const { return derived_from_private_; }
  bool task_revealing() const { return task_revealing_; }
  const std::string& task() const { return task_; }

  /// Source is a silo and the sink is anything other than that silo.
  bool leaves_silo() const;
  /// Sink is a silo and the source is anything other than that silo.
  bool enters_silo() const;

  std::string to_jsonl() const;
  static FlowEvent from_jsonl(const std::string& line);

  bool operator==(const FlowEvent&) const = default;

 private:
  std::string run_id_;
  std::uint64_t round_;
  Endpoint source_;
  Endpoint sink_;
  PayloadKind payload_;
  std::uint64_t bytes_;
  bool derived_from_private_;
  bool task_revealing_;
  std::string task_;
};

/// Append-only event log with a single writer per run; snapshots are safe from any thread.
class FlowLedger {
 public:
  FlowLedger() = default;
  FlowLedger(const FlowLedger&) = delete;
  FlowLedger& operator=(const FlowLedger&) = delete;

  void append(FlowEvent event);
  std::vector<FlowEvent> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<FlowEvent> events_;
};

std::string ledger_to_jsonl(const std::vector<FlowEvent>& events);

struct SecrecyVerdict {
  bool holds = true;
  std::vector<FlowEvent> witnesses;
};

/// Holds iff no event moves private-derived data out of any silo in `silo_ids`.
SecrecyVerdict perfect_secrecy(const std::vector<FlowEvent>& events,
                               const std::set<std::string>& silo_ids);

/// task -> exposed. Every task named by an event or in `known_tasks` appears.
std::map<std::string, bool> task_privacy_exposure(const std::vector<FlowEvent>& events,
                                                  const std::set<std::string>& known_tasks = {});

struct ByteTotals {
  std::uint64_t up = 0;    // bytes leaving silos
  std::uint64_t down = 0;  // bytes entering silos
};

ByteTotals ledger_bytes(const std::vector<FlowEvent>& events);

}  // namespace focus
