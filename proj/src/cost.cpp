#include "focus/cost.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>

namespace focus {

double training_flops(const ModelSpec& spec, double steps, double batch, double seq_len) {
  return 2.0 * 3.0 * spec.parameters * steps * batch * seq_len;
}

double inference_flops(const ModelSpec& spec, double input_len) {
  return 2.0 * spec.parameters * input_len;
}

CommBytes fl_comm_bytes(const ModelSpec& spec, double rounds) {
  const double per_direction = rounds * spec.parameters * spec.bytes_per_parameter;
  return {per_direction, per_direction};
}

CommBytes icl_download_bytes(const ModelSpec& spec) { return {spec.size_bytes(), 0.0}; }

double transfer_time(double bytes, double bits_per_second) {
  if (!(bits_per_second > 0.0)) throw Error("bandwidth must be > 0");
  return 8.0 * bytes / bits_per_second;
}

void NetworkSpec::validate() const {
  if (!(down_bps > 0.0) || !(up_bps > 0.0)) throw Error("network bandwidths must be > 0");
}

std::string to_string(ScenarioFamily family) {
  switch (family) {
    case ScenarioFamily::federated: return "federated";
    case ScenarioFamily::local_only: return "local_only";
    case ScenarioFamily::icl: return "icl";
    case ScenarioFamily::cost_model: return "cost_model";
  }
  return {};
}

CostTally tally_scenario(ScenarioFamily family, const CostTally& raw, const NetworkSpec& network,
                         double tasks_supported) {
  if (!(tasks_supported >= 1.0)) throw Error("tasks_supported must be >= 1");
  network.validate();
  CostTally t = raw;
  t.tasks_supported = tasks_supported;
  switch (family) {
    case ScenarioFamily::federated:
    case ScenarioFamily::local_only:
      t.train_flops *= tasks_supported;
      t.inference_flops *= tasks_supported;
      t.inferences *= tasks_supported;
      t.bytes_up *= tasks_supported;
      t.bytes_down *= tasks_supported;
      t.per_client_bytes_up *= tasks_supported;
      t.per_client_bytes_down *= tasks_supported;
      break;
    case ScenarioFamily::icl:
      // One frozen model serves every task; only inference grows.
      t.inference_flops *= tasks_supported;
      t.inferences *= tasks_supported;
      break;
    case ScenarioFamily::cost_model:
      break;
  }
  t.transfer_seconds = transfer_time(t.per_client_bytes_up, network.up_bps) +
                       transfer_time(t.per_client_bytes_down, network.down_bps);
  return t;
}

CostModelReport evaluate_cost_model(const CostModelInputs& in) {
  in.network.validate();
  const ModelSpec fl(in.fl_params, in.bytes_per_param, in.seq_len);
  const ModelSpec icl(in.icl_params, in.bytes_per_param, in.icl_input_len);
  CostModelReport r;
  r.inputs = in;
  r.fl_training_flops = training_flops(fl, in.steps, in.batch, in.seq_len) * in.tasks_supported;
  r.fl_inference_flops = inference_flops(fl, in.seq_len);
  auto comm = fl_comm_bytes(fl, in.rounds);
  r.fl_bytes_down = comm.down * in.tasks_supported;
  r.fl_bytes_up = comm.up * in.tasks_supported;
  r.fl_transfer_seconds = transfer_time(r.fl_bytes_up, in.network.up_bps) +
                          transfer_time(r.fl_bytes_down, in.network.down_bps);
  r.fl_storage_bytes = fl.size_bytes() * in.tasks_supported;
  r.icl_training_flops = 0.0;
  r.icl_inference_flops = inference_flops(icl, in.icl_input_len);
  r.icl_download_bytes = icl_download_bytes(icl).down;
  r.icl_download_seconds = transfer_time(r.icl_download_bytes, in.network.down_bps);
  r.icl_storage_bytes = icl.size_bytes();
  return r;
}

namespace {

std::string printf_string(const char* fmt, double v, const char* unit) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v, unit);
  return buf;
}

}  // namespace

std::string format_bytes(double bytes) {
  if (bytes >= 1e9) return printf_string("%.3g %s", bytes / 1e9, "GB");
  if (bytes >= 1e6) return printf_string("%.3g %s", bytes / 1e6, "MB");
  if (bytes >= 1e3) return printf_string("%.3g %s", bytes / 1e3, "kB");
  return printf_string("%.0f %s", bytes, "B");
}

std::string format_hours(double seconds) { return printf_string("%.2f %s", seconds / 3600.0, "hours"); }

std::string format_flops(double flops) { return printf_string("%.3g %s", flops, "FLOPs"); }

namespace {

/// Integral values print as integers so large FLOP and byte counts read exactly.
nlohmann::ordered_json exact(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9.0e18)
    return v >= 0 ? nlohmann::ordered_json(static_cast<std::uint64_t>(v))
                  : nlohmann::ordered_json(static_cast<std::int64_t>(v));
  return v;
}

}  // namespace

nlohmann::ordered_json to_json(const CostTally& t) {
  nlohmann::ordered_json j;
  j["train_flops"] = exact(t.train_flops);
  j["inference_flops"] = exact(t.inference_flops);
  j["inferences"] = exact(t.inferences);
  j["bytes_up"] = exact(t.bytes_up);
  j["bytes_down"] = exact(t.bytes_down);
  j["clients"] = exact(t.clients);
  j["per_client_bytes_up"] = exact(t.per_client_bytes_up);
  j["per_client_bytes_down"] = exact(t.per_client_bytes_down);
  j["transfer_seconds"] = exact(t.transfer_seconds);
  j["tasks_supported"] = exact(t.tasks_supported);
  j["readable"] = {
      {"train", format_flops(t.train_flops)},
      {"inference", format_flops(t.inference_flops)},
      {"per_client_up", format_bytes(t.per_client_bytes_up)},
      {"per_client_down", format_bytes(t.per_client_bytes_down)},
      {"transfer", format_hours(t.transfer_seconds)},
  };
  return j;
}

nlohmann::ordered_json to_json(const CostModelReport& r) {
  nlohmann::ordered_json j;
  const auto& in = r.inputs;
  j["inputs"] = {{"fl_params", exact(in.fl_params)},       {"icl_params", exact(in.icl_params)},
                 {"bytes_per_param", exact(in.bytes_per_param)}, {"rounds", exact(in.rounds)},
                 {"steps", exact(in.steps)},               {"batch", exact(in.batch)},
                 {"seq_len", exact(in.seq_len)},           {"icl_input_len", exact(in.icl_input_len)},
                 {"down_bps", exact(in.network.down_bps)}, {"up_bps", exact(in.network.up_bps)},
                 {"tasks_supported", exact(in.tasks_supported)}};
  j["federated"] = {
      {"training_flops", exact(r.fl_training_flops)},
      {"inference_flops", exact(r.fl_inference_flops)},
      {"bytes_down", exact(r.fl_bytes_down)},
      {"bytes_up", exact(r.fl_bytes_up)},
      {"transfer_seconds", exact(r.fl_transfer_seconds)},
      {"storage_bytes", exact(r.fl_storage_bytes)},
      {"readable",
       {{"communication", format_bytes(r.fl_bytes_down) + " each way, " +
                              format_hours(r.fl_transfer_seconds)},
        {"training", format_flops(r.fl_training_flops)},
        {"inference", format_flops(r.fl_inference_flops)},
        {"storage", format_bytes(r.fl_storage_bytes)}}},
  };
  j["icl"] = {
      {"training_flops", exact(r.icl_training_flops)},
      {"inference_flops", exact(r.icl_inference_flops)},
      {"download_bytes", exact(r.icl_download_bytes)},
      {"download_seconds", exact(r.icl_download_seconds)},
      {"storage_bytes", exact(r.icl_storage_bytes)},
      {"readable",
       {{"communication", format_bytes(r.icl_download_bytes) + " download, " +
                              format_hours(r.icl_download_seconds)},
        {"training", "none"},
        {"inference", format_flops(r.icl_inference_flops)},
        {"storage", format_bytes(r.icl_storage_bytes)}}},
  };
  return j;
}

}  // namespace focus
