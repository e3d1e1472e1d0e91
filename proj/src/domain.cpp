#include "focus/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace focus {

using ojson = nlohmann::ordered_json;

LabelSchema::LabelSchema(std::vector<std::string> classes, TaskKind kind)
    : classes_(std::move(classes)), kind_(kind) {
  if (classes_.empty()) throw SchemaViolation("label schema must contain at least one class");
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (!index_.emplace(classes_[i], i).second)
      throw SchemaViolation("duplicate class name '" + classes_[i] + "'");
  }
}

std::optional<std::size_t> LabelSchema::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSchema::require_index(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw SchemaViolation("label '" + std::string(name) + "' is not in the schema");
  return *idx;
}

ClientSilo::ClientSilo(std::string id, std::map<std::string, TaskData> data) : id_(std::move(id)) {
  for (auto& [task, d] : data) data_.emplace(task, std::move(d));
}

bool ClientSilo::has_task(std::string_view task) const { return data_.find(task) != data_.end(); }

std::size_t ClientSilo::num_train(std::string_view task) const {
  auto it = data_.find(task);
  return it == data_.end() ? 0 : it->second.train.size();
}

const TaskData& ClientSilo::data_for(std::string_view task) const {
  static const TaskData empty;
  auto it = data_.find(task);
  return it == data_.end() ? empty : it->second;
}

const Dataset& ClientSilo::train(std::string_view task) const { return data_for(task).train; }
const Dataset& ClientSilo::test(std::string_view task) const { return data_for(task).test; }

std::vector<std::string> ClientSilo::tasks() const {
  std::vector<std::string> out;
  for (const auto& [task, _] : data_) out.push_back(task);
  return out;
}

void ClientSilo::validate(const Task& task) const {
  const auto& d = data_for(task.id);
  for (const auto* split : {&d.train, &d.test})
    for (const auto& ex : *split) task.schema.require_index(ex.label);
}

ModelSpec::ModelSpec(double params, double bytes_per_param, double max_len)
    : parameters(params), bytes_per_parameter(bytes_per_param), max_input_length(max_len) {
  if (!(params > 0) || !(bytes_per_param > 0) || !(max_len > 0))
    throw Error("model spec fields must be strictly positive");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::size_t> label_histogram(const Dataset& dataset, const LabelSchema& schema) {
  std::vector<std::size_t> counts(schema.size(), 0);
  for (const auto& ex : dataset) ++counts[schema.require_index(ex.label)];
  return counts;
}

double entropy_bits(const std::vector<std::size_t>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw UndefinedStatistic("entropy of an empty label distribution");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : h;
}

double label_entropy(const Dataset& dataset, const LabelSchema& schema) {
  if (dataset.empty()) throw UndefinedStatistic("label entropy needs at least one example");
  return entropy_bits(label_histogram(dataset, schema));
}

namespace {

std::string split_name(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw IoError("split must be \"train\" or \"test\", got \"" + s + "\"");
}

}  // namespace

std::string to_jsonl_line(const DatasetRecord& record) {
  ojson j;
  j["client_id"] = record.client_id;
  j["task"] = record.task;
  j["split"] = split_name(record.split);
  if (record.example.is_text())
    j["input"] = record.example.text();
  else
    j["input"] = record.example.features();
  j["label"] = record.example.label;
  return j.dump();
}

DatasetRecord parse_jsonl_line(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::parse_error& e) {
    throw IoError(std::string("malformed dataset line: ") + e.what());
  }
  if (!j.is_object()) throw IoError("dataset line must be a JSON object");
  static const std::set<std::string> required = {"client_id", "task", "split", "input", "label"};
  for (const auto& key : required)
    if (!j.contains(key)) throw IoError("dataset line is missing \"" + key + "\"");
  for (const auto& item : j.items())
    if (!required.count(item.key())) throw IoError("unknown dataset field \"" + item.key() + "\"");

  DatasetRecord r;
  try {
    r.client_id = j["client_id"].get<std::string>();
    r.task = j["task"].get<std::string>();
    r.split = parse_split(j["split"].get<std::string>());
    r.example.label = j["label"].get<std::string>();
    const auto& in = j["input"];
    if (in.is_string())
      r.example.input = in.get<std::string>();
    else if (in.is_array())
      r.example.input = in.get<std::vector<double>>();
    else
      throw IoError("input must be a string or an array of numbers");
  } catch (const ojson::type_error& e) {
    throw IoError(std::string("bad field type in dataset line: ") + e.what());
  }
  return r;
}

std::vector<DatasetRecord> read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path);
  std::vector<DatasetRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_jsonl_line(line));
  }
  return out;
}

void write_dataset_jsonl(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file " + path);
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

std::vector<DatasetRecord> silos_to_records(const std::vector<ClientSilo>& silos) {
  std::vector<DatasetRecord> out;
  for (const auto& silo : silos) {
    for (const auto& task : silo.tasks()) {
      for (const auto& ex : silo.train(task)) out.push_back({silo.id(), task, Split::train, ex});
      for (const auto& ex : silo.test(task)) out.push_back({silo.id(), task, Split::test, ex});
    }
  }
  return out;
}

std::vector<ClientSilo> silos_from_records(const std::vector<DatasetRecord>& records) {
  std::map<std::string, std::map<std::string, TaskData>> grouped;
  for (const auto& r : records) {
    auto& d = grouped[r.client_id][r.task];
    (r.split == Split::train ? d.train : d.test).push_back(r.example);
  }
  std::vector<ClientSilo> silos;
  for (auto& [id, data] : grouped) silos.emplace_back(id, std::move(data));
  return silos;
}

}  // namespace focus
