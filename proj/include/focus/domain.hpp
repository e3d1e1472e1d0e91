#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "focus/errors.hpp"

namespace focus {

enum class TaskKind { classification, next_word };

/// Text for classification / next-word tasks, a feature vector for numeric tasks.
using Input = std::variant<std::string, std::vector<double>>;

struct LabeledExample {
  Input input;
  std::string label;

  bool is_text() const { return std::holds_alternative<std::string>(input); }
  const std::string& text() const { return std::get<std::string>(input); }
  const std::vector<double>& features() const { return std::get<std::vector<double>>(input); }

  bool operator==(const LabeledExample&) const = default;
};

using Dataset = std::vector<LabeledExample>;

enum class Provenance { public_data, private_data };

/// A dataset tagged with where it came from. Backends refuse to fit on private pools.
struct Pool {
  Provenance provenance = Provenance::public_data;
  Dataset examples;
};

/// Ordered class names. Order is the canonical tie-breaking order.
class LabelSchema {
 public:
  LabelSchema() = default;
  explicit LabelSchema(std::vector<std::string> classes, TaskKind kind = TaskKind::classification);

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  TaskKind kind() const { return kind_; }
  const std::string& name(std::size_t i) const { return classes_.at(i); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws SchemaViolation when `name` is not a class.
  std::size_t require_index(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

  bool operator==(const LabelSchema& other) const {
    return kind_ == other.kind_ && classes_ == other.classes_;
  }

 private:
  std::vector<std::string> classes_;
  TaskKind kind_ = TaskKind::classification;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Task {
  std::string id;
  std::string description;  // may be empty
  LabelSchema schema;
  std::string template_id = "default";

  TaskKind kind() const { return schema.kind(); }
};

struct TaskData {
  Dataset train;
  Dataset test;
};

/// One user's private per-task data. Immutable after construction.
class ClientSilo {
 public:
  ClientSilo(std::string id, std::map<std::string, TaskData> data);

  const std::string& id() const { return id_; }
  bool has_task(std::string_view task) const;
  /// n_i for the task; 0 when the silo holds nothing for it.
  std::size_t num_train(std::string_view task) const;
  const Dataset& train(std::string_view task) const;
  const Dataset& test(std::string_view task) const;
  std::vector<std::string> tasks() const;

  /// Throws SchemaViolation if any label falls outside the task schema.
  void validate(const Task& task) const;

 private:
  const TaskData& data_for(std::string_view task) const;

  std::string id_;
  std::map<std::string, TaskData, std::less<>> data_;
};

/// Resource footprint of a model for the cost model.
struct ModelSpec {
  double parameters = 1;
  double bytes_per_parameter = 4;
  double max_input_length = 1;

  ModelSpec() = default;
  ModelSpec(double params, double bytes_per_param = 4, double max_len = 1);
  double size_bytes() const { return parameters * bytes_per_parameter; }
};

/// Lowercased whitespace-split tokens.
std::vector<std::string> tokenize(std::string_view text);

std::vector<std::size_t> label_histogram(const Dataset& dataset, const LabelSchema& schema);

/// Base-2 Shannon entropy of the empirical label distribution.
double label_entropy(const Dataset& dataset, const LabelSchema& schema);

double entropy_bits(const std::vector<std::size_t>& counts);

// JSONL dataset files: {"client_id","task","split","input","label"} per line.

enum class Split { train, test };

struct DatasetRecord {
  std::string client_id;
  std::string task;
  Split split = Split::train;
  LabeledExample example;

  bool operator==(const DatasetRecord&) const = default;
};

std::string to_jsonl_line(const DatasetRecord& record);
DatasetRecord parse_jsonl_line(std::string_view line);

std::vector<DatasetRecord> read_dataset_jsonl(const std::string& path);
void write_dataset_jsonl(const std::string& path, const std::vector<DatasetRecord>& records);

/// Flattens silos into records, clients in order, train before test.
std::vector<DatasetRecord> silos_to_records(const std::vector<ClientSilo>& silos);
/// Groups records by client id (ascending).
std::vector<ClientSilo> silos_from_records(const std::vector<DatasetRecord>& records);

}  // namespace focus
