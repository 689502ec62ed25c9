#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sealflow/bytes.hpp"

namespace sealflow::dataflow {

/// A typed scalar. monostate is null.
using Value = std::variant<std::monostate, std::string, std::int64_t, double>;

enum class FieldType : std::uint8_t { String = 1, Int = 2, Float = 3 };

struct Field {
  std::string name;
  FieldType type = FieldType::String;
  friend bool operator==(const Field&, const Field&) = default;
};

struct Schema {
  std::vector<Field> fields;

  std::size_t arity() const noexcept { return fields.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// index_of that throws SchemaMismatch for unknown names.
  std::size_t require(std::string_view name) const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

using Record = std::vector<Value>;

/// Records sharing one schema; every record has schema.arity() fields.
struct RecordBatch {
  Schema schema;
  std::vector<Record> records;
  /// Input lines/items dropped while producing this batch.
  std::uint64_t malformed = 0;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  friend bool operator==(const RecordBatch&, const RecordBatch&) = default;
};

std::int64_t as_int(const Value& v);
double as_number(const Value& v);
const std::string& as_string(const Value& v);
bool is_null(const Value& v) noexcept;

/// Binary encoding used for record batches between pipeline stages.
Bytes encode_batch(const RecordBatch& batch);
RecordBatch decode_batch(ByteView bytes);

}  // namespace sealflow::dataflow
