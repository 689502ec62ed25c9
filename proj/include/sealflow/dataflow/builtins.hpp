#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sealflow/dataflow/record.hpp"
#include "sealflow/dataflow/reduce_state.hpp"
#include "sealflow/enclave/transform.hpp"

namespace sealflow::dataflow {

/// Splits one CSV line into fields. Double quotes enclose fields and "" is an
/// escaped quote. Returns nullopt for an unterminated quote or text after a
/// closing quote.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line);

struct CsvOptions {
  /// Field-count mismatch throws SchemaMismatch instead of dropping the line.
  bool strict = false;
  /// Skip the first line of the chunk.
  bool has_header = false;
};

/// Parses newline-separated lines. Empty lines, bad quoting, wrong arity and
/// unconvertible values are dropped and counted in `malformed`. Empty typed
/// fields (and "NA") become null.
RecordBatch csv_parse(std::string_view text, const Schema& schema, const CsvOptions& options = {});

/// Accepts a JSON array of objects or one object per line. Missing keys are
/// null; a value of the wrong type drops the item.
RecordBatch json_parse(std::string_view text, const Schema& schema);

/// Keeps the named fields in the order given; SchemaMismatch for unknown names.
RecordBatch field_project(const RecordBatch& batch, const std::vector<std::string>& fields);

/// Folds value_field under key_field into `state` with count/sum. Rows with a
/// null key or value are skipped.
void keyed_reduce(const RecordBatch& batch, std::string_view key_field, std::string_view value_field,
                  ReduceState& state);

using RecordPredicate = std::function<bool(const Schema&, const Record&)>;

/// TransformDef builders. All of them take and emit encoded record batches,
/// except the parsers which take text and the reducer which emits nothing.
enclave::TransformDef make_csv_parse(std::string name, Schema schema, CsvOptions options = {});
enclave::TransformDef make_json_parse(std::string name, Schema schema);
enclave::TransformDef make_filter(std::string name, RecordPredicate pred);
enclave::TransformDef make_project(std::string name, std::vector<std::string> fields);
enclave::TransformDef make_keyed_reduce(std::string name, std::string key_field, std::string value_field);

/// carrier,year,month,day,dep_delay,arr_delay
const Schema& flight_schema();

/// Registers csv_parse, json_parse, filter_delayed (arr_delay > 0) and
/// reduce_by_carrier (key carrier, value arr_delay). Safe to call repeatedly
/// before the registry freezes; no-op for names already present.
void register_builtins(enclave::TransformRegistry& registry);

}  // namespace sealflow::dataflow
