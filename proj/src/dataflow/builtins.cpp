#include "sealflow/dataflow/builtins.hpp"

#include <charconv>
#include <nlohmann/json.hpp>

#include "sealflow/error.hpp"

namespace sealflow::dataflow {

namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

// Converts one textual field; nullopt means the value does not fit the type.
std::optional<Value> convert(const std::string& text, FieldType type) {
  if (type == FieldType::String) return Value{text};
  if (text.empty() || text == "NA") return Value{};
  const char* first = text.data();
  const char* last = first + text.size();
  if (type == FieldType::Int) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec == std::errc{} && p == last) return Value{v};
    // BTS exports sometimes write integral delays as "12.00".
    double d = 0;
    auto [p2, ec2] = std::from_chars(first, last, d);
    if (ec2 == std::errc{} && p2 == last && d == static_cast<double>(static_cast<std::int64_t>(d)))
      return Value{static_cast<std::int64_t>(d)};
    return std::nullopt;
  }
  double v = 0;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec == std::errc{} && p == last) return Value{v};
  return std::nullopt;
}

std::optional<Value> from_json(const nlohmann::json& j, FieldType type) {
  if (j.is_null()) return Value{};
  switch (type) {
    case FieldType::String:
      if (j.is_string()) return Value{j.get<std::string>()};
      return std::nullopt;
    case FieldType::Int:
      if (j.is_number_integer()) return Value{j.get<std::int64_t>()};
      return std::nullopt;
    case FieldType::Float:
      if (j.is_number()) return Value{j.get<double>()};
      return std::nullopt;
  }
  return std::nullopt;
}

void append_object(const nlohmann::json& obj, const Schema& schema, RecordBatch& out) {
  if (!obj.is_object()) {
    ++out.malformed;
    return;
  }
  Record rec;
  rec.reserve(schema.arity());
  for (const Field& f : schema.fields) {
    auto it = obj.find(f.name);
    if (it == obj.end()) {
      rec.emplace_back();
      continue;
    }
    auto v = from_json(*it, f.type);
    if (!v) {
      ++out.malformed;
      return;
    }
    rec.push_back(std::move(*v));
  }
  out.records.push_back(std::move(rec));
}

}  // namespace

std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (true) {
    cur.clear();
    if (i < n && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < n) {
        if (line[i] == '"') {
          if (i + 1 < n && line[i + 1] == '"') {
            cur.push_back('"');
            i += 2;
          } else {
            ++i;
            closed = true;
            break;
          }
        } else {
          cur.push_back(line[i++]);
        }
      }
      if (!closed) return std::nullopt;
      if (i < n && line[i] != ',') return std::nullopt;
    } else {
      while (i < n && line[i] != ',') {
        if (line[i] == '"') return std::nullopt;
        cur.push_back(line[i++]);
      }
    }
    fields.push_back(cur);
    if (i >= n) break;
    ++i;  // the comma
  }
  return fields;
}

RecordBatch csv_parse(std::string_view text, const Schema& schema, const CsvOptions& options) {
  RecordBatch out;
  out.schema = schema;
  bool first = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = trim_cr(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (first && options.has_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) {
      ++out.malformed;
      continue;
    }
    auto fields = split_csv_line(line);
    if (!fields) {
      ++out.malformed;
      continue;
    }
    if (fields->size() != schema.arity()) {
      if (options.strict)
        fail(Errc::SchemaMismatch, "expected " + std::to_string(schema.arity()) + " fields, got " +
                                       std::to_string(fields->size()));
      ++out.malformed;
      continue;
    }
    Record rec;
    rec.reserve(schema.arity());
    bool ok = true;
    for (std::size_t k = 0; k < fields->size(); ++k) {
      auto v = convert((*fields)[k], schema.fields[k].type);
      if (!v) {
        ok = false;
        break;
      }
      rec.push_back(std::move(*v));
    }
    if (!ok) {
      ++out.malformed;
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

RecordBatch json_parse(std::string_view text, const Schema& schema) {
  RecordBatch out;
  out.schema = schema;
  std::size_t start = text.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos) return out;
  if (text[start] == '[') {
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
      ++out.malformed;
      return out;
    }
    for (const auto& item : doc) append_object(item, schema, out);
    return out;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = trim_cr(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      ++out.malformed;
      continue;
    }
    append_object(doc, schema, out);
  }
  return out;
}

RecordBatch field_project(const RecordBatch& batch, const std::vector<std::string>& fields) {
  std::vector<std::size_t> idx;
  RecordBatch out;
  out.malformed = batch.malformed;
  for (const auto& name : fields) {
    std::size_t i = batch.schema.require(name);
    idx.push_back(i);
    out.schema.fields.push_back(batch.schema.fields[i]);
  }
  out.records.reserve(batch.records.size());
  for (const Record& r : batch.records) {
    Record p;
    p.reserve(idx.size());
    for (std::size_t i : idx) p.push_back(r[i]);
    out.records.push_back(std::move(p));
  }
  return out;
}

void keyed_reduce(const RecordBatch& batch, std::string_view key_field, std::string_view value_field,
                  ReduceState& state) {
  std::size_t k = batch.schema.require(key_field);
  std::size_t v = batch.schema.require(value_field);
  for (const Record& r : batch.records) {
    if (is_null(r[k]) || is_null(r[v])) continue;
    state.add(as_string(r[k]), as_number(r[v]));
  }
}

enclave::TransformDef make_csv_parse(std::string name, Schema schema, CsvOptions options) {
  enclave::TransformDef def;
  def.name = std::move(name);
  def.kind = enclave::TransformKind::Parse;
  def.fn = [schema = std::move(schema), options](enclave::TransformContext&, ByteView in) {
    std::string_view text(reinterpret_cast<const char*>(in.data()), in.size());
    return encode_batch(csv_parse(text, schema, options));
  };
  return def;
}

enclave::TransformDef make_json_parse(std::string name, Schema schema) {
  enclave::TransformDef def;
  def.name = std::move(name);
  def.kind = enclave::TransformKind::Parse;
  def.fn = [schema = std::move(schema)](enclave::TransformContext&, ByteView in) {
    std::string_view text(reinterpret_cast<const char*>(in.data()), in.size());
    return encode_batch(json_parse(text, schema));
  };
  return def;
}

enclave::TransformDef make_filter(std::string name, RecordPredicate pred) {
  enclave::TransformDef def;
  def.name = std::move(name);
  def.kind = enclave::TransformKind::Filter;
  def.fn = [pred = std::move(pred)](enclave::TransformContext&, ByteView in) {
    RecordBatch batch = decode_batch(in);
    RecordBatch out;
    out.schema = batch.schema;
    out.malformed = batch.malformed;
    for (Record& r : batch.records)
      if (pred(batch.schema, r)) out.records.push_back(std::move(r));
    return encode_batch(out);
  };
  return def;
}

enclave::TransformDef make_project(std::string name, std::vector<std::string> fields) {
  enclave::TransformDef def;
  def.name = std::move(name);
  def.kind = enclave::TransformKind::Map;
  def.fn = [fields = std::move(fields)](enclave::TransformContext&, ByteView in) {
    return encode_batch(field_project(decode_batch(in), fields));
  };
  return def;
}

enclave::TransformDef make_keyed_reduce(std::string name, std::string key_field, std::string value_field) {
  enclave::TransformDef def;
  def.name = std::move(name);
  def.kind = enclave::TransformKind::Reduce;
  def.fn = [key_field = std::move(key_field), value_field = std::move(value_field)](enclave::TransformContext& ctx,
                                                                                     ByteView in) {
    keyed_reduce(decode_batch(in), key_field, value_field, ctx.state());
    return Bytes{};
  };
  return def;
}

const Schema& flight_schema() {
  static const Schema schema{{{"carrier", FieldType::String},
                              {"year", FieldType::Int},
                              {"month", FieldType::Int},
                              {"day", FieldType::Int},
                              {"dep_delay", FieldType::Int},
                              {"arr_delay", FieldType::Int}}};
  return schema;
}

void register_builtins(enclave::TransformRegistry& registry) {
  auto add = [&](enclave::TransformDef def) {
    if (!registry.contains(def.name)) registry.add(std::move(def));
  };
  add(make_csv_parse("csv_parse", flight_schema()));
  add(make_json_parse("json_parse", flight_schema()));
  add(make_filter("filter_delayed", [](const Schema& s, const Record& r) {
    const Value& v = r[s.require("arr_delay")];
    return !is_null(v) && as_number(v) > 0;
  }));
  add(make_keyed_reduce("reduce_by_carrier", "carrier", "arr_delay"));
}

}  // namespace sealflow::dataflow
