#include "sealflow/dataflow/record.hpp"

#include <bit>
#include <cstring>

#include "sealflow/error.hpp"

namespace sealflow::dataflow {

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].name == name) return i;
  return std::nullopt;
}

std::size_t Schema::require(std::string_view name) const {
  if (auto i = index_of(name)) return *i;
  fail(Errc::SchemaMismatch, "no field named '" + std::string(name) + "'");
}

std::int64_t as_int(const Value& v) {
  if (auto p = std::get_if<std::int64_t>(&v)) return *p;
  if (auto p = std::get_if<double>(&v)) return static_cast<std::int64_t>(*p);
  fail(Errc::SchemaMismatch, "value is not numeric");
}

double as_number(const Value& v) {
  if (auto p = std::get_if<std::int64_t>(&v)) return static_cast<double>(*p);
  if (auto p = std::get_if<double>(&v)) return *p;
  fail(Errc::SchemaMismatch, "value is not numeric");
}

const std::string& as_string(const Value& v) {
  if (auto p = std::get_if<std::string>(&v)) return *p;
  fail(Errc::SchemaMismatch, "value is not a string");
}

bool is_null(const Value& v) noexcept { return std::holds_alternative<std::monostate>(v); }

namespace {

constexpr std::uint8_t kMagic[2] = {'R', 'B'};
enum Tag : std::uint8_t { kNull = 0, kString = 1, kInt = 2, kFloat = 3 };

void put_string(Bytes& out, std::string_view s) {
  put_be32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Cursor {
 public:
  explicit Cursor(ByteView b) : b_(b) {}
  const std::uint8_t* take(std::size_t n) {
    if (b_.size() - pos_ < n) fail(Errc::Codec, "record batch truncated");
    const std::uint8_t* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint8_t u8() { return *take(1); }
  std::uint32_t u32() { return get_be32(take(4)); }
  std::uint64_t u64() { return get_be64(take(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const noexcept { return pos_ == b_.size(); }

 private:
  ByteView b_;
  std::size_t pos_ = 0;
};

}  // namespace

Bytes encode_batch(const RecordBatch& batch) {
  Bytes out;
  out.reserve(32 + batch.records.size() * batch.schema.arity() * 10);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_be32(out, static_cast<std::uint32_t>(batch.schema.arity()));
  for (const auto& f : batch.schema.fields) {
    out.push_back(static_cast<std::uint8_t>(f.type));
    put_string(out, f.name);
  }
  put_be64(out, batch.malformed);
  put_be32(out, static_cast<std::uint32_t>(batch.records.size()));
  for (const auto& r : batch.records) {
    if (r.size() != batch.schema.arity())
      fail(Errc::SchemaMismatch, "record arity " + std::to_string(r.size()) + " != schema arity " +
                                     std::to_string(batch.schema.arity()));
    for (const auto& v : r) {
      switch (v.index()) {
        case 0: out.push_back(kNull); break;
        case 1: out.push_back(kString); put_string(out, std::get<std::string>(v)); break;
        case 2: out.push_back(kInt); put_be64(out, static_cast<std::uint64_t>(std::get<std::int64_t>(v))); break;
        case 3: out.push_back(kFloat); put_be64(out, std::bit_cast<std::uint64_t>(std::get<double>(v))); break;
      }
    }
  }
  return out;
}

RecordBatch decode_batch(ByteView bytes) {
  Cursor c(bytes);
  const auto* magic = c.take(2);
  if (magic[0] != kMagic[0] || magic[1] != kMagic[1]) fail(Errc::Codec, "not a record batch");
  RecordBatch batch;
  const std::uint32_t arity = c.u32();
  if (arity > bytes.size()) fail(Errc::Codec, "implausible arity");
  for (std::uint32_t i = 0; i < arity; ++i) {
    const std::uint8_t type = c.u8();
    if (type < 1 || type > 3) fail(Errc::Codec, "bad field type");
    batch.schema.fields.push_back(Field{c.str(), static_cast<FieldType>(type)});
  }
  batch.malformed = c.u64();
  const std::uint32_t count = c.u32();
  if (arity > 0 && count > bytes.size()) fail(Errc::Codec, "implausible record count");
  batch.records.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    Record rec;
    rec.reserve(arity);
    for (std::uint32_t i = 0; i < arity; ++i) {
      switch (c.u8()) {
        case kNull: rec.emplace_back(std::monostate{}); break;
        case kString: rec.emplace_back(c.str()); break;
        case kInt: rec.emplace_back(static_cast<std::int64_t>(c.u64())); break;
        case kFloat: rec.emplace_back(std::bit_cast<double>(c.u64())); break;
        default: fail(Errc::Codec, "bad value tag");
      }
    }
    batch.records.push_back(std::move(rec));
  }
  if (!c.done()) fail(Errc::Codec, "trailing bytes after record batch");
  return batch;
}

}  // namespace sealflow::dataflow
