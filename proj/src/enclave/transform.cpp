#include "sealflow/enclave/transform.hpp"

#include "sealflow/error.hpp"

namespace sealflow::enclave {

std::span<std::uint8_t> HeapArena::allocate(std::size_t bytes) {
  blocks_.push_back(std::make_unique<std::uint8_t[]>(bytes));
  return {blocks_.back().get(), bytes};
}

dataflow::ReduceState& TransformContext::state() {
  if (state_ == nullptr) fail(Errc::TransformPanic, "transform needs reduce state but the call has none");
  return *state_;
}

void TransformRegistry::add(TransformDef def) {
  std::lock_guard lock(mutex_);
  if (frozen_) fail(Errc::RegistrationAfterCreate, "cannot register '" + def.name + "' after an enclave was created");
  if (!def.fn) fail(Errc::UnknownTransform, "transform '" + def.name + "' has no body");
  if (table_.contains(def.name)) fail(Errc::DuplicateName, "transform '" + def.name + "' already registered");
  std::string name = def.name;
  table_.emplace(std::move(name), std::move(def));
}

bool TransformRegistry::contains(std::string_view name) const {
  std::lock_guard lock(mutex_);
  return table_.find(name) != table_.end();
}

std::vector<std::string> TransformRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, def] : table_) out.push_back(name);
  return out;
}

bool TransformRegistry::frozen() const {
  std::lock_guard lock(mutex_);
  return frozen_ != nullptr;
}

std::shared_ptr<const TransformTable> TransformRegistry::freeze() {
  std::lock_guard lock(mutex_);
  if (!frozen_) frozen_ = std::make_shared<const TransformTable>(table_);
  return frozen_;
}

TransformRegistry& TransformRegistry::global() {
  static TransformRegistry registry;
  return registry;
}

void register_transform(TransformDef def) { TransformRegistry::global().add(std::move(def)); }

}  // namespace sealflow::enclave
