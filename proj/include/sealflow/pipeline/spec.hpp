#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sealflow/enclave/transform.hpp"
#include "sealflow/wire/endpoint.hpp"

namespace sealflow::pipeline {

enum class Mode { Clear, Encrypted, Enclave };
enum class Role { Source, Router, Worker, Sink };

std::string_view mode_name(Mode mode) noexcept;  // "clear", "encrypted", "enclave"
Mode parse_mode(std::string_view text);           // ModeError on anything else
std::string_view role_name(Role role) noexcept;

inline constexpr std::string_view kSgxTag = "type==sgx";

struct StageSpec {
  std::string name;
  Role role = Role::Worker;
  std::optional<std::string> transform;
  /// Components in the stage. For a source this is the number of input partitions.
  std::size_t workers = 1;
  std::optional<wire::Endpoint> from;
  std::optional<wire::Endpoint> to;
  std::set<std::string> placement;
  /// Sources only: the CSV file to stream.
  std::string input;
  /// Sources only: skip the first line of the file.
  bool header = true;

  bool runs_transform() const noexcept { return role == Role::Worker || role == Role::Sink; }
};

struct PipelineSpec {
  std::string name = "pipeline";
  std::vector<StageSpec> stages;
  Mode mode = Mode::Clear;
  std::string key_env = "SEALFLOW_KEY";
  std::size_t chunk_records = 2048;

  const StageSpec* find(std::string_view stage) const;
  StageSpec* find(std::string_view stage);
  std::size_t index_of(std::string_view stage) const;  // UnknownStage
};

/// Parses the line-oriented pipeline format:
///
///   # comment
///   pipeline NAME
///   mode = clear | encrypted | enclave
///   key_env = VAR
///   chunk_records = N
///   stage NAME
///     role = source | router | worker | sink
///     transform = NAME
///     workers = N
///     input = PATH          (sources)
///     header = true|false   (sources)
///     from = tcp://HOST:PORT
///     to = tcp://HOST:PORT
///     constraint = TAG      (repeatable)
///
/// Keys after a `stage` line belong to that stage. Producers and consumers
/// name the router they talk to by its stage name (or a literal address);
/// routers bind with `*` or an address. Validation runs against `registry`.
PipelineSpec parse_spec(std::string_view text,
                        const enclave::TransformRegistry& registry = enclave::TransformRegistry::global());
PipelineSpec load_spec(const std::string& path,
                       const enclave::TransformRegistry& registry = enclave::TransformRegistry::global());

/// Re-checks topology and mode rules; parse_spec calls it. Useful after
/// editing a parsed spec (mode or worker overrides).
void validate(const PipelineSpec& spec, const enclave::TransformRegistry& registry);

/// Registry holding the built-in transforms (registered on first use).
enclave::TransformRegistry& default_registry();

}  // namespace sealflow::pipeline
