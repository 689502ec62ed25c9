#include "sealflow/pipeline/spec.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <mutex>
#include <sstream>

#include "sealflow/dataflow/builtins.hpp"
#include "sealflow/error.hpp"

namespace sealflow::pipeline {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void syntax(std::size_t line, const std::string& msg) {
  fail(Errc::SyntaxError, "line " + std::to_string(line) + ": " + msg);
}

std::size_t parse_count(std::string_view v, std::size_t line) {
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc{} || p != v.data() + v.size()) syntax(line, "expected a number, got '" + std::string(v) + "'");
  return n;
}

Role parse_role(std::string_view v, std::size_t line) {
  if (v == "source") return Role::Source;
  if (v == "router") return Role::Router;
  if (v == "worker") return Role::Worker;
  if (v == "sink") return Role::Sink;
  syntax(line, "unknown role '" + std::string(v) + "'");
}

wire::Endpoint parse_endpoint(std::string_view v, std::size_t line) {
  try {
    return wire::Endpoint::parse(v);
  } catch (const Error& e) {
    syntax(line, e.what());
  }
}

[[noreturn]] void topology(const std::string& msg) { fail(Errc::TopologyError, msg); }

// A producer or consumer may address a router by its stage name or by a
// literal address; any other stage name is a dangling reference.
void check_link(const PipelineSpec& spec, const StageSpec& stage, const wire::Endpoint& ep, const StageSpec& router,
                const wire::Endpoint& router_ep, const char* what) {
  if (ep.port != router_ep.port)
    topology(stage.name + ": " + what + " " + ep.to_string() + " does not match router " + router.name + " (" +
             router_ep.to_string() + ")");
  if (ep.host != router.name && spec.find(ep.host) != nullptr)
    topology(stage.name + ": " + what + " names stage '" + ep.host + "', expected '" + router.name + "'");
}

}  // namespace

std::string_view mode_name(Mode mode) noexcept {
  switch (mode) {
    case Mode::Clear: return "clear";
    case Mode::Encrypted: return "encrypted";
    case Mode::Enclave: return "enclave";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  std::string lower(text);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "clear") return Mode::Clear;
  if (lower == "encrypted") return Mode::Encrypted;
  if (lower == "enclave") return Mode::Enclave;
  fail(Errc::ModeError, "unknown mode '" + std::string(text) + "'");
}

std::string_view role_name(Role role) noexcept {
  switch (role) {
    case Role::Source: return "source";
    case Role::Router: return "router";
    case Role::Worker: return "worker";
    case Role::Sink: return "sink";
  }
  return "?";
}

const StageSpec* PipelineSpec::find(std::string_view stage) const {
  for (const auto& s : stages)
    if (s.name == stage) return &s;
  return nullptr;
}

StageSpec* PipelineSpec::find(std::string_view stage) {
  for (auto& s : stages)
    if (s.name == stage) return &s;
  return nullptr;
}

std::size_t PipelineSpec::index_of(std::string_view stage) const {
  for (std::size_t i = 0; i < stages.size(); ++i)
    if (stages[i].name == stage) return i;
  fail(Errc::UnknownStage, "no stage named '" + std::string(stage) + "'");
}

PipelineSpec parse_spec(std::string_view text, const enclave::TransformRegistry& registry) {
  PipelineSpec spec;
  StageSpec* stage = nullptr;
  std::vector<std::size_t> role_lines;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    std::size_t k = 0;
    while (k < line.size() && (std::isalnum(static_cast<unsigned char>(line[k])) || line[k] == '_')) ++k;
    if (k == 0) syntax(line_no, "expected a key");
    const std::string_view key = line.substr(0, k);
    std::string_view rest = trim(line.substr(k));

    if (rest.empty() || rest.front() != '=') {
      // block headers: "pipeline NAME" and "stage NAME"
      if (rest.empty() || rest.find_first_of(" \t=") != std::string_view::npos)
        syntax(line_no, "expected 'key = value' or a block header");
      if (key == "pipeline") {
        if (stage) syntax(line_no, "'pipeline' must come before any stage");
        spec.name = std::string(rest);
      } else if (key == "stage") {
        if (spec.find(rest)) topology("duplicate stage name '" + std::string(rest) + "'");
        spec.stages.emplace_back();
        stage = &spec.stages.back();
        stage->name = std::string(rest);
        role_lines.push_back(0);
      } else {
        syntax(line_no, "unknown block '" + std::string(key) + "'");
      }
      continue;
    }
    const std::string_view value = trim(rest.substr(1));
    if (value.empty()) syntax(line_no, "empty value for '" + std::string(key) + "'");

    if (!stage) {
      if (key == "mode") {
        try {
          spec.mode = parse_mode(value);
        } catch (const Error& e) {
          syntax(line_no, e.what());
        }
      } else if (key == "key_env") {
        spec.key_env = std::string(value);
      } else if (key == "chunk_records") {
        spec.chunk_records = parse_count(value, line_no);
        if (spec.chunk_records == 0) syntax(line_no, "chunk_records must be >= 1");
      } else {
        syntax(line_no, "unknown pipeline key '" + std::string(key) + "'");
      }
      continue;
    }

    if (key == "role") {
      stage->role = parse_role(value, line_no);
      role_lines.back() = line_no;
    } else if (key == "transform") {
      stage->transform = std::string(value);
    } else if (key == "workers") {
      stage->workers = parse_count(value, line_no);
      if (stage->workers == 0) syntax(line_no, "workers must be >= 1");
    } else if (key == "from") {
      stage->from = parse_endpoint(value, line_no);
    } else if (key == "to") {
      stage->to = parse_endpoint(value, line_no);
    } else if (key == "constraint") {
      stage->placement.insert(std::string(value));
    } else if (key == "input") {
      stage->input = std::string(value);
    } else if (key == "header") {
      if (value == "true") stage->header = true;
      else if (value == "false") stage->header = false;
      else syntax(line_no, "header must be true or false");
    } else {
      syntax(line_no, "unknown stage key '" + std::string(key) + "'");
    }
  }
  for (std::size_t i = 0; i < spec.stages.size(); ++i)
    if (role_lines[i] == 0) topology(spec.stages[i].name + ": missing role");
  validate(spec, registry);
  return spec;
}

PipelineSpec load_spec(const std::string& path, const enclave::TransformRegistry& registry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_spec(text.str(), registry);
}

void validate(const PipelineSpec& spec, const enclave::TransformRegistry& registry) {
  const auto& st = spec.stages;
  if (st.size() < 3) topology("a pipeline needs at least source, router and sink stages");
  for (std::size_t i = 0; i < st.size(); ++i) {
    const StageSpec& s = st[i];
    const Role expected = i == 0 ? Role::Source : i + 1 == st.size() ? Role::Sink : (i % 2 == 1 ? Role::Router : Role::Worker);
    if (s.role != expected)
      topology(s.name + ": stage " + std::to_string(i) + " is a " + std::string(role_name(s.role)) + ", expected a " +
               std::string(role_name(expected)) + " (chain is source, router, (worker, router)*, sink)");
    switch (s.role) {
      case Role::Source:
        if (s.from) topology(s.name + ": a source has no inbound endpoint");
        if (!s.to) topology(s.name + ": a source needs 'to'");
        if (s.transform) topology(s.name + ": a source runs no transform");
        break;
      case Role::Router:
        if (!s.from || !s.to) topology(s.name + ": a router needs both 'from' and 'to'");
        if (s.transform) topology(s.name + ": a router runs no transform");
        if (s.workers != 1) topology(s.name + ": routers are not replicated");
        if (s.from->port == s.to->port) topology(s.name + ": 'from' and 'to' share port " + std::to_string(s.to->port));
        break;
      case Role::Worker:
        if (!s.from || !s.to) topology(s.name + ": a worker needs both 'from' and 'to'");
        break;
      case Role::Sink:
        if (s.to) topology(s.name + ": a sink has no outbound endpoint");
        if (!s.from) topology(s.name + ": a sink needs 'from'");
        break;
    }
    if (s.runs_transform()) {
      if (!s.transform) topology(s.name + ": missing transform");
      if (!registry.contains(*s.transform))
        fail(Errc::UnknownTransform, s.name + ": transform '" + *s.transform + "' is not registered");
    }
    if (s.role == Role::Router) {
      check_link(spec, st[i - 1], *st[i - 1].to, s, *s.from, "'to'");
      check_link(spec, st[i + 1], *st[i + 1].from, s, *s.to, "'from'");
      for (std::size_t j = 1; j < i; j += 2) {
        const auto& other = st[j];
        for (auto p : {other.from->port, other.to->port})
          if (p == s.from->port || p == s.to->port)
            topology(s.name + ": port " + std::to_string(p) + " already used by " + other.name);
      }
    }
  }
  if (spec.mode == Mode::Enclave)
    for (const auto& s : st)
      if (s.runs_transform() && !s.placement.contains(std::string(kSgxTag)))
        fail(Errc::ModeError, s.name + ": enclave mode requires 'constraint = " + std::string(kSgxTag) + "'");
}

enclave::TransformRegistry& default_registry() {
  static std::once_flag once;
  auto& reg = enclave::TransformRegistry::global();
  std::call_once(once, [&] {
    if (!reg.frozen()) dataflow::register_builtins(reg);
  });
  return reg;
}

}  // namespace sealflow::pipeline
