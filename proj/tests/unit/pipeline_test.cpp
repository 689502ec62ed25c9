#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "sealflow/bench/bench.hpp"
#include "sealflow/pipeline/launcher.hpp"
#include "sealflow/wire/socket.hpp"
#include "test_util.hpp"

using namespace sealflow;
using namespace sealflow::pipeline;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("sealflow-pipeline-" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string dataset(std::uint64_t rows, std::uint64_t seed = 1) {
  const fs::path p = scratch() / ("flights-" + std::to_string(rows) + "-" + std::to_string(seed) + ".csv");
  if (!fs::exists(p)) bench::generate_dataset(p.string(), rows, 20, seed);
  return p.string();
}

std::string shipped_text() {
  std::ifstream in(std::string(SEALFLOW_SOURCE_DIR) + "/configs/delayed_flights.pipeline");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

PipelineSpec chain(Mode mode, std::size_t workers, std::size_t sources = 4) {
  PipelineSpec spec = bench::delayed_flights_spec(mode);
  for (auto& st : spec.stages) {
    if (st.runs_transform()) st.workers = workers;
    if (st.role == Role::Source) st.workers = sources;
  }
  return spec;
}

LaunchOptions local(const std::string& input) {
  LaunchOptions o;
  o.ephemeral_ports = true;
  o.input = input;
  o.key = enclave::Key::from_hex(std::string(64, 'c'));
  return o;
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("parse_spec: shipped delayed-flights topology") {
  PipelineSpec spec = parse_spec(shipped_text(), default_registry());
  REQUIRE(spec.stages.size() == 7);
  const std::vector<Role> roles{Role::Source, Role::Router, Role::Worker, Role::Router,
                                Role::Worker, Role::Router, Role::Sink};
  for (std::size_t i = 0; i < 7; ++i) CHECK(spec.stages[i].role == roles[i]);
  CHECK(spec.stages[0].workers == 4);
  CHECK(spec.stages[2].transform == "csv_parse");
  CHECK(spec.stages[4].transform == "filter_delayed");
  CHECK(spec.stages[6].transform == "reduce_by_carrier");
  CHECK(spec.mode == Mode::Enclave);
  CHECK(spec.chunk_records == 2048);
  CHECK(spec.stages[1].from->port == 5555);
}

TEST_CASE("parse_spec: rejections") {
  const std::string text = shipped_text();
  CHECK_ERRC(parse_spec(replace(text, "  constraint = type==sgx\n\nstage router_mapper_filter",
                                "\nstage router_mapper_filter"),
                        default_registry()),
             Errc::ModeError);
  CHECK_NOTHROW(parse_spec(replace(replace(text, "mode = enclave", "mode = clear"),
                                   "  constraint = type==sgx\n\nstage router_mapper_filter", "\nstage router_mapper_filter"),
                           default_registry()));
  CHECK_ERRC(parse_spec(replace(text, "  transform = reduce_by_carrier\n",
                                "  transform = reduce_by_carrier\n  to = tcp://elsewhere:6000\n"),
                        default_registry()),
             Errc::TopologyError);
  CHECK_ERRC(parse_spec(replace(text, "transform = filter_delayed", "transform = no_such_thing"), default_registry()),
             Errc::UnknownTransform);
  CHECK_ERRC(parse_spec(replace(text, "from = tcp://router_data_mapper:5556", "from = tcp://router_data_mapper:5999"),
                        default_registry()),
             Errc::TopologyError);
  CHECK_ERRC(parse_spec(replace(text, "to = tcp://router_mapper_filter:5557", "to = tcp://sgx_filter:5557"),
                        default_registry()),
             Errc::TopologyError);
  try {
    parse_spec(replace(text, "  workers = 4\n", "  workers = 4\n  colour = blue\n"), default_registry());
    FAIL("expected SyntaxError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SyntaxError);
    CHECK(std::string(e.what()).find("line 11") != std::string::npos);
  }
  CHECK_ERRC(parse_spec("mode = sideways\n", default_registry()), Errc::SyntaxError);
  CHECK_ERRC(parse_spec("stage a\n  role = source\n  to = tcp://b:1\n", default_registry()), Errc::TopologyError);
  CHECK_ERRC(parse_mode("sideways"), Errc::ModeError);
}

TEST_CASE("launch: one worker per stage gives 7 live components") {
  const std::string input = dataset(2000);
  Deployment d = launch(chain(Mode::Clear, 1, 1), local(input));
  CHECK(d.component_count() == 7);
  CHECK(d.live_components() + 0 <= 7);
  PipelineReport r = d.await_completion(60s);
  CHECK(bench::equivalent(bench::from_reduce_state(r.result), bench::oracle_delayed_flights(input)));
  CHECK(r.completion_time > 0ns);
}

TEST_CASE("launch: every component is live before sources finish") {
  // a slow enclave keeps the pipeline busy long enough to observe it
  const std::string input = dataset(5000);
  LaunchOptions o = local(input);
  o.realistic_delay = true;
  o.cost_model.per_call_overhead = 2ms;
  PipelineSpec spec = chain(Mode::Enclave, 1, 1);
  spec.chunk_records = 256;
  Deployment d = launch(spec, o);
  CHECK(d.live_components() == 7);
  d.await_completion(60s);
}

TEST_CASE("launch: failures") {
  const std::string input = dataset(100);
  SUBCASE("missing key") {
    PipelineSpec spec = chain(Mode::Encrypted, 1);
    spec.key_env = "SEALFLOW_TEST_UNSET_KEY";
    LaunchOptions o = local(input);
    o.key.reset();
    CHECK_ERRC(launch(spec, o), Errc::LaunchFailure);
  }
  SUBCASE("port collision names the router") {
    wire::PullSocket squatter;
    const auto taken = squatter.bind(wire::Endpoint{"127.0.0.1", 0});
    std::vector<std::uint16_t> free;
    {
      std::vector<wire::PullSocket> probes(5);  // held together so the ports differ
      for (auto& probe : probes) free.push_back(probe.bind(wire::Endpoint{"127.0.0.1", 0}).port);
    }
    PipelineSpec spec = chain(Mode::Clear, 1);
    const std::uint16_t ports[] = {taken.port, free[0], free[1], free[2], free[3], free[4]};
    for (std::size_t r = 1, k = 0; r < 7; r += 2, k += 2) {
      spec.stages[r].from->port = spec.stages[r - 1].to->port = ports[k];
      spec.stages[r].to->port = spec.stages[r + 1].from->port = ports[k + 1];
    }
    LaunchOptions o = local(input);
    o.ephemeral_ports = false;
    try {
      launch(spec, o);
      FAIL("expected LaunchFailure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::LaunchFailure);
      CHECK(std::string(e.what()).find("router_data_mapper") != std::string::npos);
    }
  }
  SUBCASE("missing input file") {
    LaunchOptions o = local((scratch() / "nope.csv").string());
    try {
      launch(chain(Mode::Clear, 1), o);
      FAIL("expected LaunchFailure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::LaunchFailure);
      CHECK(std::string(e.what()).find("data_stream-0") != std::string::npos);
    }
  }
}

TEST_CASE("pipeline equals the oracle in every mode") {
  const std::string input = dataset(20000, 7);
  const auto oracle = bench::oracle_delayed_flights(input);
  for (Mode mode : {Mode::Clear, Mode::Encrypted, Mode::Enclave})
    for (std::size_t workers : {1u, 2u}) {
      CAPTURE(mode_name(mode));
      CAPTURE(workers);
      PipelineSpec spec = chain(mode, workers);
      spec.chunk_records = 500;
      Deployment d = launch(spec, local(input));
      PipelineReport r = d.await_completion(60s);
      std::string why;
      CHECK_MESSAGE(bench::equivalent(bench::from_reduce_state(r.result), oracle, 1e-9, &why), why);

      std::uint64_t worker_frames = 0;
      for (const auto& st : r.stages)
        if (st.role == Role::Worker || st.role == Role::Sink) worker_frames += st.frames_in;
      switch (mode) {
        case Mode::Clear:
          CHECK(r.encrypt_calls == 0);
          CHECK(r.decrypt_calls == 0);
          CHECK(r.process_calls == 0);
          break;
        case Mode::Encrypted:
          CHECK(r.encrypt_calls > 0);
          CHECK(r.decrypt_calls == worker_frames);
          CHECK(r.process_calls == 0);
          break;
        case Mode::Enclave:
          CHECK(r.process_calls == worker_frames);
          break;
      }
      CHECK(r.stage("sgx_mapper").components == workers);
      CHECK(r.stage("data_stream").frames_out == r.stage("router_data_mapper").frames_in);
      CHECK(r.stage("router_data_mapper").frames_out == r.stage("sgx_mapper").frames_in);
    }
}

TEST_CASE("process isolation gives the same result") {
  const std::string input = dataset(20000, 7);
  LaunchOptions o = local(input);
  o.isolation = Isolation::Process;
  Deployment d = launch(chain(Mode::Enclave, 2), o);
  PipelineReport r = d.await_completion(60s);
  CHECK(bench::equivalent(bench::from_reduce_state(r.result), bench::oracle_delayed_flights(input)));
  CHECK(r.process_calls > 0);
}

TEST_CASE("empty dataset completes with an empty result") {
  const std::string input = dataset(0);
  Deployment d = launch(chain(Mode::Enclave, 2), local(input));
  PipelineReport r = d.await_completion(30s);
  CHECK(r.result.empty());
  CHECK(r.stage("sgx_mapper").frames_in == 0);
}

TEST_CASE("relaunching gives the same report modulo timing") {
  const std::string input = dataset(5000, 3);
  auto once = [&] {
    Deployment d = launch(chain(Mode::Encrypted, 2), local(input));
    return d.await_completion(60s);
  };
  PipelineReport a = once(), b = once();
  CHECK(a.result == b.result);
  for (std::size_t i = 0; i < a.stages.size(); ++i) {
    CHECK(a.stages[i].frames_in == b.stages[i].frames_in);
    CHECK(a.stages[i].bytes_out == b.stages[i].bytes_out);
  }
}

TEST_CASE("scale_stage") {
  // large enough that the first router is still dispatching when scaling
  // happens, despite socket buffers and receive queues
  const std::string input = dataset(400000, 11);
  const auto oracle = bench::oracle_delayed_flights(input);
  LaunchOptions slow = local(input);
  slow.realistic_delay = true;
  slow.cost_model.per_call_overhead = 3ms;

  SUBCASE("argument errors") {
    Deployment d = launch(chain(Mode::Clear, 1), local(input));
    CHECK_ERRC(d.scale_stage("sgx_mapper", 0), Errc::InvalidScale);
    CHECK_ERRC(d.scale_stage("data_stream", 2), Errc::CannotScaleSource);
    CHECK_ERRC(d.scale_stage("nope", 2), Errc::UnknownStage);
    CHECK_ERRC(d.scale_stage("router_mapper_filter", 2), Errc::InvalidScale);
    d.await_completion(60s);
  }
  SUBCASE("1 -> 2 mappers mid-run splits the rest of the frames") {
    PipelineSpec spec = chain(Mode::Enclave, 1);
    spec.chunk_records = 2000;
    Deployment d = launch(spec, slow);
    std::this_thread::sleep_for(100ms);
    d.scale_stage("sgx_mapper", 2);
    CHECK(d.active_workers("sgx_mapper") == 2);
    PipelineReport r = d.await_completion(120s);
    const auto& per = r.stage("sgx_mapper").per_component_in;
    REQUIRE(per.size() == 2);
    CHECK(per[1] > 0);
    CHECK(bench::equivalent(bench::from_reduce_state(r.result), oracle));
  }
  SUBCASE("2 -> 1 filters mid-run keeps the output") {
    PipelineSpec spec = chain(Mode::Enclave, 2);
    spec.chunk_records = 2000;
    Deployment d = launch(spec, slow);
    std::this_thread::sleep_for(150ms);
    d.scale_stage("sgx_filter", 1);
    PipelineReport r = d.await_completion(120s);
    CHECK(r.stage("sgx_filter").components == 2);
    CHECK(bench::equivalent(bench::from_reduce_state(r.result), oracle));
  }
}

TEST_CASE("a wedged worker produces a Timeout naming its stage") {
  const std::string input = dataset(20000, 5);
  LaunchOptions o = local(input);
  o.fault.wedge_stage = "sgx_filter";
  o.fault.after_frames = 1;
  PipelineSpec spec = chain(Mode::Clear, 1);
  spec.chunk_records = 500;
  Deployment d = launch(spec, o);
  try {
    d.await_completion(1500ms);
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Timeout);
    const std::string what = e.what();
    CAPTURE(what);
    CHECK(what.find("stage sgx_filter stalled") != std::string::npos);
    CHECK(what.find("sgx_filter-0 processing") != std::string::npos);
  }
}
