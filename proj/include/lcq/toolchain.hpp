// Copyright 2026 The LCQ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lcq/endpoint.hpp"
#include "lcq/rdf.hpp"
#include "lcq/trs.hpp"

namespace httplib {
class Server;
}

// Miniature engineering toolchain: requirements (ProR-like), design blocks
// (Simulink-like) and change requests (Bugzilla-like) served as linked data
// with a TRS each.
namespace lcq::sim {

namespace tc {
inline constexpr std::string_view kNamespace = "http://example.org/toolchain#";
inline constexpr std::string_view kRequirement = "http://example.org/toolchain#Requirement";
inline constexpr std::string_view kSimulinkBlock = "http://example.org/toolchain#SimulinkBlock";
inline constexpr std::string_view kChangeRequest = "http://example.org/toolchain#ChangeRequest";
inline constexpr std::string_view kSatisfies = "http://example.org/toolchain#satisfies";
inline constexpr std::string_view kRefines = "http://example.org/toolchain#refines";
inline constexpr std::string_view kTracks = "http://example.org/toolchain#tracks";
inline constexpr std::string_view kStatus = "http://example.org/toolchain#status";
inline constexpr std::string_view kTitle = "http://purl.org/dc/terms/title";
}  // namespace tc

enum class ResourceType { Requirement, SimulinkBlock, ChangeRequest };
enum class LinkKind { Satisfies, Refines, Tracks };

std::string_view to_string(LinkKind kind);
LinkKind parse_link_kind(std::string_view text);  // "satisfies" | "refines" | "tracks"

struct Link {
  LinkKind kind;
  rdf::Iri target;
  auto operator<=>(const Link&) const = default;
};

struct ToolResource {
  rdf::Iri uri;
  ResourceType type;
  std::string title;
  std::optional<std::string> status;  // requirements and change requests
  std::vector<Link> links;            // stored on the source resource only

  rdf::Graph to_graph() const;
  bool operator==(const ToolResource&) const = default;
};

// Resource URI -> current state.
using GroundTruth = std::map<rdf::Iri, ToolResource>;

struct ServiceOptions {
  std::size_t page_size = trs::kDefaultPageSize;
  // Rebase the TRS after every N recorded events; 0 disables.
  std::uint64_t rebase_every = 0;
};

// One mock tool service with an embedded TRS. Mutations are serialized and
// each records exactly one change event; listeners run after the event is
// readable from the change log, in record order.
class ToolService {
 public:
  using ChangeListener = std::function<void(const trs::ChangeEvent&)>;

  ToolService(std::string id, std::string base_url, ServiceOptions options = {});

  const std::string& id() const { return id_; }
  const std::string& base_url() const { return base_url_; }
  rdf::Iri resource_uri(std::string_view local_id) const;

  // Throws ContractViolation when the resource already exists.
  trs::ChangeEvent create(ToolResource resource, trs::Millis now);
  // Throws ContractViolation when the resource does not exist.
  trs::ChangeEvent modify(ToolResource resource, trs::Millis now);
  trs::ChangeEvent remove(const rdf::Iri& uri, trs::Millis now);

  // N-Triples body, nullopt (404) for unknown or deleted resources.
  std::optional<std::string> serve_resource(const rdf::Iri& uri) const;
  std::optional<ToolResource> get(const rdf::Iri& uri) const;

  std::set<rdf::Iri> live_uris() const;
  GroundTruth live() const;
  // Every live resource in its own named graph.
  rdf::Dataset live_dataset() const;

  void add_listener(ChangeListener listener);
  void rebase(trs::Millis now);

  trs::TrackedResourceSet& trs() { return trs_; }
  const trs::TrackedResourceSet& trs() const { return trs_; }

  std::uint64_t resource_gets_served() const { return resource_gets_; }

 private:
  trs::ChangeEvent record(const rdf::Iri& uri, trs::ChangeKind kind, trs::Millis now);

  std::string id_;
  std::string base_url_;
  ServiceOptions options_;
  trs::TrackedResourceSet trs_;
  mutable std::shared_mutex state_mutex_;
  std::map<rdf::Iri, ToolResource> resources_;
  std::mutex mutation_mutex_;
  std::vector<ChangeListener> listeners_;
  mutable std::atomic<std::uint64_t> resource_gets_{0};
};

// In-process endpoint over a ToolService, with switchable failures for tests.
class LocalEndpoint : public sync::TrsEndpoint {
 public:
  explicit LocalEndpoint(ToolService& service) : TrsEndpoint(service.id()), service_(service) {}

  // While set, every call throws TransportError.
  void set_offline(bool offline) { offline_ = offline; }
  // The next `n` resource fetches throw TransportError.
  void fail_next_fetches(int n) { failing_fetches_ = n; }

 protected:
  trs::TrsDescriptor do_fetch_descriptor() override;
  trs::BasePage do_fetch_base_page(std::size_t n) override;
  trs::ChangeLogPage do_fetch_changelog_page(std::size_t n) override;
  std::optional<rdf::Graph> do_fetch_resource(const rdf::Iri& uri) override;

 private:
  void check_online() const;

  ToolService& service_;
  std::atomic<bool> offline_{false};
  std::atomic<int> failing_fetches_{0};
};

// HTTP surface of a ToolService: GET /trs, /trs/base?page=n,
// /trs/changelog?page=n and /resources/{id}.
class ServiceHttpServer {
 public:
  ServiceHttpServer();
  ~ServiceHttpServer();

  ServiceHttpServer(const ServiceHttpServer&) = delete;
  ServiceHttpServer& operator=(const ServiceHttpServer&) = delete;

  // Binds to an ephemeral (port 0) or fixed port and returns it.
  int bind(const std::string& host = "127.0.0.1", int port = 0);
  void serve(ToolService& service);
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

inline constexpr std::string_view kRequirementsId = "reqs";
inline constexpr std::string_view kDesignId = "design";
inline constexpr std::string_view kChangesId = "changes";

// The three services, either in-process only or each behind its own HTTP
// server on 127.0.0.1.
class Toolchain {
 public:
  static std::unique_ptr<Toolchain> local(ServiceOptions options = {});
  static std::unique_ptr<Toolchain> http(ServiceOptions options = {}, std::vector<int> ports = {});
  ~Toolchain();

  ToolService& requirements() { return *services_[0]; }
  ToolService& design() { return *services_[1]; }
  ToolService& changes() { return *services_[2]; }
  std::vector<ToolService*> services();
  ToolService* find(std::string_view id);

  bool is_http() const { return !servers_.empty(); }

  // Endpoint per service: HTTP when served over HTTP, in-process otherwise.
  std::vector<std::unique_ptr<sync::TrsEndpoint>> make_endpoints() const;

  rdf::Dataset live_dataset() const;
  GroundTruth live() const;

 private:
  Toolchain() = default;
  std::vector<std::unique_ptr<ToolService>> services_;
  std::vector<std::unique_ptr<ServiceHttpServer>> servers_;
};

// Link between fixture resources by local id, e.g. {"B1", Satisfies, "R1"}.
struct PlannedLink {
  std::string from;
  LinkKind kind;
  std::string to;
};

struct FixtureSpec {
  std::size_t requirements = 0;
  std::size_t blocks = 0;
  std::size_t change_requests = 0;
  std::vector<PlannedLink> links;
  // Extra random links, each candidate drawn with this probability.
  double random_link_probability = 0.0;
  std::uint64_t seed = 1;
};

// R1..R5; R2 refines R1, R1 refines R4; B1 satisfies R1, B2 satisfies R2;
// CR1 tracks R1, CR2 tracks R2, CR3 tracks R4.
FixtureSpec canonical_fixture();

// Populates the services (one Creation event per resource, requirements first
// so link targets exist) and returns the ground truth. Local ids are R<n>,
// B<n> and CR<n>.
GroundTruth seed_fixture(const FixtureSpec& spec, Toolchain& toolchain, trs::Millis now);

struct OpWeights {
  double create = 1.0;
  double modify = 2.0;
  double remove = 1.0;
};

struct WorkloadScript {
  std::uint64_t seed = 1;
  std::size_t steps = 0;
  double rate_ops_per_s = 0.0;  // 0 runs unpaced
  OpWeights requirement;
  OpWeights block;
  OpWeights change_request;
  double link_probability = 0.5;
};

enum class MutationOp { Create, Modify, Delete };

struct Mutation {
  MutationOp op;
  rdf::Iri uri;
  trs::Millis ts;
  std::optional<ToolResource> state;  // after-state for Create/Modify
};

// Applies one logged mutation to a ground-truth map.
void apply_mutation(GroundTruth& truth, const Mutation& m);

// Executes the script against the services (starting from `truth`, which is
// updated) and returns the mutation log. `stop` ends the run early;
// `before_step` runs before step i (0-based) is executed.
std::vector<Mutation> run_workload(const WorkloadScript& script, Toolchain& toolchain, GroundTruth& truth,
                                   const std::atomic<bool>* stop = nullptr,
                                   const std::function<void(std::size_t)>& before_step = {});

// Deterministic op generator behind run_workload. Never targets a deleted
// resource; falls back to a create when a type has no live resources.
class WorkloadGenerator {
 public:
  WorkloadGenerator(const WorkloadScript& script, Toolchain& toolchain);

  // Next mutation given the current ground truth; ts is left 0.
  Mutation next(const GroundTruth& truth);

 private:
  ToolService& service_for(ResourceType type);
  std::vector<Link> random_links(ResourceType type, const GroundTruth& truth, const rdf::Iri& self);

  WorkloadScript script_;
  Toolchain& toolchain_;
  std::mt19937_64 rng_;
  std::map<ResourceType, std::size_t> next_index_;
};

}  // namespace lcq::sim
