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

#include "lcq/toolchain.hpp"

#include <algorithm>
#include <array>
#include <chrono>

#include <httplib.h>

#include "lcq/error.hpp"
#include "lcq/ntriples.hpp"

namespace lcq::sim {

namespace {

rdf::Iri iri(std::string_view s) { return rdf::Iri(std::string(s)); }

std::string_view type_iri(ResourceType type) {
  switch (type) {
    case ResourceType::Requirement: return tc::kRequirement;
    case ResourceType::SimulinkBlock: return tc::kSimulinkBlock;
    case ResourceType::ChangeRequest: return tc::kChangeRequest;
  }
  return "";
}

std::string_view link_predicate(LinkKind kind) {
  switch (kind) {
    case LinkKind::Satisfies: return tc::kSatisfies;
    case LinkKind::Refines: return tc::kRefines;
    case LinkKind::Tracks: return tc::kTracks;
  }
  return "";
}

std::string_view id_prefix(ResourceType type) {
  switch (type) {
    case ResourceType::Requirement: return "R";
    case ResourceType::SimulinkBlock: return "B";
    case ResourceType::ChangeRequest: return "CR";
  }
  return "";
}

std::string_view type_name(ResourceType type) {
  switch (type) {
    case ResourceType::Requirement: return "Requirement";
    case ResourceType::SimulinkBlock: return "Block";
    case ResourceType::ChangeRequest: return "Change request";
  }
  return "";
}

ResourceType type_of_local_id(std::string_view local_id) {
  if (local_id.rfind("CR", 0) == 0) return ResourceType::ChangeRequest;
  if (local_id.rfind("R", 0) == 0) return ResourceType::Requirement;
  if (local_id.rfind("B", 0) == 0) return ResourceType::SimulinkBlock;
  throw ContractViolation("unknown fixture id '" + std::string(local_id) + "'");
}

std::string local_id_of(const rdf::Iri& uri) {
  const auto& s = uri.str();
  return s.substr(s.rfind('/') + 1);
}

std::string service_id_for(ResourceType type) {
  switch (type) {
    case ResourceType::Requirement: return std::string(kRequirementsId);
    case ResourceType::SimulinkBlock: return std::string(kDesignId);
    case ResourceType::ChangeRequest: return std::string(kChangesId);
  }
  return "";
}

}  // namespace

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::Satisfies: return "satisfies";
    case LinkKind::Refines: return "refines";
    case LinkKind::Tracks: return "tracks";
  }
  return "";
}

LinkKind parse_link_kind(std::string_view text) {
  if (text == "satisfies") return LinkKind::Satisfies;
  if (text == "refines") return LinkKind::Refines;
  if (text == "tracks") return LinkKind::Tracks;
  throw ConfigError("unknown link kind '" + std::string(text) + "'");
}

rdf::Graph ToolResource::to_graph() const {
  rdf::Graph g;
  g.insert({uri, iri(rdf::vocab::kRdfType), iri(type_iri(type))});
  g.insert({uri, iri(tc::kTitle), rdf::Literal(title)});
  if (status) g.insert({uri, iri(tc::kStatus), rdf::Literal(*status)});
  for (const auto& link : links) g.insert({uri, iri(link_predicate(link.kind)), link.target});
  return g;
}

ToolService::ToolService(std::string id, std::string base_url, ServiceOptions options)
    : id_(std::move(id)), base_url_(std::move(base_url)), options_(options), trs_(options.page_size) {}

rdf::Iri ToolService::resource_uri(std::string_view local_id) const {
  return rdf::Iri(base_url_ + "/resources/" + std::string(local_id));
}

trs::ChangeEvent ToolService::create(ToolResource resource, trs::Millis now) {
  std::lock_guard mutation(mutation_mutex_);
  const rdf::Iri uri = resource.uri;
  {
    std::unique_lock lock(state_mutex_);
    if (!resources_.emplace(uri, std::move(resource)).second)
      throw ContractViolation(id_ + ": resource already exists: " + uri.str());
  }
  return record(uri, trs::ChangeKind::Creation, now);
}

trs::ChangeEvent ToolService::modify(ToolResource resource, trs::Millis now) {
  std::lock_guard mutation(mutation_mutex_);
  const rdf::Iri uri = resource.uri;
  {
    std::unique_lock lock(state_mutex_);
    auto it = resources_.find(uri);
    if (it == resources_.end()) throw ContractViolation(id_ + ": no such resource: " + uri.str());
    it->second = std::move(resource);
  }
  return record(uri, trs::ChangeKind::Modification, now);
}

trs::ChangeEvent ToolService::remove(const rdf::Iri& uri, trs::Millis now) {
  std::lock_guard mutation(mutation_mutex_);
  {
    std::unique_lock lock(state_mutex_);
    if (resources_.erase(uri) == 0) throw ContractViolation(id_ + ": no such resource: " + uri.str());
  }
  return record(uri, trs::ChangeKind::Deletion, now);
}

trs::ChangeEvent ToolService::record(const rdf::Iri& uri, trs::ChangeKind kind, trs::Millis now) {
  auto event = trs_.record_change(uri, kind, now);
  if (options_.rebase_every != 0 && event.order % options_.rebase_every == 0) {
    trs_.rebase(live_uris(), now);
  }
  for (const auto& listener : listeners_) listener(event);
  return event;
}

std::optional<std::string> ToolService::serve_resource(const rdf::Iri& uri) const {
  ++resource_gets_;
  std::shared_lock lock(state_mutex_);
  auto it = resources_.find(uri);
  if (it == resources_.end()) return std::nullopt;
  return rdf::serialize_ntriples(it->second.to_graph());
}

std::optional<ToolResource> ToolService::get(const rdf::Iri& uri) const {
  std::shared_lock lock(state_mutex_);
  auto it = resources_.find(uri);
  if (it == resources_.end()) return std::nullopt;
  return it->second;
}

std::set<rdf::Iri> ToolService::live_uris() const {
  std::shared_lock lock(state_mutex_);
  std::set<rdf::Iri> out;
  for (const auto& [uri, r] : resources_) out.insert(uri);
  return out;
}

GroundTruth ToolService::live() const {
  std::shared_lock lock(state_mutex_);
  return resources_;
}

rdf::Dataset ToolService::live_dataset() const {
  rdf::Dataset d;
  for (const auto& [uri, r] : live()) d.upsert_graph(uri, r.to_graph());
  return d;
}

void ToolService::add_listener(ChangeListener listener) {
  std::lock_guard mutation(mutation_mutex_);
  listeners_.push_back(std::move(listener));
}

void ToolService::rebase(trs::Millis now) {
  std::lock_guard mutation(mutation_mutex_);
  trs_.rebase(live_uris(), now);
}

void LocalEndpoint::check_online() const {
  if (offline_) throw TransportError(server_id() + ": offline");
}

trs::TrsDescriptor LocalEndpoint::do_fetch_descriptor() {
  check_online();
  return service_.trs().document();
}

trs::BasePage LocalEndpoint::do_fetch_base_page(std::size_t n) {
  check_online();
  return service_.trs().base_page(n);
}

trs::ChangeLogPage LocalEndpoint::do_fetch_changelog_page(std::size_t n) {
  check_online();
  return service_.trs().changelog_page(n);
}

std::optional<rdf::Graph> LocalEndpoint::do_fetch_resource(const rdf::Iri& uri) {
  check_online();
  if (failing_fetches_ > 0) {
    --failing_fetches_;
    throw TransportError(server_id() + ": injected fetch failure");
  }
  auto body = service_.serve_resource(uri);
  if (!body) return std::nullopt;
  return rdf::parse_ntriples(*body);
}

ServiceHttpServer::ServiceHttpServer() : server_(std::make_unique<httplib::Server>()) {
  server_->set_tcp_nodelay(true);
  // httplib's default SO_REUSEPORT would let a second server share a taken port.
  server_->set_socket_options([](int sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
}

ServiceHttpServer::~ServiceHttpServer() { stop(); }

int ServiceHttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port = server_->bind_to_any_port(host);
    if (port < 0) throw TransportError("cannot bind " + host);
  } else if (!server_->bind_to_port(host, port)) {
    throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

namespace {

std::optional<std::size_t> page_param(const httplib::Request& req) {
  if (!req.has_param("page")) return 0;
  try {
    std::size_t used = 0;
    const auto text = req.get_param_value("page");
    const auto n = std::stoull(text, &used);
    if (used != text.size()) return std::nullopt;
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

void ServiceHttpServer::serve(ToolService& service) {
  ToolService* svc = &service;
  server_->Get("/trs", [svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(trs::descriptor_to_json(svc->trs().document(), svc->base_url()), "application/json");
  });
  server_->Get("/trs/base", [svc](const httplib::Request& req, httplib::Response& res) {
    auto page = page_param(req);
    if (!page) {
      res.status = 400;
      return;
    }
    res.set_content(trs::base_page_to_json(svc->trs().base_page(*page), svc->base_url()), "application/json");
  });
  server_->Get("/trs/changelog", [svc](const httplib::Request& req, httplib::Response& res) {
    auto page = page_param(req);
    if (!page) {
      res.status = 400;
      return;
    }
    res.set_content(trs::changelog_page_to_json(svc->trs().changelog_page(*page), svc->base_url()),
                    "application/json");
  });
  server_->Get(R"(/resources/([^/]+))", [svc](const httplib::Request& req, httplib::Response& res) {
    auto body = svc->serve_resource(svc->resource_uri(req.matches[1].str()));
    res.set_header("Cache-Control", "max-age=0");
    if (!body) {
      res.status = 404;
      return;
    }
    res.set_content(*body, std::string(rdf::kNTriplesMediaType));
  });
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void ServiceHttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::unique_ptr<Toolchain> Toolchain::local(ServiceOptions options) {
  std::unique_ptr<Toolchain> tc(new Toolchain());
  for (auto id : {kRequirementsId, kDesignId, kChangesId}) {
    tc->services_.push_back(std::make_unique<ToolService>(
        std::string(id), "http://" + std::string(id) + ".example.org", options));
  }
  return tc;
}

std::unique_ptr<Toolchain> Toolchain::http(ServiceOptions options, std::vector<int> ports) {
  std::unique_ptr<Toolchain> tc(new Toolchain());
  ports.resize(3, 0);
  std::size_t i = 0;
  for (auto id : {kRequirementsId, kDesignId, kChangesId}) {
    auto server = std::make_unique<ServiceHttpServer>();
    const int port = server->bind("127.0.0.1", ports[i++]);
    auto service = std::make_unique<ToolService>(std::string(id),
                                                 "http://127.0.0.1:" + std::to_string(port), options);
    server->serve(*service);
    tc->services_.push_back(std::move(service));
    tc->servers_.push_back(std::move(server));
  }
  return tc;
}

Toolchain::~Toolchain() {
  // servers reference the services
  for (auto& s : servers_) s->stop();
}

std::vector<ToolService*> Toolchain::services() {
  std::vector<ToolService*> out;
  for (auto& s : services_) out.push_back(s.get());
  return out;
}

ToolService* Toolchain::find(std::string_view id) {
  for (auto& s : services_) {
    if (s->id() == id) return s.get();
  }
  return nullptr;
}

std::vector<std::unique_ptr<sync::TrsEndpoint>> Toolchain::make_endpoints() const {
  std::vector<std::unique_ptr<sync::TrsEndpoint>> out;
  for (const auto& s : services_) {
    if (is_http()) {
      out.push_back(std::make_unique<sync::HttpEndpoint>(s->id(), s->base_url()));
    } else {
      out.push_back(std::make_unique<LocalEndpoint>(*s));
    }
  }
  return out;
}

rdf::Dataset Toolchain::live_dataset() const {
  rdf::Dataset d;
  for (const auto& s : services_) {
    for (const auto& [uri, r] : s->live()) d.upsert_graph(uri, r.to_graph());
  }
  return d;
}

GroundTruth Toolchain::live() const {
  GroundTruth out;
  for (const auto& s : services_) out.merge(s->live());
  return out;
}

FixtureSpec canonical_fixture() {
  FixtureSpec spec;
  spec.requirements = 5;
  spec.blocks = 4;
  spec.change_requests = 3;
  spec.links = {
      {"R2", LinkKind::Refines, "R1"},    {"R1", LinkKind::Refines, "R4"},
      {"B1", LinkKind::Satisfies, "R1"},  {"B2", LinkKind::Satisfies, "R2"},
      {"CR1", LinkKind::Tracks, "R1"},    {"CR2", LinkKind::Tracks, "R2"},
      {"CR3", LinkKind::Tracks, "R4"},
  };
  return spec;
}

GroundTruth seed_fixture(const FixtureSpec& spec, Toolchain& toolchain, trs::Millis now) {
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution coin(0.5);
  auto service = [&](ResourceType type) -> ToolService& { return *toolchain.find(service_id_for(type)); };
  auto uri_of = [&](const std::string& local_id) { return service(type_of_local_id(local_id)).resource_uri(local_id); };

  std::vector<ToolResource> resources;
  std::map<std::string, std::size_t> by_id;
  auto add = [&](ResourceType type, std::size_t count) {
    for (std::size_t i = 1; i <= count; ++i) {
      const std::string local = std::string(id_prefix(type)) + std::to_string(i);
      ToolResource r{uri_of(local), type, std::string(type_name(type)) + " " + local, std::nullopt, {}};
      if (type != ResourceType::SimulinkBlock) r.status = coin(rng) ? "APPROVED" : "DRAFT";
      by_id[local] = resources.size();
      resources.push_back(std::move(r));
    }
  };
  add(ResourceType::Requirement, spec.requirements);
  add(ResourceType::SimulinkBlock, spec.blocks);
  add(ResourceType::ChangeRequest, spec.change_requests);

  for (const auto& link : spec.links) {
    auto from = by_id.find(link.from);
    if (from == by_id.end() || !by_id.count(link.to))
      throw ConfigError("fixture link references unknown id: " + link.from + " -> " + link.to);
    resources[from->second].links.push_back({link.kind, uri_of(link.to)});
  }

  if (spec.random_link_probability > 0) {
    std::bernoulli_distribution draw(spec.random_link_probability);
    std::vector<rdf::Iri> reqs, blocks;
    for (const auto& r : resources) {
      if (r.type == ResourceType::Requirement) reqs.push_back(r.uri);
      if (r.type == ResourceType::SimulinkBlock) blocks.push_back(r.uri);
    }
    for (auto& r : resources) {
      auto maybe_link = [&](LinkKind kind, const rdf::Iri& target) {
        Link l{kind, target};
        if (target != r.uri && draw(rng) && std::find(r.links.begin(), r.links.end(), l) == r.links.end())
          r.links.push_back(std::move(l));
      };
      if (r.type == ResourceType::SimulinkBlock) {
        for (const auto& t : reqs) maybe_link(LinkKind::Satisfies, t);
      } else if (r.type == ResourceType::Requirement) {
        for (const auto& t : reqs) maybe_link(LinkKind::Refines, t);
      } else {
        for (const auto& t : reqs) maybe_link(LinkKind::Tracks, t);
        for (const auto& t : blocks) maybe_link(LinkKind::Tracks, t);
      }
    }
  }

  GroundTruth truth;
  for (auto& r : resources) {
    service(r.type).create(r, now);
    truth.emplace(r.uri, std::move(r));
  }
  return truth;
}

void apply_mutation(GroundTruth& truth, const Mutation& m) {
  if (m.op == MutationOp::Delete) {
    truth.erase(m.uri);
  } else {
    truth.insert_or_assign(m.uri, *m.state);
  }
}

WorkloadGenerator::WorkloadGenerator(const WorkloadScript& script, Toolchain& toolchain)
    : script_(script), toolchain_(toolchain), rng_(script.seed) {
  auto check = [](const OpWeights& w) {
    if (w.create < 0 || w.modify < 0 || w.remove < 0) throw ConfigError("workload weights must be >= 0");
    return w.create + w.modify + w.remove;
  };
  if (check(script.requirement) + check(script.block) + check(script.change_request) <= 0)
    throw ConfigError("workload needs at least one positive weight");
}

ToolService& WorkloadGenerator::service_for(ResourceType type) {
  return *toolchain_.find(service_id_for(type));
}

std::vector<Link> WorkloadGenerator::random_links(ResourceType type, const GroundTruth& truth,
                                                  const rdf::Iri& self) {
  std::vector<rdf::Iri> candidates;
  for (const auto& [uri, r] : truth) {
    if (uri == self) continue;
    const bool wanted = type == ResourceType::ChangeRequest ? r.type != ResourceType::ChangeRequest
                                                            : r.type == ResourceType::Requirement;
    if (wanted) candidates.push_back(uri);
  }
  // Order by type and local id so the draw does not depend on the services' hosts.
  std::sort(candidates.begin(), candidates.end(), [&](const rdf::Iri& a, const rdf::Iri& b) {
    const auto ta = truth.at(a).type;
    const auto tb = truth.at(b).type;
    return ta != tb ? ta < tb : local_id_of(a) < local_id_of(b);
  });
  std::vector<Link> links;
  std::bernoulli_distribution draw(script_.link_probability);
  if (candidates.empty() || !draw(rng_)) return links;
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  const LinkKind kind = type == ResourceType::SimulinkBlock ? LinkKind::Satisfies
                        : type == ResourceType::Requirement ? LinkKind::Refines
                                                            : LinkKind::Tracks;
  links.push_back({kind, candidates[pick(rng_)]});
  return links;
}

Mutation WorkloadGenerator::next(const GroundTruth& truth) {
  if (next_index_.empty()) {
    for (auto type : {ResourceType::Requirement, ResourceType::SimulinkBlock, ResourceType::ChangeRequest})
      next_index_[type] = 1;
    for (const auto& [uri, r] : truth) {
      const auto local = local_id_of(uri);
      const auto prefix = id_prefix(r.type);
      if (local.rfind(prefix, 0) != 0) continue;
      try {
        const std::size_t n = std::stoul(local.substr(prefix.size()));
        next_index_[r.type] = std::max(next_index_[r.type], n + 1);
      } catch (const std::exception&) {
      }
    }
  }

  const std::array<std::pair<ResourceType, const OpWeights*>, 3> types = {{
      {ResourceType::Requirement, &script_.requirement},
      {ResourceType::SimulinkBlock, &script_.block},
      {ResourceType::ChangeRequest, &script_.change_request},
  }};
  std::vector<double> weights;
  for (const auto& [type, w] : types) {
    weights.push_back(w->create);
    weights.push_back(w->modify);
    weights.push_back(w->remove);
  }
  std::discrete_distribution<std::size_t> choose(weights.begin(), weights.end());
  const std::size_t choice = choose(rng_);
  const ResourceType type = types[choice / 3].first;
  MutationOp op = static_cast<MutationOp>(choice % 3);

  std::vector<const ToolResource*> live;
  for (const auto& [uri, r] : truth) {
    if (r.type == type) live.push_back(&r);
  }
  if (live.empty()) op = MutationOp::Create;

  ToolService& service = service_for(type);
  if (op == MutationOp::Create) {
    const std::string local = std::string(id_prefix(type)) + std::to_string(next_index_[type]++);
    ToolResource r{service.resource_uri(local), type, std::string(type_name(type)) + " " + local,
                   std::nullopt, {}};
    if (type != ResourceType::SimulinkBlock) {
      r.status = std::bernoulli_distribution(0.5)(rng_) ? "APPROVED" : "DRAFT";
    }
    r.links = random_links(type, truth, r.uri);
    return Mutation{MutationOp::Create, r.uri, 0, std::move(r)};
  }

  std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
  const ToolResource& target = *live[pick(rng_)];
  if (op == MutationOp::Delete) return Mutation{MutationOp::Delete, target.uri, 0, std::nullopt};

  ToolResource r = target;
  r.title = std::string(type_name(type)) + " " + local_id_of(r.uri) + " rev " +
            std::to_string(std::uniform_int_distribution<int>(1, 1000000)(rng_));
  if (r.status) r.status = *r.status == "APPROVED" ? "DRAFT" : "APPROVED";
  if (std::bernoulli_distribution(0.5)(rng_)) r.links = random_links(type, truth, r.uri);
  return Mutation{MutationOp::Modify, r.uri, 0, std::move(r)};
}

std::vector<Mutation> run_workload(const WorkloadScript& script, Toolchain& toolchain, GroundTruth& truth,
                                   const std::atomic<bool>* stop, const std::function<void(std::size_t)>& before_step) {
  WorkloadGenerator generator(script, toolchain);
  std::vector<Mutation> log;
  log.reserve(script.steps);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < script.steps; ++i) {
    if (stop && stop->load()) break;
    if (script.rate_ops_per_s > 0) {
      const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(static_cast<double>(i) / script.rate_ops_per_s));
      std::this_thread::sleep_until(due);
    }
    if (before_step) before_step(i);
    Mutation m = generator.next(truth);
    auto* service = toolchain.find(service_id_for(m.state ? m.state->type : truth.at(m.uri).type));
    m.ts = trs::now_ms();
    switch (m.op) {
      case MutationOp::Create: service->create(*m.state, m.ts); break;
      case MutationOp::Modify: service->modify(*m.state, m.ts); break;
      case MutationOp::Delete: service->remove(m.uri, m.ts); break;
    }
    apply_mutation(truth, m);
    log.push_back(std::move(m));
  }
  return log;
}

}  // namespace lcq::sim
