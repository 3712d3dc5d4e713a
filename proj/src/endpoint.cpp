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

#include "lcq/endpoint.hpp"

#include <httplib.h>

#include "lcq/error.hpp"
#include "lcq/ntriples.hpp"

namespace lcq::sync {

trs::TrsDescriptor TrsEndpoint::fetch_descriptor() {
  ++trs_requests_;
  return do_fetch_descriptor();
}

trs::BasePage TrsEndpoint::fetch_base_page(std::size_t n) {
  ++trs_requests_;
  return do_fetch_base_page(n);
}

trs::ChangeLogPage TrsEndpoint::fetch_changelog_page(std::size_t n) {
  ++trs_requests_;
  return do_fetch_changelog_page(n);
}

std::optional<rdf::Graph> TrsEndpoint::fetch_resource(const rdf::Iri& uri) {
  ++resource_requests_;
  return do_fetch_resource(uri);
}

std::string path_of(const rdf::Iri& uri) {
  const auto& s = uri.str();
  auto scheme_end = s.find("://");
  if (scheme_end == std::string::npos) return s;
  auto path_start = s.find('/', scheme_end + 3);
  return path_start == std::string::npos ? "/" : s.substr(path_start);
}

HttpEndpoint::HttpEndpoint(std::string server_id, const std::string& base_url,
                           std::chrono::milliseconds timeout)
    : TrsEndpoint(std::move(server_id)), client_(std::make_unique<httplib::Client>(base_url)) {
  client_->set_keep_alive(true);
  client_->set_tcp_nodelay(true);
  client_->set_connection_timeout(timeout);
  client_->set_read_timeout(timeout);
}

HttpEndpoint::~HttpEndpoint() = default;

std::string HttpEndpoint::get_json(const std::string& path) {
  std::lock_guard lock(mutex_);
  auto res = client_->Get(path);
  if (!res) throw TransportError(server_id() + ": GET " + path + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw TransportError(server_id() + ": GET " + path + " returned " + std::to_string(res->status));
  return res->body;
}

trs::TrsDescriptor HttpEndpoint::do_fetch_descriptor() {
  return trs::descriptor_from_json(get_json("/trs"));
}

trs::BasePage HttpEndpoint::do_fetch_base_page(std::size_t n) {
  return trs::base_page_from_json(get_json("/trs/base?page=" + std::to_string(n)));
}

trs::ChangeLogPage HttpEndpoint::do_fetch_changelog_page(std::size_t n) {
  return trs::changelog_page_from_json(get_json("/trs/changelog?page=" + std::to_string(n)));
}

std::optional<rdf::Graph> HttpEndpoint::do_fetch_resource(const rdf::Iri& uri) {
  const std::string path = path_of(uri);
  std::lock_guard lock(mutex_);
  auto res = client_->Get(path, {{"Accept", std::string(rdf::kNTriplesMediaType)}});
  if (!res) throw TransportError(server_id() + ": GET " + path + " failed: " + httplib::to_string(res.error()));
  if (res->status == 404) return std::nullopt;
  if (res->status != 200)
    throw TransportError(server_id() + ": GET " + path + " returned " + std::to_string(res->status));
  try {
    return rdf::parse_ntriples(res->body);
  } catch (const ParseError& e) {
    throw TransportError(server_id() + ": bad resource body for " + uri.str() + ": " + e.what());
  }
}

}  // namespace lcq::sync
