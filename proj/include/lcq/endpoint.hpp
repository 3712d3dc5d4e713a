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
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "lcq/rdf.hpp"
#include "lcq/trs.hpp"

namespace httplib {
class Client;
}

namespace lcq::sync {

// Client view of one TRS server: the three TRS documents plus resource
// dereferencing. Transport failures throw TransportError. Every call is
// counted so load can be compared across architectures.
class TrsEndpoint {
 public:
  explicit TrsEndpoint(std::string server_id) : server_id_(std::move(server_id)) {}
  virtual ~TrsEndpoint() = default;

  const std::string& server_id() const { return server_id_; }

  trs::TrsDescriptor fetch_descriptor();
  trs::BasePage fetch_base_page(std::size_t n);
  trs::ChangeLogPage fetch_changelog_page(std::size_t n);
  // nullopt when the resource is gone (404).
  std::optional<rdf::Graph> fetch_resource(const rdf::Iri& uri);

  std::uint64_t trs_requests() const { return trs_requests_; }
  std::uint64_t resource_requests() const { return resource_requests_; }
  std::uint64_t total_requests() const { return trs_requests_ + resource_requests_; }

 protected:
  virtual trs::TrsDescriptor do_fetch_descriptor() = 0;
  virtual trs::BasePage do_fetch_base_page(std::size_t n) = 0;
  virtual trs::ChangeLogPage do_fetch_changelog_page(std::size_t n) = 0;
  virtual std::optional<rdf::Graph> do_fetch_resource(const rdf::Iri& uri) = 0;

 private:
  std::string server_id_;
  std::atomic<std::uint64_t> trs_requests_{0};
  std::atomic<std::uint64_t> resource_requests_{0};
};

// Path component of an http(s) IRI, e.g. "/resources/R1".
std::string path_of(const rdf::Iri& uri);

// TRS over HTTP with JSON documents and N-Triples resource bodies.
class HttpEndpoint : public TrsEndpoint {
 public:
  HttpEndpoint(std::string server_id, const std::string& base_url,
               std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  ~HttpEndpoint() override;

 protected:
  trs::TrsDescriptor do_fetch_descriptor() override;
  trs::BasePage do_fetch_base_page(std::size_t n) override;
  trs::ChangeLogPage do_fetch_changelog_page(std::size_t n) override;
  std::optional<rdf::Graph> do_fetch_resource(const rdf::Iri& uri) override;

 private:
  std::string get_json(const std::string& path);

  std::mutex mutex_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace lcq::sync
