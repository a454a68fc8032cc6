// Copyright 2026 The FUSI Scanner Authors. All Rights Reserved.
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

#include "fusi/service.hpp"

#include <httplib.h>

#include <json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>

#include "fusi/error.hpp"

namespace fusi {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr const char* kJson = "application/json";

/// An error that maps directly onto a response.
struct RequestError {
  int status;
  std::string code;
  std::string message;
};

std::optional<double> parse_threshold_text(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw RequestError{400, "bad_threshold", "threshold is not a number"};
  return v;
}

void check_request_threshold(double t) {
  if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
    throw RequestError{400, "bad_threshold", "threshold must be within [0, 1]"};
  }
}

struct ParsedRequest {
  std::vector<std::uint8_t> image;
  std::optional<double> threshold;
};

ParsedRequest parse_multipart(const httplib::Request& req) {
  ParsedRequest out;
  const bool has_file = req.has_file("image");
  if (!has_file) throw RequestError{400, "missing_image", "multipart request needs an \"image\" field"};
  if (req.has_file("image_b64") || req.files.count("image") != 1) {
    throw RequestError{400, "ambiguous_image", "exactly one image must be supplied"};
  }
  const auto file = req.get_file_value("image");
  out.image.assign(file.content.begin(), file.content.end());
  if (req.has_file("threshold")) out.threshold = parse_threshold_text(req.get_file_value("threshold").content);
  return out;
}

ParsedRequest parse_json_body(const std::string& body) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw RequestError{400, "bad_json", "request body is not valid JSON"};
  if (!doc.is_object()) throw RequestError{400, "bad_json", "request body must be a JSON object"};
  const auto it = doc.find("image_b64");
  if (it == doc.end()) throw RequestError{400, "missing_image", "JSON request needs \"image_b64\""};
  if (doc.contains("image")) throw RequestError{400, "ambiguous_image", "exactly one image must be supplied"};
  if (!it->is_string()) throw RequestError{400, "bad_base64", "\"image_b64\" must be a string"};
  auto bytes = base64_decode(it->get_ref<const std::string&>());
  if (!bytes) throw RequestError{400, "bad_base64", "\"image_b64\" is not valid base64"};
  ParsedRequest out;
  out.image = std::move(*bytes);
  if (const auto t = doc.find("threshold"); t != doc.end() && !t->is_null()) {
    if (!t->is_number()) throw RequestError{400, "bad_threshold", "threshold must be a number"};
    out.threshold = t->get<double>();
  }
  return out;
}

ParsedRequest parse_request(const httplib::Request& req) {
  ParsedRequest out;
  if (req.is_multipart_form_data()) {
    out = parse_multipart(req);
  } else {
    const std::string type = req.get_header_value("Content-Type");
    if (type.rfind(kJson, 0) != 0) {
      throw RequestError{400, "unsupported_media_type", "send multipart/form-data or application/json"};
    }
    out = parse_json_body(req.body);
  }
  if (req.has_param("threshold")) {
    if (out.threshold) throw RequestError{400, "bad_threshold", "threshold given twice"};
    out.threshold = parse_threshold_text(req.get_param_value("threshold"));
  }
  if (out.threshold) check_request_threshold(*out.threshold);
  if (out.image.empty()) throw RequestError{422, "undecodable_image", "image is empty"};
  return out;
}

std::string_view status_code_name(int status) {
  switch (status) {
    case 400:
      return "bad_request";
    case 404:
      return "not_found";
    case 405:
      return "method_not_allowed";
    case 413:
      return "payload_too_large";
    case 414:
      return "uri_too_long";
    case 422:
      return "undecodable_image";
    default:
      return status >= 500 ? "internal_error" : "error";
  }
}

}  // namespace

std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (std::size_t i = 0; i < kAlphabet.size(); ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);

  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  std::size_t symbols = 0;
  std::size_t padding = 0;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
    if (c == '=') {
      ++padding;
      continue;
    }
    if (padding > 0 || lookup[c] < 0) return std::nullopt;
    acc = (acc << 6) | static_cast<std::uint32_t>(lookup[c]);
    bits += 6;
    ++symbols;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>(acc >> bits));
    }
  }
  const std::size_t rem = symbols % 4;
  if (rem == 1 || padding > 2) return std::nullopt;
  if (padding > 0 && (symbols + padding) % 4 != 0) return std::nullopt;
  // Leftover bits must be zero for a canonical encoding.
  if ((acc & ((1u << bits) - 1)) != 0) return std::nullopt;
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    for (int s = 18; s >= 0; s -= 6) out.push_back(kAlphabet[(v >> s) & 63]);
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string classify_response_json(const Diagnosis& d, const std::string& model_name, double latency_ms) {
  ordered_json j;
  j["label"] = d.label;
  j["confidence"] = d.confidence;
  ordered_json per_class = ordered_json::object();
  for (const auto& [label, p] : d.per_class) per_class[label] = p;
  j["per_class"] = std::move(per_class);
  j["recommendation"] = d.recommendation ? ordered_json(*d.recommendation) : ordered_json(nullptr);
  j["model"] = model_name;
  j["latency_ms"] = latency_ms;
  return j.dump();
}

std::string error_json(std::string_view code, std::string_view message) {
  ordered_json j;
  j["code"] = code;
  j["message"] = message;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

struct InferenceService::Impl {
  ModelSpec model;
  ModelInfo info;
  ServiceOptions options;
  httplib::Server server;
  int port = -1;

  void classify(const httplib::Request& req, httplib::Response& res) const {
    const auto start = std::chrono::steady_clock::now();
    try {
      const ParsedRequest parsed = parse_request(req);
      const double threshold = parsed.threshold.value_or(options.default_threshold);
      const Diagnosis d = classify_bytes(model, parsed.image, threshold);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      res.set_content(classify_response_json(d, model.architecture_name, ms), kJson);
    } catch (const RequestError& e) {
      res.status = e.status;
      res.set_content(error_json(e.code, e.message), kJson);
    } catch (const InputError& e) {
      res.status = 422;
      res.set_content(error_json("undecodable_image", e.what()), kJson);
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_json("internal_error", e.what()), kJson);
    }
  }

  void install_routes() {
    server.set_payload_max_length(kMaxRequestBytes);
    // The library default is SO_REUSEPORT, which would let a second instance
    // share a busy port instead of failing at startup.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    if (options.cors_origin) {
      server.set_default_headers({{"Access-Control-Allow-Origin", *options.cors_origin},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"},
                                  {"Vary", "Origin"}});
      server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
    server.Post("/v1/classify",
                [this](const httplib::Request& req, httplib::Response& res) { classify(req, res); });
    server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      ordered_json j;
      j["status"] = "ok";
      j["model"] = model.architecture_name;
      res.set_content(j.dump(), kJson);
    });
    server.Get("/v1/model-info", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(model_info_to_json(info), kJson);
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      res.set_content(error_json(status_code_name(res.status), httplib::status_message(res.status)), kJson);
      return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      res.status = 500;
      res.set_content(error_json("internal_error", "unhandled failure"), kJson);
    });
  }
};

InferenceService::InferenceService(ModelSpec model, ModelInfo info, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
  validate(model);
  check_threshold(options.default_threshold);
  impl_->model = std::move(model);
  impl_->info = std::move(info);
  impl_->options = std::move(options);
  impl_->install_routes();
}

InferenceService::~InferenceService() { stop(); }

int InferenceService::bind() {
  const auto& o = impl_->options;
  if (o.port < 0 || o.port > 65535) throw ConfigError("port must be within [0, 65535]");
  int bound = -1;
  if (o.port == 0) {
    bound = impl_->server.bind_to_any_port(o.bind_address);
  } else if (impl_->server.bind_to_port(o.bind_address, o.port)) {
    bound = o.port;
  }
  if (bound <= 0) {
    throw ConfigError("cannot bind " + o.bind_address + ":" + std::to_string(o.port));
  }
  impl_->port = bound;
  return bound;
}

void InferenceService::run() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void InferenceService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

int InferenceService::port() const { return impl_->port; }

}  // namespace fusi
