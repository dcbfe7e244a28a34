#include "segagent/http_backends.hpp"

#include <cmath>

#include "httplib.h"
#include "segagent/codec.hpp"
#include "segagent/error.hpp"

namespace segagent {

using nlohmann::json;

namespace {

// A fresh client per call: httplib::Client is not safe to share between
// threads, and requests are independent.
std::string post_json(const BackendConfig& cfg, const std::string& path, const json& body) {
  const Endpoint ep = parse_endpoint(cfg.endpoint);
  httplib::Client client(ep.origin);
  const auto secs = static_cast<time_t>(cfg.timeout_seconds);
  const auto usecs = static_cast<time_t>((cfg.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

  const std::string url = ep.path_prefix + path;
  auto res = client.Post(url, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::Transport,
                "POST " + cfg.endpoint + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::Transport, "POST " + cfg.endpoint + path + " returned HTTP " +
                                          std::to_string(res->status) + ": " +
                                          res->body.substr(0, 200));
  }
  return res->body;
}

}  // namespace

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw Error(ErrorCode::Config, "endpoint '" + url + "' must look like http://host[:port][/path]");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::Config, "unsupported scheme in endpoint '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) ep.path_prefix = url.substr(path_start);
  while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  if (ep.origin.size() <= scheme_end + 3) {
    throw Error(ErrorCode::Config, "endpoint '" + url + "' has no host");
  }
  return ep;
}

json build_chat_request(const BackendConfig& cfg, const MllmRequest& req) {
  const std::string data_url = "data:image/png;base64," + base64_encode(encode_png(req.image));
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", req.prompt}});
  content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url}}}});
  json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["messages"] = json::array({json{{"role", "user"}, {"content", content}}});
  return body;
}

std::string parse_chat_response(const std::string& body) {
  const json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::Transport, "chat reply is not a JSON object");
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw Error(ErrorCode::Transport, "chat reply has no choices");
  }
  const json& msg = j["choices"][0].value("message", json::object());
  const json content = msg.value("content", json());
  if (content.is_string()) return content.get<std::string>();
  // Some servers return content as a list of typed parts.
  if (content.is_array()) {
    std::string text;
    for (const json& part : content) {
      if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  }
  throw Error(ErrorCode::Transport, "chat reply message has no text content");
}

json build_segment_request(const Image& img, const BBox& box) {
  return json{{"image_png_b64", base64_encode(encode_png(img))},
              {"box", json::array({box.x1, box.y1, box.x2, box.y2})}};
}

BinaryMask parse_segment_response(const std::string& body) {
  const json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object() || !j.contains("mask_png_b64") ||
      !j["mask_png_b64"].is_string()) {
    throw Error(ErrorCode::BadMaskFormat, "segment reply lacks \"mask_png_b64\"");
  }
  std::vector<std::uint8_t> png;
  try {
    png = base64_decode(j["mask_png_b64"].get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::BadMaskFormat, e.what());
  }
  return mask_decode(png);
}

std::string HttpMllm::complete(const BackendConfig& cfg, const MllmRequest& req) {
  return parse_chat_response(post_json(cfg, "/v1/chat/completions", build_chat_request(cfg, req)));
}

BinaryMask HttpSegmenter::segment(const BackendConfig& cfg, const Image& img, const BBox& box,
                                  std::string_view) {
  return parse_segment_response(post_json(cfg, "/segment", build_segment_request(img, box)));
}

}  // namespace segagent
