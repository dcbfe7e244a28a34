#pragma once

#include <string>

#include "json.hpp"
#include "segagent/backends.hpp"

namespace segagent {

/// Splits "http://host:port/prefix" into the scheme+authority part and the
/// path prefix (no trailing slash). Throws Config on malformed URLs.
struct Endpoint {
  std::string origin;
  std::string path_prefix;
};
Endpoint parse_endpoint(const std::string& url);

// Wire formats, exposed for conformance tests.
nlohmann::json build_chat_request(const BackendConfig& cfg, const MllmRequest& req);
/// Text of the first choice's message; Transport on malformed replies.
std::string parse_chat_response(const std::string& body);
nlohmann::json build_segment_request(const Image& img, const BBox& box);
/// Decodes "mask_png_b64" per mask_decode rules.
BinaryMask parse_segment_response(const std::string& body);

/// OpenAI-style chat-completions client: POST {endpoint}/v1/chat/completions.
class HttpMllm : public MllmBackend {
 public:
  std::string complete(const BackendConfig& cfg, const MllmRequest& req) override;
};

/// POST {endpoint}/segment with {"image_png_b64", "box"}.
class HttpSegmenter : public Segmenter {
 public:
  BinaryMask segment(const BackendConfig& cfg, const Image& img, const BBox& box,
                     std::string_view sample_key) override;
};

}  // namespace segagent
