#pragma once

#include <string>
#include <vector>

#include "pllbeam/provider.hpp"

namespace pllbeam::wire {

std::string encode_request(const QueryRequest& request);
std::string encode_batch(std::span<const QueryRequest> requests);
std::vector<LogitRow> decode_logits(const std::string& body);
std::vector<std::vector<LogitRow>> decode_batch(const std::string& body);

struct Reply {
  int status = 200;
  std::string body;
};

/// Server half of the protocol over any provider: answers GET /info, POST /logits and
/// POST /logits_batch. Malformed JSON yields 400; alphabet or length violations 422.
Reply handle(MaskedLogitProvider& provider, const std::string& method, const std::string& path,
             const std::string& body);

}  // namespace pllbeam::wire
