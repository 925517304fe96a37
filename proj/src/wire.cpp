#include "pllbeam/wire.hpp"

#include <json.hpp>

#include "pllbeam/error.hpp"

namespace pllbeam::wire {

using nlohmann::json;

namespace {

json request_json(const QueryRequest& r) {
  json j;
  j["sequence"] = r.sequence.str();
  j["masked_positions"] = r.masked;
  j["positions"] = r.report;
  return j;
}

std::vector<LogitRow> rows_from(const json& logits) {
  if (!logits.is_array()) throw Error(ErrorCode::ProviderUnavailable, "'logits' is not an array");
  std::vector<LogitRow> rows;
  rows.reserve(logits.size());
  for (const auto& row : logits) {
    if (!row.is_array() || row.size() != kAlphabetSize) {
      throw Error(ErrorCode::ProviderUnavailable, "logit row without 20 entries");
    }
    LogitRow out{};
    for (std::size_t r = 0; r < kAlphabetSize; ++r) {
      if (!row[r].is_number()) throw Error(ErrorCode::ProviderUnavailable, "non-numeric logit");
      out[r] = row[r].get<double>();
    }
    rows.push_back(out);
  }
  return rows;
}

json parse_or_throw(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("malformed response: ") + e.what());
  }
}

struct BadRequest {
  int status;
  std::string message;
};

QueryRequest request_from(const json& j) {
  if (!j.is_object() || !j.contains("sequence") || !j["sequence"].is_string() ||
      !j.contains("masked_positions") || !j["masked_positions"].is_array()) {
    throw BadRequest{400, "expected {\"sequence\": str, \"masked_positions\": [int]}"};
  }
  QueryRequest r;
  try {
    r.sequence = ProteinSequence(j["sequence"].get<std::string>());
  } catch (const Error& e) {
    throw BadRequest{422, e.what()};
  }
  for (const auto& p : j["masked_positions"]) {
    if (!p.is_number_integer() || p.get<long long>() < 0) throw BadRequest{400, "positions must be non-negative integers"};
    r.masked.push_back(p.get<std::size_t>());
  }
  if (j.contains("positions")) {
    if (!j["positions"].is_array()) throw BadRequest{400, "'positions' must be an array"};
    for (const auto& p : j["positions"]) {
      if (!p.is_number_integer() || p.get<long long>() < 0) throw BadRequest{400, "positions must be non-negative integers"};
      r.report.push_back(p.get<std::size_t>());
    }
  } else if (!r.masked.empty()) {
    r.report = r.masked;
  } else {
    for (Position i = 0; i < r.sequence.size(); ++i) r.report.push_back(i);
  }
  return r;
}

json answer(MaskedLogitProvider& provider, const QueryRequest& r) {
  try {
    auto rows = provider.query(r.sequence, r.masked, r.report);
    json logits = json::array();
    for (const auto& row : rows) logits.push_back(row);
    return json{{"logits", std::move(logits)}};
  } catch (const Error& e) {
    const bool shape = e.code() == ErrorCode::LengthMismatch || e.code() == ErrorCode::PositionOutOfRange ||
                       e.code() == ErrorCode::InvalidResidue || e.code() == ErrorCode::AlphabetMismatch;
    throw BadRequest{shape ? 422 : 500, e.what()};
  }
}

Reply error_reply(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

}  // namespace

std::string encode_request(const QueryRequest& request) { return request_json(request).dump(); }

std::string encode_batch(std::span<const QueryRequest> requests) {
  json arr = json::array();
  for (const auto& r : requests) arr.push_back(request_json(r));
  return json{{"requests", std::move(arr)}}.dump();
}

std::vector<LogitRow> decode_logits(const std::string& body) {
  const json j = parse_or_throw(body);
  if (!j.is_object() || !j.contains("logits")) throw Error(ErrorCode::ProviderUnavailable, "response lacks 'logits'");
  return rows_from(j["logits"]);
}

std::vector<std::vector<LogitRow>> decode_batch(const std::string& body) {
  const json j = parse_or_throw(body);
  if (!j.is_object() || !j.contains("responses") || !j["responses"].is_array()) {
    throw Error(ErrorCode::ProviderUnavailable, "response lacks 'responses'");
  }
  std::vector<std::vector<LogitRow>> out;
  for (const auto& resp : j["responses"]) {
    if (!resp.is_object() || !resp.contains("logits")) throw Error(ErrorCode::ProviderUnavailable, "batch entry lacks 'logits'");
    out.push_back(rows_from(resp["logits"]));
  }
  return out;
}

Reply handle(MaskedLogitProvider& provider, const std::string& method, const std::string& path,
             const std::string& body) {
  if (method == "GET" && path == "/info") {
    json info{{"name", provider.name()}, {"alphabet", provider.alphabet_order()}};
    if (auto cap = provider.max_length()) {
      info["max_length"] = *cap;
    } else {
      info["max_length"] = nullptr;
    }
    return {200, info.dump()};
  }
  if (method == "GET" && path == "/healthz") return {200, "{}"};
  if (method != "POST" || (path != "/logits" && path != "/logits_batch")) {
    return error_reply(404, "no route " + method + " " + path);
  }
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  }
  try {
    if (path == "/logits") return {200, answer(provider, request_from(j)).dump()};
    if (!j.is_object() || !j.contains("requests") || !j["requests"].is_array()) {
      return error_reply(400, "expected {\"requests\": [...]}");
    }
    json responses = json::array();
    for (const auto& r : j["requests"]) responses.push_back(answer(provider, request_from(r)));
    return {200, json{{"responses", std::move(responses)}}.dump()};
  } catch (const BadRequest& bad) {
    return error_reply(bad.status, bad.message);
  }
}

}  // namespace pllbeam::wire
