#pragma once

// Expert wire protocol, version 1. Line-delimited UTF-8 JSON records.
//
//   request  {"v":1,"op":"propose","sequence":"ACDE","mask":[1,3],"temperature":1.0,"seed":12345}
//   reply    {"v":1,"ok":true,"dists":{"1":[...],"3":[...]},"sample":{"1":"W","3":"H"},"confidence":null}
//   error    {"v":1,"ok":false,"error":{"code":"bad_mask","msg":"..."}}
//   info     {"v":1,"op":"info"} -> {"v":1,"ok":true,"expert_id":"pssm","alphabet":"AC...","max_length":120}
//
// Probabilities are listed in alphabet order. `temperature` 0 selects the
// argmax limit. Samples are drawn with mctd::sample_positions so that any
// implementation reproduces them exactly from the seed.

#include <cstddef>
#include <string>
#include <string_view>

#include "mctd/experts.hpp"

namespace mctd::protocol {

inline constexpr int kVersion = 1;

namespace codes {
inline constexpr std::string_view bad_json = "bad_json";
inline constexpr std::string_view bad_version = "bad_version";
inline constexpr std::string_view unknown_op = "unknown_op";
inline constexpr std::string_view bad_request = "bad_request";
inline constexpr std::string_view bad_sequence = "bad_sequence";
inline constexpr std::string_view bad_mask = "bad_mask";
inline constexpr std::string_view backend_error = "backend_error";
}  // namespace codes

struct ExpertInfo {
  std::string expert_id;
  Alphabet alphabet;
  std::size_t max_length = 0;
};

std::string encode_request(const ExpertQuery& query);
std::string encode_info_request();
std::string encode_reply(const ExpertReply& reply);
std::string encode_info_reply(const ExpertInfo& info);
std::string encode_error(std::string_view code, std::string_view msg);

/// Parses and validates a propose reply against the query it answers.
/// Throws ProtocolViolation naming the offending field; an `"ok":false`
/// reply becomes ExpertFailure carrying the server's code and message.
ExpertReply decode_reply(std::string_view line, const ExpertQuery& query,
                         const Alphabet& alphabet, const std::string& expert_id);

ExpertInfo decode_info_reply(std::string_view line, const std::string& endpoint);

/// Server side: answers one request line with `expert`. Never throws; every
/// failure becomes an error record.
std::string handle_request(const Expert& expert, std::size_t max_length, std::string_view line);

}  // namespace mctd::protocol
