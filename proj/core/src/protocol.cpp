#include "mctd/protocol.hpp"

#include <cmath>

#include <json.hpp>

#include "mctd/error.hpp"

namespace mctd::protocol {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

std::string encode_request(const ExpertQuery& query) {
  ojson j;
  j["v"] = kVersion;
  j["op"] = "propose";
  j["sequence"] = query.sequence.str();
  j["mask"] = query.mask.indices();
  j["temperature"] = query.temperature;
  j["seed"] = query.seed;
  return j.dump();
}

std::string encode_info_request() {
  ojson j;
  j["v"] = kVersion;
  j["op"] = "info";
  return j.dump();
}

std::string encode_reply(const ExpertReply& reply) {
  ojson j;
  j["v"] = kVersion;
  j["ok"] = true;
  ojson dists = ojson::object();
  for (const auto& [pos, p] : reply.distributions.entries) dists[std::to_string(pos)] = p;
  j["dists"] = std::move(dists);
  ojson sample = ojson::object();
  for (const auto& [pos, c] : reply.sample) sample[std::to_string(pos)] = std::string(1, c);
  j["sample"] = std::move(sample);
  if (reply.confidence)
    j["confidence"] = reply.confidence->values();
  else
    j["confidence"] = nullptr;
  return j.dump();
}

std::string encode_info_reply(const ExpertInfo& info) {
  ojson j;
  j["v"] = kVersion;
  j["ok"] = true;
  j["expert_id"] = info.expert_id;
  j["alphabet"] = info.alphabet.symbols();
  j["max_length"] = info.max_length;
  return j.dump();
}

std::string encode_error(std::string_view code, std::string_view msg) {
  ojson j;
  j["v"] = kVersion;
  j["ok"] = false;
  j["error"] = {{"code", std::string(code)}, {"msg", std::string(msg)}};
  return j.dump();
}

namespace {

json parse_record(std::string_view line, const std::string& who) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolViolation(who, "record", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolViolation(who, "record", "not a JSON object");
  auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer() || v->get<int>() != kVersion)
    throw ProtocolViolation(who, "v", "expected protocol version 1");
  auto ok = j.find("ok");
  if (ok == j.end() || !ok->is_boolean()) throw ProtocolViolation(who, "ok", "missing boolean");
  if (!ok->get<bool>()) {
    std::string code = "unknown", msg;
    if (auto e = j.find("error"); e != j.end() && e->is_object()) {
      if (auto c = e->find("code"); c != e->end() && c->is_string()) code = c->get<std::string>();
      if (auto m = e->find("msg"); m != e->end() && m->is_string()) msg = m->get<std::string>();
    }
    throw ExpertFailure(who, "server error " + code + ": " + msg);
  }
  return j;
}

}  // namespace

ExpertReply decode_reply(std::string_view line, const ExpertQuery& query,
                         const Alphabet& alphabet, const std::string& expert_id) {
  const json j = parse_record(line, expert_id);
  ExpertReply reply;
  reply.distributions.expert_id = expert_id;

  auto dists = j.find("dists");
  if (dists == j.end() || !dists->is_object())
    throw ProtocolViolation(expert_id, "dists", "missing object");
  if (dists->size() != query.mask.size())
    throw ProtocolViolation(expert_id, "dists", "keys do not match the mask");
  for (std::size_t pos : query.mask) {
    const std::string key = std::to_string(pos);
    const std::string field = "dists." + key;
    auto it = dists->find(key);
    if (it == dists->end()) throw ProtocolViolation(expert_id, field, "missing");
    if (!it->is_array() || it->size() != alphabet.size())
      throw ProtocolViolation(expert_id, field,
                              "expected " + std::to_string(alphabet.size()) + " probabilities");
    ProbabilityVector p;
    p.reserve(alphabet.size());
    double sum = 0.0;
    for (const auto& x : *it) {
      if (!x.is_number()) throw ProtocolViolation(expert_id, field, "non-numeric entry");
      const double v = x.get<double>();
      if (!std::isfinite(v) || v < 0.0) throw ProtocolViolation(expert_id, field, "negative entry");
      p.push_back(v);
      sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTolerance)
      throw ProtocolViolation(expert_id, field, "probabilities sum to " + std::to_string(sum));
    reply.distributions.entries.emplace(pos, std::move(p));
  }

  auto sample = j.find("sample");
  if (sample == j.end() || !sample->is_object())
    throw ProtocolViolation(expert_id, "sample", "missing object");
  if (sample->size() != query.mask.size())
    throw ProtocolViolation(expert_id, "sample", "keys do not match the mask");
  for (std::size_t pos : query.mask) {
    const std::string key = std::to_string(pos);
    const std::string field = "sample." + key;
    auto it = sample->find(key);
    if (it == sample->end()) throw ProtocolViolation(expert_id, field, "missing");
    if (!it->is_string() || it->get_ref<const std::string&>().size() != 1)
      throw ProtocolViolation(expert_id, field, "expected a one-letter string");
    const char c = it->get_ref<const std::string&>()[0];
    const int a = alphabet.find(c);
    if (a == Alphabet::kNone) throw ProtocolViolation(expert_id, field, "symbol outside alphabet");
    if (!(reply.distributions.entries.at(pos)[static_cast<std::size_t>(a)] > 0.0))
      throw ProtocolViolation(expert_id, field, "sampled symbol has zero probability");
    reply.sample.emplace(pos, c);
  }

  if (auto conf = j.find("confidence"); conf != j.end() && !conf->is_null()) {
    if (!conf->is_array() || conf->size() != query.sequence.length())
      throw ProtocolViolation(expert_id, "confidence", "expected one value per residue");
    std::vector<double> values;
    for (const auto& x : *conf) {
      if (!x.is_number()) throw ProtocolViolation(expert_id, "confidence", "non-numeric entry");
      const double v = x.get<double>();
      if (!(v >= 0.0 && v <= 100.0))
        throw ProtocolViolation(expert_id, "confidence", "value outside [0, 100]");
      values.push_back(v);
    }
    reply.confidence = ConfidenceProfile(std::move(values));
  }
  return reply;
}

ExpertInfo decode_info_reply(std::string_view line, const std::string& endpoint) {
  const json j = parse_record(line, endpoint);
  auto id = j.find("expert_id");
  if (id == j.end() || !id->is_string() || id->get_ref<const std::string&>().empty())
    throw ProtocolViolation(endpoint, "expert_id", "missing string");
  auto alpha = j.find("alphabet");
  if (alpha == j.end() || !alpha->is_string())
    throw ProtocolViolation(endpoint, "alphabet", "missing string");
  auto max_len = j.find("max_length");
  if (max_len == j.end() || !max_len->is_number_unsigned())
    throw ProtocolViolation(endpoint, "max_length", "missing non-negative integer");
  try {
    return {id->get<std::string>(), Alphabet(alpha->get<std::string>()),
            max_len->get<std::size_t>()};
  } catch (const ContractViolation& e) {
    throw ProtocolViolation(endpoint, "alphabet", e.what());
  }
}

std::string handle_request(const Expert& expert, std::size_t max_length, std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    return encode_error(codes::bad_json, e.what());
  }
  if (!j.is_object()) return encode_error(codes::bad_json, "record is not an object");
  if (auto v = j.find("v"); v != j.end() && (!v->is_number_integer() || v->get<int>() != kVersion))
    return encode_error(codes::bad_version, "unsupported protocol version");
  auto op = j.find("op");
  if (op == j.end() || !op->is_string()) return encode_error(codes::bad_request, "missing op");
  if (*op == "info")
    return encode_info_reply({expert.id(), expert.alphabet(), max_length});
  if (*op != "propose")
    return encode_error(codes::unknown_op, "unknown op '" + op->get<std::string>() + "'");

  auto seq = j.find("sequence");
  if (seq == j.end() || !seq->is_string())
    return encode_error(codes::bad_request, "missing sequence");
  ExpertQuery query;
  try {
    query.sequence = Sequence(seq->get<std::string>(), expert.alphabet());
  } catch (const ContractViolation& e) {
    return encode_error(codes::bad_sequence, e.what());
  }
  if (max_length && query.sequence.length() > max_length)
    return encode_error(codes::bad_sequence, "sequence longer than max_length");

  auto mask = j.find("mask");
  if (mask == j.end() || !mask->is_array()) return encode_error(codes::bad_mask, "missing mask");
  std::vector<std::size_t> indices;
  for (const auto& x : *mask) {
    if (!x.is_number_unsigned()) return encode_error(codes::bad_mask, "mask index not a non-negative integer");
    indices.push_back(x.get<std::size_t>());
  }
  try {
    query.mask = MaskSet(std::move(indices), query.sequence.length());
  } catch (const ContractViolation& e) {
    return encode_error(codes::bad_mask, e.what());
  }

  if (auto t = j.find("temperature"); t != j.end()) {
    if (!t->is_number() || !(t->get<double>() >= 0.0))
      return encode_error(codes::bad_request, "temperature must be a number >= 0");
    query.temperature = t->get<double>();
  }
  if (auto s = j.find("seed"); s != j.end()) {
    if (!s->is_number_unsigned()) return encode_error(codes::bad_request, "seed must be unsigned");
    query.seed = s->get<std::uint64_t>();
  }

  try {
    return encode_reply(expert.propose(query));
  } catch (const std::exception& e) {
    return encode_error(codes::backend_error, e.what());
  }
}

}  // namespace mctd::protocol
