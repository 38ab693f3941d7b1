#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>

#include "mctd/error.hpp"
#include "mctd/experts.hpp"
#include "mctd/protocol.hpp"

namespace mctd {

/// Moves one request line to a server and returns its reply line. Throws
/// TransportError on any I/O failure.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string round_trip(const std::string& line) = 0;
  virtual std::string describe() const = 0;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

/// Spawns `/bin/sh -c command` and exchanges one line per call over its
/// stdin/stdout. Strictly sequential; the child is respawned after a failure.
class StdioTransport final : public Transport {
 public:
  explicit StdioTransport(std::string command);
  ~StdioTransport() override;
  StdioTransport(const StdioTransport&) = delete;
  StdioTransport& operator=(const StdioTransport&) = delete;

  std::string round_trip(const std::string& line) override;
  std::string describe() const override { return "stdio:" + command_; }

 private:
  void spawn();
  void shutdown() noexcept;

  std::string command_;
  std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// One HTTP POST per record to `http://host:port/path`.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const std::string& url, std::ptrdiff_t max_in_flight = 4,
                         double timeout_s = 30.0);
  ~HttpTransport() override;

  std::string round_trip(const std::string& line) override;
  std::string describe() const override { return url_; }

 private:
  std::string url_;
  std::string host_;
  int port_ = 80;
  std::string path_;
  double timeout_s_;
  std::counting_semaphore<> in_flight_;
};

/// `stdio:<command>` or `http://host:port/path`.
std::unique_ptr<Transport> make_transport(const std::string& endpoint);

/// Expert served by a remote process speaking the wire protocol.
class RemoteExpert final : public Expert {
 public:
  /// Sends `info` immediately to learn the expert id and alphabet.
  RemoteExpert(std::unique_ptr<Transport> transport, std::size_t retries = 2);

  const std::string& id() const noexcept override { return info_.expert_id; }
  const Alphabet& alphabet() const noexcept override { return info_.alphabet; }
  std::size_t max_length() const noexcept { return info_.max_length; }

  ExpertReply propose(const ExpertQuery& query) const override;
  PositionDistributionSet distributions(const Sequence& sequence,
                                        const MaskSet& mask) const override;

 private:
  std::string exchange(const std::string& line, const std::string& who) const;

  std::unique_ptr<Transport> transport_;
  std::size_t retries_;
  protocol::ExpertInfo info_;
};

std::shared_ptr<Expert> remote_expert(const std::string& endpoint, std::size_t retries = 2);

}  // namespace mctd
