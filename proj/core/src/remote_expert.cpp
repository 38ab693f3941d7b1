#include "mctd/remote_expert.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <httplib.h>

namespace mctd {

namespace {

constexpr int kReadTimeoutMs = 30000;

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

StdioTransport::StdioTransport(std::string command) : command_(std::move(command)) {}

StdioTransport::~StdioTransport() { shutdown(); }

void StdioTransport::spawn() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
    throw TransportError(errno_text("socketpair"));
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw TransportError(errno_text("fork"));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  pid_ = pid;
  to_child_ = fds[0];
  from_child_ = fds[0];
  buffer_.clear();
}

void StdioTransport::shutdown() noexcept {
  if (to_child_ >= 0) ::close(to_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin lets a well-behaved server exit on EOF.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      ::usleep(2000);
    }
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }
  pid_ = -1;
  buffer_.clear();
}

std::string StdioTransport::round_trip(const std::string& line) {
  std::lock_guard lock(mu_);
  try {
    if (pid_ < 0) spawn();
    std::string out = line;
    out.push_back('\n');
    std::size_t sent = 0;
    while (sent < out.size()) {
      const ssize_t n = ::send(to_child_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("write to expert process"));
      }
      sent += static_cast<std::size_t>(n);
    }
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string reply = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!reply.empty() && reply.back() == '\r') reply.pop_back();
        return reply;
      }
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, kReadTimeoutMs);
      if (ready == 0) throw TransportError("timed out waiting for expert process");
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("poll"));
      }
      char chunk[4096];
      const ssize_t n = ::recv(from_child_, chunk, sizeof chunk, 0);
      if (n == 0) throw TransportError("expert process closed its output");
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("read from expert process"));
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  } catch (const TransportError&) {
    shutdown();
    throw;
  }
}

HttpTransport::HttpTransport(const std::string& url, std::ptrdiff_t max_in_flight,
                             double timeout_s)
    : url_(url), timeout_s_(timeout_s), in_flight_(max_in_flight) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0) throw TransportError("unsupported URL '" + url + "'");
  const std::string rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  const std::string authority = rest.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  host_ = authority.substr(0, colon);
  if (colon != std::string::npos) {
    try {
      port_ = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw TransportError("bad port in URL '" + url + "'");
    }
  }
  if (host_.empty()) throw TransportError("missing host in URL '" + url + "'");
}

HttpTransport::~HttpTransport() = default;

std::string HttpTransport::round_trip(const std::string& line) {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client client(host_, port_);
  const auto secs = static_cast<time_t>(timeout_s_);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  auto res = client.Post(path_, line, "application/json");
  if (!res) throw TransportError("POST " + url_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw TransportError("POST " + url_ + " returned HTTP " + std::to_string(res->status));
  std::string body = res->body;
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
  return body;
}

std::unique_ptr<Transport> make_transport(const std::string& endpoint) {
  if (endpoint.rfind("stdio:", 0) == 0) return std::make_unique<StdioTransport>(endpoint.substr(6));
  if (endpoint.rfind("http://", 0) == 0) return std::make_unique<HttpTransport>(endpoint);
  throw TransportError("unrecognized expert endpoint '" + endpoint +
                       "' (expected stdio:<command> or http://host:port/path)");
}

// ---------------------------------------------------------------------------

RemoteExpert::RemoteExpert(std::unique_ptr<Transport> transport, std::size_t retries)
    : transport_(std::move(transport)), retries_(retries) {
  const std::string who = transport_->describe();
  info_ = protocol::decode_info_reply(exchange(protocol::encode_info_request(), who), who);
}

std::string RemoteExpert::exchange(const std::string& line, const std::string& who) const {
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= retries_; ++attempt) {
    try {
      return transport_->round_trip(line);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw ExpertFailure(who, "transport failed after " + std::to_string(retries_ + 1) +
                               " attempt(s): " + last_error);
}

ExpertReply RemoteExpert::propose(const ExpertQuery& query) const {
  if (info_.max_length && query.sequence.length() > info_.max_length)
    throw ExpertFailure(id(), "sequence longer than the server's max_length");
  return protocol::decode_reply(exchange(protocol::encode_request(query), id()), query,
                                alphabet(), id());
}

PositionDistributionSet RemoteExpert::distributions(const Sequence& sequence,
                                                    const MaskSet& mask) const {
  return propose({sequence, mask, 1.0, 0}).distributions;
}

std::shared_ptr<Expert> remote_expert(const std::string& endpoint, std::size_t retries) {
  return std::make_shared<RemoteExpert>(make_transport(endpoint), retries);
}

}  // namespace mctd
