#include "rmfs/server.hpp"

#include "rmfs/core.hpp"
#include "rmfs/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <thread>
#include <vector>

namespace rmfs {

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw InputError("endpoint must be host:port, got '" + text + "'");
  Endpoint ep;
  if (colon > 0) ep.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) {
    throw InputError("bad port in endpoint '" + text + "'");
  }
  ep.port = static_cast<std::uint16_t>(p);
  return ep;
}

std::string endpoint_from_env(const std::string& fallback) {
  const char* v = std::getenv("RMFS_ENDPOINT");
  return v && *v ? std::string(v) : fallback;
}

int connect_tcp(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
    throw std::runtime_error("cannot resolve " + ep.host);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    freeaddrinfo(res);
    throw std::runtime_error("socket() failed");
  }
  if (::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
    const int err = errno;
    freeaddrinfo(res);
    ::close(fd);
    throw std::runtime_error("connect to " + ep.host + ":" + port + " failed: " + std::strerror(err));
  }
  freeaddrinfo(res);
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

bool read_line(int fd, std::string& buffer, std::string& line, std::size_t max_bytes,
               bool* truncated) {
  if (truncated) *truncated = false;
  bool dropping = false;
  while (true) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      if (!dropping) line.assign(buffer, 0, std::min(nl, max_bytes));
      if (nl > max_bytes && truncated) *truncated = true;
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    if (buffer.size() > max_bytes) {
      // Keep the head for the error reply and discard the rest of the oversized line.
      if (!dropping) line.assign(buffer, 0, max_bytes);
      dropping = true;
      if (truncated) *truncated = true;
      buffer.clear();
    }
    char chunk[65536];
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (buffer.empty() && !dropping) return false;
      if (!dropping) line = buffer;
      buffer.clear();
      return true;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

void serve_stream(std::istream& in, std::ostream& out) {
  Session session("stdio");
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (line.size() > kMaxFrameBytes) line.resize(kMaxFrameBytes);
    out << session.handle(line) << '\n';
    out.flush();
  }
}

namespace {

void serve_connection(int fd, LineHandler handler) {
  std::string buffer;
  std::string line;
  bool close = false;
  try {
    while (!close && read_line(fd, buffer, line, kMaxFrameBytes)) {
      write_all(fd, handler(line, close) + "\n");
    }
  } catch (const std::exception&) {
    // Peer went away; the handler state is torn down with the connection.
  }
  ::close(fd);
}

}  // namespace

void serve_lines_tcp(const Endpoint& ep, const std::atomic<bool>& stop,
                     const std::function<LineHandler(const std::string&)>& make_handler,
                     const std::function<void(std::uint16_t)>& on_listening) {
  const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (lfd < 0) throw std::runtime_error("socket() failed");
  int one = 1;
  setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
    ::close(lfd);
    throw InputError("listen host must be a dotted IPv4 address, got '" + ep.host + "'");
  }
  if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(lfd, 64) != 0) {
    const int err = errno;
    ::close(lfd);
    throw std::runtime_error("cannot listen on " + ep.host + ":" + std::to_string(ep.port) + ": " +
                             std::strerror(err));
  }
  socklen_t len = sizeof addr;
  getsockname(lfd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  std::vector<std::thread> workers;
  long next_id = 0;
  while (!stop.load()) {
    pollfd p{lfd, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int cfd = ::accept(lfd, nullptr, nullptr);
    if (cfd < 0) continue;
    setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    workers.emplace_back(serve_connection, cfd, make_handler("s" + std::to_string(next_id++)));
  }
  ::close(lfd);
  for (auto& t : workers) t.join();
}

void serve_tcp(const Endpoint& ep, const std::atomic<bool>& stop,
               const std::function<void(std::uint16_t)>& on_listening) {
  serve_lines_tcp(
      ep, stop,
      [](const std::string& id) -> LineHandler {
        auto session = std::make_shared<Session>(id);
        return [session](std::string_view line, bool& close) {
          std::string reply = session->handle(line);
          close = session->closed();
          return reply;
        };
      },
      on_listening);
}

}  // namespace rmfs
