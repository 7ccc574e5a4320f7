#pragma once

// Byte-stream transports for the protocol: TCP (one thread per connection) and stdio.

#include <atomic>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace rmfs {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7878;
};

/// "host:port" or ":port"; throws InputError otherwise.
Endpoint parse_endpoint(const std::string& text);
/// RMFS_ENDPOINT if set, else `fallback`.
std::string endpoint_from_env(const std::string& fallback = "127.0.0.1:7878");

int connect_tcp(const Endpoint& ep);
void write_all(int fd, const std::string& data);
/// Reads one '\n'-terminated line (newline stripped) using `buffer` for leftovers. Returns
/// false on EOF. Lines longer than `max_bytes` are truncated to that length and flagged.
bool read_line(int fd, std::string& buffer, std::string& line, std::size_t max_bytes,
               bool* truncated = nullptr);

/// Runs sessions over `in`/`out` until EOF or a bye frame.
void serve_stream(std::istream& in, std::ostream& out);

/// Per-connection line handler. Returns the reply line; setting `close` ends the connection
/// after the reply is written.
using LineHandler = std::function<std::string(std::string_view line, bool& close)>;

/// Listens on `ep` (port 0 picks a free port) and gives every connection its own thread and a
/// handler from `make_handler(connection_id)`, until `stop` becomes true.
void serve_lines_tcp(const Endpoint& ep, const std::atomic<bool>& stop,
                     const std::function<LineHandler(const std::string&)>& make_handler,
                     const std::function<void(std::uint16_t)>& on_listening = {});

/// Listens on `ep` (port 0 picks a free port) and serves every connection on its own thread
/// until `stop` becomes true. `on_listening` receives the bound port.
void serve_tcp(const Endpoint& ep, const std::atomic<bool>& stop,
               const std::function<void(std::uint16_t)>& on_listening = {});

}  // namespace rmfs
