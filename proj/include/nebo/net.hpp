#pragma once

#include <optional>
#include <string>
#include <vector>

namespace nebo::net {

// Minimal blocking TCP plumbing for the newline-delimited protocol.

int listen_on(const std::string& host, int port);  // returns listening fd
int connect_to(const std::string& host, int port);
int accept_client(int listen_fd);  // non-blocking-ish accept; -1 when none
void close_fd(int fd);

// fds readable within timeout_ms (empty on timeout).
std::vector<int> poll_readable(const std::vector<int>& fds, int timeout_ms);

// Appends a newline and writes the whole buffer; returns false on error.
bool send_line(int fd, const std::string& line);

// Per-connection receive buffer that splits the byte stream into lines.
class LineReader {
 public:
  // Reads whatever is available; returns false on EOF or error.
  bool fill(int fd);
  std::optional<std::string> next_line();

 private:
  std::string buf_;
};

}  // namespace nebo::net
