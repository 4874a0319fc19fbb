#include "nebo/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

namespace nebo::net {
namespace {

sockaddr_in resolve(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (host.empty() || host == "0.0.0.0") {
    addr.sin_addr.s_addr = INADDR_ANY;
    return addr;
  }
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  hostent* he = gethostbyname(host.c_str());
  if (!he || he->h_addrtype != AF_INET)
    throw std::runtime_error("cannot resolve host: " + host);
  std::memcpy(&addr.sin_addr, he->h_addr_list[0], sizeof(addr.sin_addr));
  return addr;
}

}  // namespace

int listen_on(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(host, port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw std::runtime_error("bind() failed on port " + std::to_string(port));
  }
  if (::listen(fd, 16) != 0) {
    ::close(fd);
    throw std::runtime_error("listen() failed");
  }
  return fd;
}

int connect_to(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  sockaddr_in addr = resolve(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port));
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

int accept_client(int listen_fd) {
  return ::accept(listen_fd, nullptr, nullptr);
}

void close_fd(int fd) {
  if (fd >= 0) ::close(fd);
}

std::vector<int> poll_readable(const std::vector<int>& fds, int timeout_ms) {
  std::vector<pollfd> pfds;
  pfds.reserve(fds.size());
  for (const int fd : fds) pfds.push_back({fd, POLLIN, 0});
  std::vector<int> ready;
  const int rc = ::poll(pfds.data(), pfds.size(), timeout_ms);
  if (rc <= 0) return ready;
  for (const auto& p : pfds)
    if (p.revents & (POLLIN | POLLHUP | POLLERR)) ready.push_back(p.fd);
  return ready;
}

bool send_line(int fd, const std::string& line) {
  std::string buf = line;
  buf.push_back('\n');
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = ::send(fd, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

bool LineReader::fill(int fd) {
  char tmp[4096];
  const ssize_t n = ::recv(fd, tmp, sizeof(tmp), 0);
  if (n <= 0) return false;
  buf_.append(tmp, static_cast<std::size_t>(n));
  return true;
}

std::optional<std::string> LineReader::next_line() {
  const auto pos = buf_.find('\n');
  if (pos == std::string::npos) return std::nullopt;
  std::string line = buf_.substr(0, pos);
  buf_.erase(0, pos + 1);
  return line;
}

}  // namespace nebo::net
