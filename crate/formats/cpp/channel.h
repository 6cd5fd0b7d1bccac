// Length-prefixed framing over a TCP connection.
//
// Each frame is a 4-byte big-endian length followed by that many bytes.
// Builds against standalone Asio when available, otherwise Boost.Asio.

#pragma once

#include <memory>
#include <string>
#include <vector>

#if __has_include(<asio.hpp>)
#include <asio.hpp>
namespace net = asio;
#else
#include <boost/asio.hpp>
namespace net = boost::asio;
#endif

class Channel {
 public:
  // Accepts a single connection on the given port.
  static Channel listen(unsigned short port);
  // Connects to host:port, retrying for a few seconds while the peer starts.
  static Channel connect(const std::string& host, unsigned short port);

  Channel(Channel&&) = default;
  Channel& operator=(Channel&&) = default;

  void send(const std::vector<unsigned char>& frame);
  std::vector<unsigned char> receive();

 private:
  Channel();

  std::unique_ptr<net::io_context> io_;
  std::unique_ptr<net::ip::tcp::socket> socket_;
};
