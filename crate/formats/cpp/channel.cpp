#include "channel.h"

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <thread>

using net::ip::tcp;

namespace {

const int kConnectAttempts = 100;
const auto kConnectDelay = std::chrono::milliseconds(100);
const std::uint32_t kMaxFrame = 1u << 20;

}  // namespace

Channel::Channel()
    : io_(std::make_unique<net::io_context>()),
      socket_(std::make_unique<tcp::socket>(*io_)) {}

Channel Channel::listen(unsigned short port) {
  Channel ch;
  tcp::acceptor acceptor(*ch.io_);
  tcp::endpoint endpoint(tcp::v4(), port);
  acceptor.open(endpoint.protocol());
  acceptor.set_option(tcp::acceptor::reuse_address(true));
  acceptor.bind(endpoint);
  acceptor.listen(1);
  acceptor.accept(*ch.socket_);
  return ch;
}

Channel Channel::connect(const std::string& host, unsigned short port) {
  Channel ch;
  tcp::resolver resolver(*ch.io_);
  for (int attempt = 0;; ++attempt) {
    try {
      auto endpoints = resolver.resolve(host, std::to_string(port));
      net::connect(*ch.socket_, endpoints);
      return ch;
    } catch (const std::exception&) {
      if (attempt + 1 >= kConnectAttempts) throw;
      ch.socket_ = std::make_unique<tcp::socket>(*ch.io_);
      std::this_thread::sleep_for(kConnectDelay);
    }
  }
}

void Channel::send(const std::vector<unsigned char>& frame) {
  const std::uint32_t n = static_cast<std::uint32_t>(frame.size());
  unsigned char header[4] = {
      static_cast<unsigned char>(n >> 24), static_cast<unsigned char>(n >> 16),
      static_cast<unsigned char>(n >> 8), static_cast<unsigned char>(n)};
  net::write(*socket_, net::buffer(header, 4));
  net::write(*socket_, net::buffer(frame));
}

std::vector<unsigned char> Channel::receive() {
  unsigned char header[4];
  net::read(*socket_, net::buffer(header, 4));
  const std::uint32_t n = (std::uint32_t(header[0]) << 24) | (std::uint32_t(header[1]) << 16) |
                          (std::uint32_t(header[2]) << 8) | std::uint32_t(header[3]);
  if (n > kMaxFrame) throw std::runtime_error("frame too large");
  std::vector<unsigned char> frame(n);
  if (n > 0) net::read(*socket_, net::buffer(frame));
  return frame;
}
