#pragma once

// The model server as a real network service: newline-delimited JSON over
// TCP. Requests {id, frame_index, seed} are answered with {id, detections}
// or {id, error: {code, message}}. Worker threads drain one FIFO queue with
// the same batch policy as run_server_sim, and "infer" by computing the
// simulated cloud detections and holding the batch for batch_service_ms(n).

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "react/pipeline.hpp"
#include "react/server.hpp"
#include "react/trace.hpp"

namespace react {

using SteadyClock = std::chrono::steady_clock;

inline double ms_between(SteadyClock::time_point a, SteadyClock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

namespace detail {

inline void send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("send: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Buffered line reader over a socket. Returns false on EOF.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  bool next(std::string& line) {
    for (;;) {
      if (auto nl = buf_.find('\n', scan_); nl != std::string::npos) {
        line.assign(buf_, 0, nl);
        buf_.erase(0, nl + 1);
        scan_ = 0;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      scan_ = buf_.size();
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n == 0) return false;
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
  std::size_t scan_ = 0;
};

inline int connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    throw IoError("resolve " + host + ": " + ::gai_strerror(rc));
  int fd = -1;
  int err = 0;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    err = errno;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw IoError("connect " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

}  // namespace detail

struct DispatchLogEntry {
  int worker = 0;
  double dispatch_ms = 0.0;  // since service start
  double complete_ms = 0.0;
  std::vector<std::uint64_t> ids;
};

struct ServiceOptions {
  ServerConfig server;
  DetectorProfile cloud_profile = default_cloud_profile();
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
};

class ModelService {
 public:
  ModelService(Trace trace, ServiceOptions opts) : trace_(std::move(trace)), opts_(std::move(opts)) {
    if (auto err = validate(opts_.server); !err.empty()) throw ConfigError("server", err);
    if (auto err = validate(opts_.cloud_profile); !err.empty()) throw ConfigError("cloud_profile", err);
    spec_ = frame_spec(trace_.header);
  }
  ModelService(const ModelService&) = delete;
  ModelService& operator=(const ModelService&) = delete;
  ~ModelService() { stop(); }

  void start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(opts_.port);
    if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1) {
      ::close(listen_fd_);
      throw ConfigError("bind", "not an IPv4 address: " + opts_.host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 256) != 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      throw IoError("bind " + opts_.host + ":" + std::to_string(opts_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    epoch_ = SteadyClock::now();
    running_ = true;
    for (int w = 0; w < opts_.server.num_workers; ++w) workers_.emplace_back([this, w] { worker_loop(w); });
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    {
      std::lock_guard lock(mu_);
      for (auto& c : connections_) ::shutdown(c->fd, SHUT_RDWR);
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
    workers_.clear();
    std::vector<std::thread> handlers;
    {
      std::lock_guard lock(mu_);
      handlers.swap(handlers_);
    }
    for (auto& t : handlers) t.join();
    std::lock_guard lock(mu_);
    for (auto& c : connections_) ::close(c->fd);
    connections_.clear();
  }

  std::uint16_t port() const noexcept { return port_; }
  const ServiceOptions& options() const noexcept { return opts_; }

  std::vector<DispatchLogEntry> dispatch_log() const {
    std::lock_guard lock(mu_);
    return log_;
  }

  // Error response for a request that cannot be served, if any.
  std::optional<json> reject(const json& request) const {
    json id = request.contains("id") ? request["id"] : json(nullptr);
    if (!request.is_object() || !id.is_number_unsigned() || !request.contains("frame_index") ||
        !request["frame_index"].is_number_integer() || !request.contains("seed") ||
        !request["seed"].is_number_unsigned() || request.size() != 3)
      return error_response(id, "bad_request", "expected {id, frame_index, seed}");
    if (!find_frame(request["frame_index"].get<std::int64_t>()))
      return error_response(id, "frame_out_of_range", "no such frame in the trace");
    return std::nullopt;
  }

  // What a request returns, without the network or the wait.
  json answer(const json& request) const {
    if (auto err = reject(request)) return *err;
    const json& id = request["id"];
    const auto* frame = find_frame(request["frame_index"].get<std::int64_t>());
    json dets = json::array();
    for (const auto& d : cloud_detections(*frame, opts_.cloud_profile, request["seed"].get<std::uint64_t>(), spec_))
      dets.push_back(to_json(d));
    return {{"id", id}, {"detections", dets}};
  }

 private:
  struct Connection {
    int fd = -1;
    std::mutex write_mu;
  };
  struct Pending {
    std::uint64_t id = 0;
    json request;
    SteadyClock::time_point arrived;
    std::shared_ptr<Connection> conn;
  };

  static json error_response(const json& id, const char* code, const char* message) {
    return {{"id", id}, {"error", {{"code", code}, {"message", message}}}};
  }

  const FrameTruth* find_frame(std::int64_t index) const {
    auto it = std::lower_bound(trace_.frames.begin(), trace_.frames.end(), index,
                               [](const FrameTruth& f, std::int64_t i) { return f.frame_index < i; });
    return it != trace_.frames.end() && it->frame_index == index ? &*it : nullptr;
  }

  static void reply(Connection& c, const json& body) {
    std::lock_guard lock(c.write_mu);
    try {
      detail::send_all(c.fd, body.dump() + "\n");
    } catch (const IoError&) {
      // client went away; nothing to do
    }
  }

  void accept_loop() {
    while (running_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (errno == EINTR) continue;
        return;
      }
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      auto conn = std::make_shared<Connection>();
      conn->fd = fd;
      std::lock_guard lock(mu_);
      if (!running_) {
        ::close(fd);
        return;
      }
      connections_.push_back(conn);
      handlers_.emplace_back([this, conn] { handle(conn); });
    }
  }

  void handle(std::shared_ptr<Connection> conn) {
    detail::LineReader reader(conn->fd);
    std::string line;
    while (running_ && reader.next(line)) {
      if (line.empty()) continue;
      json req;
      try {
        req = json::parse(line);
      } catch (const json::parse_error&) {
        reply(*conn, error_response(nullptr, "bad_request", "not JSON"));
        continue;
      }
      if (auto err = reject(req)) {
        reply(*conn, *err);
        continue;
      }
      {
        std::lock_guard lock(mu_);
        queue_.push_back({req["id"].get<std::uint64_t>(), std::move(req), SteadyClock::now(), conn});
      }
      cv_.notify_all();
    }
  }

  void worker_loop(int worker) {
    const auto max_delay = std::chrono::duration_cast<SteadyClock::duration>(
        std::chrono::duration<double, std::milli>(opts_.server.max_delay_ms));
    const auto batch_size = static_cast<std::size_t>(opts_.server.batch_size);
    for (;;) {
      std::vector<Pending> batch;
      SteadyClock::time_point dispatched;
      {
        std::unique_lock lock(mu_);
        for (;;) {
          if (!running_) return;
          if (queue_.size() >= batch_size) break;
          if (!queue_.empty()) {
            const auto deadline = queue_.front().arrived + max_delay;
            if (SteadyClock::now() >= deadline) break;
            cv_.wait_until(lock, deadline);
          } else {
            cv_.wait(lock);
          }
        }
        dispatched = SteadyClock::now();
        const std::size_t n = std::min(queue_.size(), batch_size);
        for (std::size_t i = 0; i < n; ++i) {
          batch.push_back(std::move(queue_.front()));
          queue_.pop_front();
        }
      }

      std::vector<json> answers;
      answers.reserve(batch.size());
      for (const auto& p : batch) answers.push_back(answer(p.request));
      const auto service = std::chrono::duration_cast<SteadyClock::duration>(std::chrono::duration<double, std::milli>(
          opts_.server.batch_service_ms(static_cast<int>(batch.size()))));
      std::this_thread::sleep_until(dispatched + service);
      const auto completed = SteadyClock::now();

      DispatchLogEntry entry{worker, ms_between(epoch_, dispatched), ms_between(epoch_, completed), {}};
      for (const auto& p : batch) entry.ids.push_back(p.id);
      {
        std::lock_guard lock(mu_);
        log_.push_back(std::move(entry));
      }
      for (std::size_t i = 0; i < batch.size(); ++i) reply(*batch[i].conn, answers[i]);
    }
  }

  Trace trace_;
  ServiceOptions opts_;
  FrameSpec spec_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  SteadyClock::time_point epoch_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Pending> queue_;
  std::vector<DispatchLogEntry> log_;
  std::vector<std::shared_ptr<Connection>> connections_;
  std::vector<std::thread> handlers_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

// Blocking client for one connection.
class ServiceClient {
 public:
  ServiceClient(const std::string& host, std::uint16_t port) : fd_(detail::connect_tcp(host, port)), reader_(fd_) {}
  ServiceClient(const ServiceClient&) = delete;
  ServiceClient& operator=(const ServiceClient&) = delete;
  ~ServiceClient() { ::close(fd_); }

  void send(const json& request) { detail::send_all(fd_, request.dump() + "\n"); }
  void send_raw(const std::string& line) { detail::send_all(fd_, line + "\n"); }

  std::optional<json> receive() {
    std::string line;
    if (!reader_.next(line)) return std::nullopt;
    try {
      return json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("service response: ") + e.what());
    }
  }

  json request(std::uint64_t id, std::int64_t frame_index, std::uint64_t seed) {
    send({{"id", id}, {"frame_index", frame_index}, {"seed", seed}});
    auto r = receive();
    if (!r) throw IoError("service closed the connection");
    return *r;
  }

  // Stops reading: pending receive() calls return nullopt.
  void shutdown() { ::shutdown(fd_, SHUT_RDWR); }

 private:
  int fd_;
  detail::LineReader reader_;
};

inline std::vector<Detection> detections_from_response(const json& response) {
  if (response.contains("error"))
    throw Error("service error: " + response["error"].value("code", std::string("unknown")));
  std::vector<Detection> out;
  for (const auto& d : response.at("detections")) out.push_back(detection_from_json(d, "response: "));
  return out;
}

struct ReplayResult {
  std::vector<std::uint64_t> completion_order;  // ids in the order responses arrived
  std::vector<double> response_ms;              // per arrival, in schedule order
};

// Sends each arrival at its scheduled offset over a single connection and
// records the order responses come back in.
inline ReplayResult replay_schedule(const std::string& host, std::uint16_t port, std::span<const Arrival> arrivals,
                                    std::int64_t frame_index = 0, std::uint64_t seed = 1) {
  ServiceClient client(host, port);
  ReplayResult out;
  out.response_ms.assign(arrivals.size(), 0.0);
  std::vector<SteadyClock::time_point> sent(arrivals.size());
  std::map<std::uint64_t, std::size_t> index_of;
  for (std::size_t i = 0; i < arrivals.size(); ++i) index_of[arrivals[i].id] = i;

  std::thread reader([&] {
    for (std::size_t got = 0; got < arrivals.size(); ++got) {
      auto r = client.receive();
      if (!r) return;
      const auto now = SteadyClock::now();
      const auto id = r->at("id").get<std::uint64_t>();
      out.completion_order.push_back(id);
      const std::size_t i = index_of.at(id);
      out.response_ms[i] = ms_between(sent[i], now);
    }
  });
  const auto start = SteadyClock::now();
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    std::this_thread::sleep_until(start + std::chrono::duration_cast<SteadyClock::duration>(
                                              std::chrono::duration<double, std::milli>(arrivals[i].time_ms)));
    sent[i] = SteadyClock::now();
    client.send({{"id", arrivals[i].id}, {"frame_index", frame_index}, {"seed", seed}});
  }
  reader.join();
  return out;
}

struct LoadTestOptions {
  int n_clients = 1;
  double request_period_ms = 2000.0;
  double duration_ms = 10000.0;
  double ramp_per_s = 3.0;
  double grace_ms = 5000.0;  // wait for stragglers after the last send
  std::int64_t frame_index = 0;
};

// Open-loop load: client c connects at c / ramp_per_s seconds and then sends
// one request every request_period_ms until duration_ms, without waiting for
// answers. Response times are measured at the client.
inline ServerStats load_test(const std::string& host, std::uint16_t port, const LoadTestOptions& opt) {
  if (opt.n_clients < 1) throw ConfigError("n_clients", "must be >= 1");
  if (opt.request_period_ms <= 0) throw ConfigError("request_period_ms", "must be positive");
  { ServiceClient probe(host, port); }  // fail fast if nobody is listening

  struct ClientLog {
    std::vector<double> response_ms;
    std::size_t sent = 0;
    std::size_t answered = 0;
  };
  std::vector<ClientLog> logs(static_cast<std::size_t>(opt.n_clients));
  const auto start = SteadyClock::now();
  const auto to_dur = [](double ms) {
    return std::chrono::duration_cast<SteadyClock::duration>(std::chrono::duration<double, std::milli>(ms));
  };

  // Requests sent but not yet answered, across all clients.
  std::mutex outstanding_mu;
  std::size_t outstanding = 0, outstanding_peak = 0;
  auto track = [&](int d) {
    std::lock_guard lock(outstanding_mu);
    outstanding = static_cast<std::size_t>(static_cast<long long>(outstanding) + d);
    outstanding_peak = std::max(outstanding_peak, outstanding);
  };

  std::vector<std::thread> threads;
  std::mutex error_mu;
  std::optional<std::string> error;
  for (int c = 0; c < opt.n_clients; ++c) {
    threads.emplace_back([&, c] {
      try {
        ClientLog& log = logs[static_cast<std::size_t>(c)];
        const double t0 = c * 1000.0 / opt.ramp_per_s;
        if (t0 >= opt.duration_ms) return;
        std::this_thread::sleep_until(start + to_dur(t0));
        ServiceClient client(host, port);
        std::mutex mu;
        std::map<std::uint64_t, SteadyClock::time_point> in_flight;
        std::size_t expected = 0;
        for (double t = t0; t < opt.duration_ms; t += opt.request_period_ms) ++expected;

        std::thread reader([&] {
          for (std::size_t got = 0; got < expected; ++got) {
            auto r = client.receive();
            if (!r) return;
            const auto now = SteadyClock::now();
            std::lock_guard lock(mu);
            auto it = in_flight.find(r->at("id").get<std::uint64_t>());
            if (it == in_flight.end() || r->contains("error")) continue;
            log.response_ms.push_back(ms_between(it->second, now));
            ++log.answered;
            in_flight.erase(it);
            track(-1);
          }
        });
        std::uint64_t seq = 0;
        for (double t = t0; t < opt.duration_ms; t += opt.request_period_ms) {
          std::this_thread::sleep_until(start + to_dur(t));
          const std::uint64_t id = (static_cast<std::uint64_t>(c) << 32) | seq++;
          {
            std::lock_guard lock(mu);
            in_flight[id] = SteadyClock::now();
          }
          track(+1);
          client.send({{"id", id}, {"frame_index", opt.frame_index}, {"seed", 1}});
          ++log.sent;
        }
        // Give outstanding requests a bounded time to come back.
        const auto give_up = start + to_dur(opt.duration_ms + opt.grace_ms);
        for (;;) {
          {
            std::lock_guard lock(mu);
            if (in_flight.empty()) break;
          }
          if (SteadyClock::now() >= give_up) break;
          std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
        client.shutdown();
        reader.join();
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mu);
        if (!error) error = e.what();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) throw IoError("load_test: " + *error);

  std::vector<double> all;
  std::size_t sent = 0, answered = 0;
  for (const auto& l : logs) {
    all.insert(all.end(), l.response_ms.begin(), l.response_ms.end());
    sent += l.sent;
    answered += l.answered;
  }
  // queue_len_max here is the peak number of requests in flight.
  return summarize(all, sent - answered, outstanding_peak, opt.duration_ms);
}

}  // namespace react
