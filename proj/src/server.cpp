#include "telewip/server.hpp"

#include "telewip/session.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace telewip {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

int port_from_env(int fallback) {
    if (const char* env = std::getenv("TELEWIP_PORT")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0 && v <= 65535) return static_cast<int>(v);
        std::cerr << "ignoring invalid TELEWIP_PORT='" << env << "'\n";
    }
    return fallback;
}

namespace {

using Clock = std::chrono::steady_clock;

class Connection;

/// State shared between the I/O thread and the loop thread.
struct Hub {
    std::mutex mutex;
    std::shared_ptr<Connection> active;
    std::uint64_t generation = 0;  // bumps on every new active connection
    struct Frame {
        std::uint64_t generation;
        std::string text;
        double arrival;
    };
    std::vector<Frame> inbound;
    Clock::time_point epoch;

    double now() const { return std::chrono::duration<double>(Clock::now() - epoch).count(); }
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

    void start() {
        net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->read_request(); });
    }

    /// Thread-safe: queue a text frame for sending.
    void send(std::string text) {
        net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
            self->queue_.push_back(std::move(text));
            if (self->queue_.size() == 1 && !self->writing_) self->write_next();
        });
    }

    /// Thread-safe: flush pending frames, then close.
    void close_after_flush() {
        net::post(ws_.get_executor(), [self = shared_from_this()] {
            self->closing_ = true;
            if (self->queue_.empty() && !self->writing_) self->do_close();
        });
    }

    std::uint64_t generation = 0;

private:
    void read_request() {
        http::async_read(ws_.next_layer(), buffer_, request_,
                         [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
    }

    void on_request(beast::error_code ec) {
        if (ec) return;
        if (!websocket::is_upgrade(request_) || request_.target() != "/session") {
            auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, request_.version());
            res->set(http::field::content_type, "text/plain");
            res->body() = "telewip: WebSocket endpoint is /session\n";
            res->prepare_payload();
            http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
                beast::error_code ignored;
                self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ignored);
            });
            return;
        }
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec2) { self->on_accept(ec2); });
    }

    void on_accept(beast::error_code ec) {
        if (ec) return;
        ws_.text(true);
        beast::error_code ignored;
        ws_.next_layer().socket().set_option(tcp::no_delay(true), ignored);
        bool busy = false;
        {
            std::lock_guard lock(hub_.mutex);
            if (hub_.active) {
                busy = true;
            } else {
                hub_.active = shared_from_this();
                generation = ++hub_.generation;
            }
        }
        if (busy) {
            send(R"({"v":1,"type":"error","code":"busy","message":"another operator is connected"})");
            close_after_flush();
            return;
        }
        read_frame();
    }

    void read_frame() {
        ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            detach();
            return;
        }
        {
            std::lock_guard lock(hub_.mutex);
            hub_.inbound.push_back({generation, beast::buffers_to_string(in_.data()), hub_.now()});
        }
        in_.consume(in_.size());
        read_frame();
    }

    void write_next() {
        writing_ = true;
        ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            self->queue_.pop_front();
            if (ec) {
                self->queue_.clear();
                self->detach();
                return;
            }
            if (!self->queue_.empty()) self->write_next();
            else if (self->closing_) self->do_close();
        });
    }

    void do_close() {
        ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) { self->detach(); });
    }

    void detach() {
        std::lock_guard lock(hub_.mutex);
        if (hub_.active.get() == this) hub_.active.reset();
    }

    websocket::stream<beast::tcp_stream> ws_;
    Hub& hub_;
    beast::flat_buffer buffer_;
    beast::flat_buffer in_;
    http::request<http::string_body> request_;
    std::deque<std::string> queue_;
    bool writing_ = false;
    bool closing_ = false;
};

}  // namespace

struct SessionServer::Impl {
    AppConfig config;
    std::string address;
    unsigned short requested_port;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    Hub hub;
    std::thread io_thread;
    std::thread loop_thread;
    std::atomic<bool> running{false};
    std::atomic<double> session_time{0.0};
    mutable std::mutex record_mutex;
    std::optional<TrialRecord> last_record;
    std::mutex wait_mutex;
    std::condition_variable wait_cv;

    void accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<Connection>(std::move(socket), hub)->start();
            accept();
        });
    }

    void loop() {
        auto core = std::make_unique<SessionCore>(config);
        std::uint64_t generation = 0;
        std::shared_ptr<Connection> conn;
        const double dt = 1.0 / config.session.physics_rate;
        std::vector<Hub::Frame> frames;
        while (running) {
            const double now = hub.now();
            std::shared_ptr<Connection> active;
            {
                std::lock_guard lock(hub.mutex);
                frames.swap(hub.inbound);
                active = hub.active;
            }
            if (active && active->generation != generation) {
                generation = active->generation;
                conn = active;
                // A refused client never had a session; start over for the next one.
                if (core->refused()) core = std::make_unique<SessionCore>(config);
                conn->send(core->hello());
            }
            if (!active) conn.reset();
            for (const Hub::Frame& f : frames) {
                if (f.generation == generation) core->receive(f.text, f.arrival);
            }
            frames.clear();
            core->advance_to(now);
            session_time = core->time();
            for (std::string& text : core->take_outbound(now)) {
                if (conn) conn->send(std::move(text));
            }
            if (core->refused() && conn) {
                for (std::string& text : core->take_outbound(1e300)) conn->send(std::move(text));
                conn->close_after_flush();
                conn.reset();
            }
            if (core->last_record()) {
                std::lock_guard lock(record_mutex);
                if (!last_record || last_record->end_time != core->last_record()->end_time ||
                    last_record->map_seed != core->last_record()->map_seed)
                    last_record = core->last_record();
            }
            const double next = std::min(core->time(), core->next_outbound_time());
            const double wake = std::max(next, now + 0.25 * dt);
            std::this_thread::sleep_until(hub.epoch + std::chrono::duration_cast<Clock::duration>(
                                                          std::chrono::duration<double>(wake)));
        }
    }
};

SessionServer::SessionServer(const AppConfig& config, const std::string& address, unsigned short port)
    : impl_(std::make_unique<Impl>()) {
    impl_->config = config;
    impl_->address = address;
    impl_->requested_port = port;
    config.session.validate();
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
    Impl& m = *impl_;
    if (m.running) return;
    const tcp::endpoint endpoint(net::ip::make_address(m.address), m.requested_port);
    m.acceptor.open(endpoint.protocol());
    m.acceptor.set_option(net::socket_base::reuse_address(true));
    m.acceptor.bind(endpoint);
    m.acceptor.listen();
    m.hub.epoch = Clock::now();
    m.running = true;
    m.accept();
    m.io_thread = std::thread([&m] { m.ioc.run(); });
    m.loop_thread = std::thread([&m] { m.loop(); });
}

void SessionServer::stop() {
    Impl& m = *impl_;
    if (!m.running.exchange(false)) return;
    if (m.loop_thread.joinable()) m.loop_thread.join();
    net::post(m.ioc, [&m] {
        beast::error_code ec;
        m.acceptor.close(ec);
    });
    m.ioc.stop();
    if (m.io_thread.joinable()) m.io_thread.join();
    m.wait_cv.notify_all();
}

void SessionServer::wait() {
    Impl& m = *impl_;
    net::signal_set signals(m.ioc, SIGINT, SIGTERM);
    signals.async_wait([this](beast::error_code, int) { std::thread([this] { stop(); }).detach(); });
    std::unique_lock lock(m.wait_mutex);
    m.wait_cv.wait(lock, [&m] { return !m.running; });
}

unsigned short SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

double SessionServer::clock() const { return impl_->hub.now(); }

double SessionServer::session_time() const { return impl_->session_time; }

std::optional<TrialRecord> SessionServer::last_record() const {
    std::lock_guard lock(impl_->record_mutex);
    return impl_->last_record;
}

}  // namespace telewip
