#include "telewip/server.hpp"
#include "telewip/wire.hpp"

#include "doctest.h"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

using namespace telewip;
using nlohmann::json;

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

struct Client {
    net::io_context ioc;
    websocket::stream<tcp::socket> ws{ioc};

    explicit Client(unsigned short port, const std::string& path = "/session") {
        tcp::resolver resolver(ioc);
        net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws.next_layer().set_option(tcp::no_delay(true));
        ws.handshake("127.0.0.1", path);
        ws.text(true);
    }

    void send(const json& j) { ws.write(net::buffer(j.dump())); }

    json read() {
        beast::flat_buffer buf;
        ws.read(buf);
        return json::parse(beast::buffers_to_string(buf.data()));
    }

    /// Next message of `type`, skipping others.
    json read_type(const std::string& type) {
        for (int i = 0; i < 100000; ++i) {
            json j = read();
            if (j["type"] == type) return j;
        }
        throw std::runtime_error("no " + type);
    }
};

AppConfig test_config() {
    AppConfig c;
    c.session.latency_seed = 3;
    return c;
}

}  // namespace

TEST_CASE("port from environment") {
    ::unsetenv("TELEWIP_PORT");
    CHECK(port_from_env(8765) == 8765);
    ::setenv("TELEWIP_PORT", "9100", 1);
    CHECK(port_from_env(8765) == 9100);
    ::setenv("TELEWIP_PORT", "nope", 1);
    CHECK(port_from_env(8765) == 8765);
    ::unsetenv("TELEWIP_PORT");
}

TEST_CASE("live websocket session") {
    SessionServer server(test_config(), "127.0.0.1", 0);
    server.start();
    const unsigned short port = server.port();
    REQUIRE(port != 0);

    SUBCASE("other paths are not found") {
        net::io_context ioc;
        tcp::socket sock(ioc);
        tcp::resolver resolver(ioc);
        net::connect(sock, resolver.resolve("127.0.0.1", std::to_string(port)));
        http::request<http::empty_body> req(http::verb::get, "/", 11);
        req.set(http::field::host, "127.0.0.1");
        http::write(sock, req);
        beast::flat_buffer buf;
        http::response<http::string_body> res;
        http::read(sock, buf, res);
        CHECK(res.result() == http::status::not_found);
        CHECK_THROWS(Client(port, "/other"));
    }

    SUBCASE("handshake, probes and a trial") {
        Client c(port);
        const json hello = c.read();
        CHECK(hello["type"] == "hello");
        CHECK(hello["protocol"] == kProtocolVersion);

        SUBCASE("second client is turned away") {
            Client other(port);
            const json j = other.read();
            CHECK(j["type"] == "error");
            CHECK(j["code"] == "busy");
        }

        // Round trip = upstream + downstream latency + loop and socket overhead.
        std::vector<double> upstream, rtt;
        for (std::uint64_t i = 0; i < 40; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            c.send(to_json(Probe{i, 0.01 * static_cast<double>(i)}));
            const json echo = c.read_type("probe_echo");
            rtt.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            CHECK(echo["id"] == i);
            upstream.push_back(echo["upstream"].get<double>());
        }
        for (double u : upstream) {
            CHECK(u >= 0.005);
            CHECK(u <= 0.010 + 0.002);
        }
        double mean_rtt = 0.0;
        for (double r : rtt) mean_rtt += r;
        mean_rtt /= static_cast<double>(rtt.size());
        MESSAGE("mean probe round trip " << mean_rtt * 1e3 << " ms");
        CHECK(mean_rtt >= 0.010);
        CHECK(mean_rtt <= 0.020 + 0.010);

        c.send(to_json(Calibrate{0.0, 0.0}));
        c.send(to_json(StartTrial{}));
        double t = 0.0;
        for (int i = 0; i < 50; ++i) {
            t += 0.01;
            c.send(to_json(OperatorInput{t, 0.03, 0.0}));
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        const json ff = c.read_type("force_feedback");
        CHECK(ff["f_x"].is_number());
        json update = c.read_type("state_update");
        for (int i = 0; i < 200 && !(update["v_d"].get<double>() > 0.0); ++i) update = c.read_type("state_update");
        CHECK(update["status"]["phase"] == "running");
        CHECK(update["v_d"].get<double>() > 0.0);

        // The loop keeps up with the wall clock.
        const double lag = server.clock() - server.session_time();
        CHECK(lag < 0.002);

        c.send(to_json(AbortTrial{}));
        const json result = c.read_type("trial_result");
        CHECK(result["summary"]["outcome"] == "aborted");
        c.ws.close(websocket::close_code::normal);
        for (int i = 0; i < 100 && !server.last_record(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
        REQUIRE(server.last_record());
        CHECK(server.last_record()->operator_source == "live");
    }

    SUBCASE("version mismatch closes the connection") {
        Client c(port);
        c.read();
        c.send(json{{"v", 99}, {"type", "start_trial"}});
        const json err = c.read_type("error");
        CHECK(err["code"] == "protocol_version");
        beast::flat_buffer buf;
        beast::error_code ec;
        c.ws.read(buf, ec);
        CHECK(ec == websocket::error::closed);

        // A new client gets a fresh session.
        Client again(port);
        bool greeted = false;
        for (int i = 0; i < 5 && !greeted; ++i) greeted = again.read()["type"] == "hello";
        CHECK(greeted);
    }

    server.stop();
}
