#pragma once

#include "telewip/config.hpp"
#include "telewip/trial.hpp"

#include <atomic>
#include <memory>
#include <optional>
#include <string>

namespace telewip {

/// Port from TELEWIP_PORT when set and valid, otherwise `fallback`.
int port_from_env(int fallback);

/// WebSocket endpoint at `/session` serving one live operator at a time.
///
/// Network I/O runs on its own thread; the session loop runs on another and
/// owns the simulation. Frames cross between them through locked queues.
class SessionServer {
public:
    SessionServer(const AppConfig& config, const std::string& address, unsigned short port);
    ~SessionServer();
    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    /// Binds, then starts the I/O and loop threads. Port 0 picks a free port.
    void start();
    void stop();
    /// Blocks until `stop` is called from another thread or a signal arrives.
    void wait();

    unsigned short port() const;
    /// Seconds since `start` on the loop's monotonic clock.
    double clock() const;
    /// Session time reached by the physics loop.
    double session_time() const;
    std::optional<TrialRecord> last_record() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace telewip
