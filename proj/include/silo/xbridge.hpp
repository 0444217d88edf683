#pragma once

#include <memory>
#include <string>

#include "silo/predictor.hpp"

namespace silo::xbridge {

inline constexpr const char* kProtocolVersion = "1";

// Line-oriented byte stream over a file descriptor pair (a socket, or a
// stdin/stdout pipe). Owns and closes the descriptors.
class Stream {
public:
    Stream(int in_fd, int out_fd);
    ~Stream();
    Stream(Stream&& other) noexcept;
    Stream& operator=(Stream&&) = delete;
    Stream(const Stream&) = delete;

    // One newline-terminated record. timeout_s <= 0 waits forever.
    // Returns false on orderly end of stream.
    bool read_line(std::string* line, double timeout_s);
    void write_line(const std::string& line);
    void close();

private:
    int in_fd_;
    int out_fd_;
    std::string buffer_;
};

// Client connection for "tcp:host:port" or "unix:/path" addresses.
Stream connect(const std::string& address, double timeout_s);

// Blocking single-client listener for "tcp:port", "tcp:host:port" or
// "unix:/path"; returns the accepted connection.
Stream listen_once(const std::string& address);

// Serves one observer run over an accepted stream: answers the hello with
// the dimension/label declaration, then executes step requests until the
// peer closes. Protocol violations are answered with an error record.
void serve(observer::Predictor& predictor, Stream& stream);

// Remote predictor speaking the wire protocol. The constructor performs the
// hello/handshake exchange and adopts the declared dimensions and labels.
class RemotePredictor final : public observer::Predictor {
public:
    RemotePredictor(Stream stream, double timeout_s);
    const observer::PredictorInfo& info() const override { return info_; }
    Step step(const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
              const Eigen::VectorXd& dz_prev) override;

private:
    Stream stream_;
    double timeout_s_;
    observer::PredictorInfo info_;
    long next_index_ = 1;
};

std::unique_ptr<RemotePredictor> connect_predictor(const std::string& address,
                                                   double timeout_s);

}  // namespace silo::xbridge
