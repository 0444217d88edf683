#include "silo/xbridge.hpp"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "silo/errors.hpp"

namespace silo::xbridge {

using nlohmann::json;

namespace {

[[noreturn]] void fail_errno(const std::string& what) {
    throw ProtocolError(what + ": " + std::strerror(errno));
}

json parse_record(const std::string& line) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed protocol record: ") + e.what());
    }
}

Eigen::VectorXd get_vector(const json& j, const char* field, Eigen::Index expected) {
    if (!j.contains(field) || !j.at(field).is_array()) {
        throw ProtocolError(std::string("record is missing vector field '") + field + "'");
    }
    const auto& arr = j.at(field);
    if (static_cast<Eigen::Index>(arr.size()) != expected) {
        throw ProtocolError(std::string("field '") + field + "' has " +
                            std::to_string(arr.size()) + " entries, expected " +
                            std::to_string(expected));
    }
    Eigen::VectorXd v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
        const auto& cell = arr.at(static_cast<std::size_t>(i));
        if (!cell.is_number()) {
            throw ProtocolError(std::string("field '") + field +
                                "' carries a non-numeric entry");
        }
        v(i) = cell.get<double>();
    }
    return v;
}

json put_vector(const Eigen::VectorXd& v, const char* field) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i))) {
            throw ProtocolError(std::string("refusing to send non-finite value in '") +
                                field + "'");
        }
        arr.push_back(v(i));
    }
    return arr;
}

std::vector<std::string> get_labels(const json& j, const char* field) {
    if (!j.contains(field) || !j.at(field).is_array()) {
        throw ProtocolError(std::string("handshake is missing label list '") + field + "'");
    }
    std::vector<std::string> out;
    for (const auto& v : j.at(field)) out.push_back(v.get<std::string>());
    return out;
}

[[noreturn]] void raise_remote_error(const json& j) {
    throw ProtocolError("remote error: " + j.value("message", std::string("unspecified")));
}

}  // namespace

Stream::Stream(int in_fd, int out_fd) : in_fd_(in_fd), out_fd_(out_fd) {}

Stream::~Stream() { close(); }

Stream::Stream(Stream&& other) noexcept
    : in_fd_(other.in_fd_), out_fd_(other.out_fd_), buffer_(std::move(other.buffer_)) {
    other.in_fd_ = -1;
    other.out_fd_ = -1;
}

void Stream::close() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0 && out_fd_ != in_fd_) ::close(out_fd_);
    in_fd_ = -1;
    out_fd_ = -1;
}

bool Stream::read_line(std::string* line, double timeout_s) {
    while (true) {
        const std::size_t pos = buffer_.find('\n');
        if (pos != std::string::npos) {
            line->assign(buffer_, 0, pos);
            buffer_.erase(0, pos + 1);
            return true;
        }
        if (in_fd_ < 0) return false;
        if (timeout_s > 0.0) {
            pollfd p{in_fd_, POLLIN, 0};
            const int rc = ::poll(&p, 1, static_cast<int>(timeout_s * 1000.0));
            if (rc < 0) fail_errno("poll failed");
            if (rc == 0) throw ProtocolError("timeout waiting for protocol record");
        }
        char chunk[4096];
        const ssize_t n = ::read(in_fd_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            fail_errno("read failed");
        }
        if (n == 0) {
            if (buffer_.empty()) return false;
            throw ProtocolError("stream closed mid-record");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void Stream::write_line(const std::string& line) {
    if (out_fd_ < 0) throw ProtocolError("write on a closed stream");
    std::string data = line;
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(out_fd_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail_errno("write failed");
        }
        off += static_cast<std::size_t>(n);
    }
}

namespace {

struct Address {
    enum class Kind { Tcp, Unix } kind = Kind::Tcp;
    std::string host = "127.0.0.1";
    std::string port;
    std::string path;
};

Address parse_address(const std::string& address) {
    Address a;
    if (address.rfind("tcp:", 0) == 0) {
        a.kind = Address::Kind::Tcp;
        const std::string rest = address.substr(4);
        const std::size_t colon = rest.rfind(':');
        if (colon == std::string::npos) {
            a.port = rest;
        } else {
            a.host = rest.substr(0, colon);
            a.port = rest.substr(colon + 1);
        }
        if (a.port.empty()) throw ConfigError("tcp address needs a port: " + address);
        return a;
    }
    if (address.rfind("unix:", 0) == 0) {
        a.kind = Address::Kind::Unix;
        a.path = address.substr(5);
        if (a.path.empty()) throw ConfigError("unix address needs a path: " + address);
        return a;
    }
    throw ConfigError("unsupported xbridge address '" + address +
                      "' (use tcp:host:port or unix:/path)");
}

int connect_tcp(const Address& a) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(a.host.c_str(), a.port.c_str(), &hints, &res);
    if (rc != 0) {
        throw ProtocolError("cannot resolve " + a.host + ":" + a.port + ": " +
                            gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* it = res; it; it = it->ai_next) {
        fd = ::socket(it->ai_family, it->ai_socktype, it->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, it->ai_addr, it->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw ProtocolError("cannot connect to " + a.host + ":" + a.port);
    return fd;
}

int connect_unix(const Address& a) {
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) fail_errno("socket failed");
    sockaddr_un sa{};
    sa.sun_family = AF_UNIX;
    if (a.path.size() >= sizeof(sa.sun_path)) {
        ::close(fd);
        throw ConfigError("unix socket path too long: " + a.path);
    }
    std::strncpy(sa.sun_path, a.path.c_str(), sizeof(sa.sun_path) - 1);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
        ::close(fd);
        fail_errno("cannot connect to unix socket " + a.path);
    }
    return fd;
}

}  // namespace

Stream connect(const std::string& address, double timeout_s) {
    (void)timeout_s;  // connection timeout is the OS default; reads honor timeout_s
    const Address a = parse_address(address);
    const int fd = a.kind == Address::Kind::Tcp ? connect_tcp(a) : connect_unix(a);
    return Stream(fd, fd);
}

Stream listen_once(const std::string& address) {
    const Address a = parse_address(address);
    int listener = -1;
    if (a.kind == Address::Kind::Tcp) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        hints.ai_flags = AI_PASSIVE;
        addrinfo* res = nullptr;
        const int rc = ::getaddrinfo(a.host.c_str(), a.port.c_str(), &hints, &res);
        if (rc != 0) {
            throw ProtocolError("cannot resolve listen address: " +
                                std::string(gai_strerror(rc)));
        }
        for (addrinfo* it = res; it; it = it->ai_next) {
            listener = ::socket(it->ai_family, it->ai_socktype, it->ai_protocol);
            if (listener < 0) continue;
            const int one = 1;
            ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
            if (::bind(listener, it->ai_addr, it->ai_addrlen) == 0) break;
            ::close(listener);
            listener = -1;
        }
        ::freeaddrinfo(res);
        if (listener < 0) throw ProtocolError("cannot bind " + a.host + ":" + a.port);
    } else {
        listener = ::socket(AF_UNIX, SOCK_STREAM, 0);
        if (listener < 0) fail_errno("socket failed");
        sockaddr_un sa{};
        sa.sun_family = AF_UNIX;
        std::strncpy(sa.sun_path, a.path.c_str(), sizeof(sa.sun_path) - 1);
        ::unlink(a.path.c_str());
        if (::bind(listener, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
            ::close(listener);
            fail_errno("cannot bind unix socket " + a.path);
        }
    }
    if (::listen(listener, 1) != 0) {
        ::close(listener);
        fail_errno("listen failed");
    }
    const int fd = ::accept(listener, nullptr, nullptr);
    ::close(listener);
    if (fd < 0) fail_errno("accept failed");
    return Stream(fd, fd);
}

void serve(observer::Predictor& predictor, Stream& stream) {
    const observer::PredictorInfo& info = predictor.info();
    const auto send_error = [&](const std::string& message) {
        json err;
        err["type"] = "error";
        err["message"] = message;
        try {
            stream.write_line(err.dump());
        } catch (const ProtocolError&) {
            // peer is already gone; nothing left to report
        }
    };

    try {
        std::string line;
        if (!stream.read_line(&line, 0.0)) return;
        const json hello = parse_record(line);
        if (hello.value("type", "") != "hello") {
            send_error("expected a hello record");
            return;
        }
        if (hello.value("version", "") != kProtocolVersion) {
            send_error("unsupported protocol version '" +
                       hello.value("version", std::string()) + "', this side speaks " +
                       kProtocolVersion);
            return;
        }

        json hs;
        hs["type"] = "handshake";
        hs["version"] = kProtocolVersion;
        hs["predictor"] = info.id;
        hs["state_labels"] = info.state_labels;
        hs["input_labels"] = info.input_labels;
        hs["output_labels"] = info.output_labels;
        hs["ext_labels"] = info.ext_labels;
        stream.write_line(hs.dump());

        long expected_index = 1;
        while (stream.read_line(&line, 0.0)) {
            const json req = parse_record(line);
            const std::string type = req.value("type", "");
            if (type != "step") {
                send_error("unexpected record type '" + type + "'");
                return;
            }
            const long k = req.value("k", -1L);
            if (k != expected_index) {
                send_error("out-of-order step index " + std::to_string(k) + ", expected " +
                           std::to_string(expected_index));
                return;
            }
            const Eigen::VectorXd x = get_vector(req, "x", info.state_dim());
            const Eigen::VectorXd u = get_vector(req, "u", info.input_dim());
            const Eigen::VectorXd dz = get_vector(req, "dz", info.ext_dim());

            observer::Predictor::Step out;
            try {
                out = predictor.step(x, u, dz);
            } catch (const Error& e) {
                send_error(std::string("predictor failed: ") + e.what());
                return;
            }
            json resp;
            resp["type"] = "step_result";
            resp["k"] = k;
            resp["x"] = put_vector(out.x, "x");
            resp["y"] = put_vector(out.y, "y");
            resp["z"] = put_vector(out.z, "z");
            stream.write_line(resp.dump());
            ++expected_index;
        }
    } catch (const ProtocolError& e) {
        send_error(e.what());
    }
}

RemotePredictor::RemotePredictor(Stream stream, double timeout_s)
    : stream_(std::move(stream)), timeout_s_(timeout_s) {
    json hello;
    hello["type"] = "hello";
    hello["version"] = kProtocolVersion;
    stream_.write_line(hello.dump());

    std::string line;
    if (!stream_.read_line(&line, timeout_s_)) {
        throw ProtocolError("stream closed during handshake");
    }
    const json hs = parse_record(line);
    const std::string type = hs.value("type", "");
    if (type == "error") raise_remote_error(hs);
    if (type != "handshake") {
        throw ProtocolError("expected a handshake record, got '" + type + "'");
    }
    if (hs.value("version", "") != kProtocolVersion) {
        throw ProtocolError("protocol version mismatch: remote speaks '" +
                            hs.value("version", std::string()) + "', this side " +
                            kProtocolVersion);
    }
    info_.id = "extern:" + hs.value("predictor", std::string("unknown"));
    info_.state_labels = get_labels(hs, "state_labels");
    info_.input_labels = get_labels(hs, "input_labels");
    info_.output_labels = get_labels(hs, "output_labels");
    info_.ext_labels = get_labels(hs, "ext_labels");
    if (info_.state_labels.empty() || info_.output_labels.empty()) {
        throw ProtocolError("handshake declared empty state or output labels");
    }
}

observer::Predictor::Step RemotePredictor::step(const Eigen::VectorXd& x_prev,
                                                const Eigen::VectorXd& u_prev,
                                                const Eigen::VectorXd& dz_prev) {
    if (x_prev.size() != info_.state_dim() || u_prev.size() != info_.input_dim() ||
        dz_prev.size() != info_.ext_dim()) {
        throw ConfigError("remote predictor: request dimensions do not match the handshake");
    }
    json req;
    req["type"] = "step";
    req["k"] = next_index_;
    req["x"] = put_vector(x_prev, "x");
    req["u"] = put_vector(u_prev, "u");
    req["dz"] = put_vector(dz_prev, "dz");
    stream_.write_line(req.dump());

    std::string line;
    if (!stream_.read_line(&line, timeout_s_)) {
        throw ProtocolError("stream closed, last good step " +
                            std::to_string(next_index_ - 1));
    }
    const json resp = parse_record(line);
    const std::string type = resp.value("type", "");
    if (type == "error") raise_remote_error(resp);
    if (type != "step_result") {
        throw ProtocolError("expected step_result, got '" + type + "'");
    }
    if (resp.value("k", -1L) != next_index_) {
        throw ProtocolError("response index " + std::to_string(resp.value("k", -1L)) +
                            " does not match request " + std::to_string(next_index_));
    }
    Step out;
    out.x = get_vector(resp, "x", info_.state_dim());
    out.y = get_vector(resp, "y", info_.output_dim());
    out.z = get_vector(resp, "z", info_.ext_dim());
    ++next_index_;
    return out;
}

std::unique_ptr<RemotePredictor> connect_predictor(const std::string& address,
                                                   double timeout_s) {
    return std::make_unique<RemotePredictor>(connect(address, timeout_s), timeout_s);
}

}  // namespace silo::xbridge
