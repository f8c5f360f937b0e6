#pragma once

#include <stdexcept>
#include <string>

namespace prunesearch {

struct CryptoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PersistError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QueryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
    enum class Kind { connect, timeout, status, protocol, oversized };
    TransportError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

} // namespace prunesearch
