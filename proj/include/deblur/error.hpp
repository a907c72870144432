#pragma once

#include <stdexcept>
#include <string>

namespace deblur {

/// Error categories raised by the library. The CLI maps them onto exit codes.
enum class Errc {
    invalid_parameter,
    invalid_size,
    precondition,
    support_condition,
    size_guard,
    unsupported,
    singular_mixing,
    division_guard,
    format,
    io,
    config,
};

inline const char* to_string(Errc code) {
    switch (code) {
    case Errc::invalid_parameter: return "invalid parameter";
    case Errc::invalid_size: return "invalid size";
    case Errc::precondition: return "precondition violated";
    case Errc::support_condition: return "support condition violated";
    case Errc::size_guard: return "size guard exceeded";
    case Errc::unsupported: return "unsupported";
    case Errc::singular_mixing: return "singular mixing matrix";
    case Errc::division_guard: return "division guard";
    case Errc::format: return "format error";
    case Errc::io: return "I/O error";
    case Errc::config: return "configuration error";
    }
    return "unknown error";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

namespace detail {
inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) throw Error(code, what);
}
} // namespace detail

} // namespace deblur
