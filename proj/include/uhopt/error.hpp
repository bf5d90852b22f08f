#pragma once

#include <stdexcept>
#include <string>

namespace uhopt {

enum class ErrorCode {
    invalid_argument = 1,
    no_bracket = 2,
    not_converged = 3,
    infeasible = 4,
};

// Every failure raised by the library carries one of the codes above so the
// C layer can map it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::invalid_argument, what);
}

}  // namespace uhopt
