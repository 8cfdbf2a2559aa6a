#pragma once

#include <stdexcept>
#include <string>

namespace evsv {

// All recoverable failures surface as Error with a short, stable message
// ("utterance too short", "dimension error", ...) that callers and tests
// can match on.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(what);
}

}  // namespace evsv
