#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace s3c2 {

enum class ErrKind {
    Dimension,   // shape/size mismatch between containers
    EmptyInput,  // operation needs at least one element
    Infeasible,  // request cannot be satisfied (e.g. not enough eligible pairs)
    InvalidArgument,
    Parse,       // malformed file contents
    Io,          // unreadable/unwritable file
    State,       // stale tape, missing decoder, uninitialized model
};

class Error : public std::runtime_error {
public:
    Error(ErrKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrKind kind() const noexcept { return kind_; }

private:
    ErrKind kind_;
};

namespace detail {
inline void concat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void concat_into(std::ostringstream& oss, T&& v, Rest&&... rest) {
    oss << std::forward<T>(v);
    concat_into(oss, std::forward<Rest>(rest)...);
}
}  // namespace detail

template <typename... Parts>
std::string concat(Parts&&... parts) {
    std::ostringstream oss;
    detail::concat_into(oss, std::forward<Parts>(parts)...);
    return oss.str();
}

template <typename... Parts>
[[noreturn]] void fail(ErrKind kind, Parts&&... parts) {
    throw Error(kind, concat(std::forward<Parts>(parts)...));
}

}  // namespace s3c2
