#pragma once

#include <stdexcept>
#include <string>

namespace eiv
{

// Error categories map one-to-one onto CLI exit codes (see tools/eiv_main.cpp).
enum class ErrorKind
{
    parse = 2,
    shape = 3,
    infeasible = 4,
    solver = 5,
};

class Error : public std::runtime_error
{
  public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind(kind) {}
    ErrorKind kind;
};

inline void require(bool cond, ErrorKind kind, const std::string &what)
{
    if (!cond)
        throw Error(kind, what);
}

} // namespace eiv
