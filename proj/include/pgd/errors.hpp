#pragma once

#include <stdexcept>
#include <string>

namespace pgd {

// Two error kinds cross the library boundary and map onto process exit
// codes: Parse for malformed files/config/usage (exit 2), Domain for valid
// input that is numerically or semantically unusable (exit 3).
class Error : public std::runtime_error {
public:
    enum class Kind { Parse, Domain };

    Error(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class ParseError : public Error {
public:
    explicit ParseError(std::string msg) : Error(Kind::Parse, std::move(msg)) {}
};

class DomainError : public Error {
public:
    explicit DomainError(std::string msg) : Error(Kind::Domain, std::move(msg)) {}
};

[[noreturn]] inline void throw_parse(const std::string& msg) { throw ParseError(msg); }
[[noreturn]] inline void throw_domain(const std::string& msg) { throw DomainError(msg); }

} // namespace pgd
