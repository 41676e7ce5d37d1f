#pragma once

#include <stdexcept>
#include <string>

namespace molcomm
{
//! Argument outside the mathematical domain of a function (t <= 0, NaN, ...).
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

//! Invalid link, optimizer or run configuration.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! Caller broke a documented precondition (wrong pattern length, empty grid).
class ContractViolation : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

//! SNR requested for a transmission that carries no molecules.
class NoSignalError : public std::domain_error
{
  public:
    NoSignalError() : std::domain_error("no signal: molecule count is zero") {}
};

//! Numerical breakdown during optimization or simulation.
class NumericalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail
{
template<class E>
inline void require(bool cond, std::string const& msg)
{
    if (!cond)
    {
        throw E(msg);
    }
}
}  // namespace detail
}  // namespace molcomm
