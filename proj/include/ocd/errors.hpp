#pragma once

#include <stdexcept>
#include <string>

namespace ocd {

/// Input that violates a documented format or precondition (exit code 2).
class ValidationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A parse failure that knows the 1-based line it happened on.
class ParseError : public ValidationError
{
public:
    ParseError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), m_line(line)
    {
    }

    std::size_t line() const { return m_line; }

private:
    std::size_t m_line;
};

/// A remote dependency (LLM endpoint, scorer service) could not be reached.
class ExternalServiceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// The per-instance oracle evaluation cap was hit.
class BudgetExhausted : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace ocd
