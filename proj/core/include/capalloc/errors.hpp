#pragma once

#include <stdexcept>
#include <string>

namespace capalloc
{

    /// Raised when an input file, portfolio, or argument violates a
    /// documented precondition. The CLI maps this family to exit code 1.
    class validation_error : public std::invalid_argument
    {
    public:
        explicit validation_error(const std::string &what)
            : std::invalid_argument(what) {}
    };

    /// Raised when a computation cannot proceed numerically (singular
    /// scale, ill-conditioned system). The CLI maps this family to exit
    /// code 2.
    class numeric_error : public std::runtime_error
    {
    public:
        explicit numeric_error(const std::string &what)
            : std::runtime_error(what) {}
    };

} // namespace capalloc
