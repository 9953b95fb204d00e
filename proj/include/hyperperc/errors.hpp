#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hyperperc {

/// Bad input: dimension mismatch, unknown index set, malformed walk, ...
class invalid_argument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A surround certificate that violates its structural invariants.
class invalid_certificate : public invalid_argument {
public:
    using invalid_argument::invalid_argument;
};

/// A deterministic construction that is guaranteed to succeed did not.
/// Raised instead of returning a partial answer: either the claim behind the
/// construction is false or there is a bug, and both must surface loudly.
class falsified_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b)
{
#if defined(HYPERPERC_CHECKED_ARITHMETIC)
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r))
        throw std::overflow_error("coordinate overflow in addition");
    return r;
#else
    return a + b;
#endif
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b)
{
#if defined(HYPERPERC_CHECKED_ARITHMETIC)
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r))
        throw std::overflow_error("coordinate overflow in multiplication");
    return r;
#else
    return a * b;
#endif
}

} // namespace detail
} // namespace hyperperc
