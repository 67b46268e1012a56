#pragma once

// Scalar semantics shared by constant folding and the VM: two's complement
// wrapping, shift counts masked to 5 bits, INT_MIN / -1 == INT_MIN.

#include <cmath>
#include <cstdint>
#include <optional>

namespace gpc::kernelc::sem {

inline std::int32_t add(std::int32_t a, std::int32_t b)
{
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}

inline std::int32_t sub(std::int32_t a, std::int32_t b)
{
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
}

inline std::int32_t mul(std::int32_t a, std::int32_t b)
{
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
}

inline std::int32_t neg(std::int32_t a)
{
    return static_cast<std::int32_t>(0u - static_cast<std::uint32_t>(a));
}

inline std::optional<std::int32_t> div(std::int32_t a, std::int32_t b)
{
    if (b == 0)
        return std::nullopt;
    if (a == INT32_MIN && b == -1)
        return INT32_MIN;
    return a / b;
}

inline std::optional<std::int32_t> rem(std::int32_t a, std::int32_t b)
{
    if (b == 0)
        return std::nullopt;
    if (b == -1)
        return 0;
    return a % b;
}

inline std::int32_t shl(std::int32_t a, std::int32_t b)
{
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) << (b & 31));
}

inline std::int32_t shr(std::int32_t a, std::int32_t b)
{
    return a >> (b & 31);
}

inline std::optional<std::int32_t> float_to_int(double v)
{
    if (std::isnan(v) || v >= 2147483648.0 || v <= -2147483649.0)
        return std::nullopt;
    return static_cast<std::int32_t>(v);
}

} // namespace gpc::kernelc::sem
