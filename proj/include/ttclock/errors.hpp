#pragma once

#include <stdexcept>
#include <string>

namespace ttclock {

/// Failure categories. Each maps onto one CLI exit code.
enum class Errc {
    configuration,
    validation,
    resolution,
    step_size,
    incomplete_transit,
    classically_forbidden,
    regime_violation,
    undefined_time,
    unsupported_order,
    no_transmission,
    aliasing,
    quadrature,
};

inline const char* to_string(Errc code)
{
    switch (code) {
    case Errc::configuration: return "configuration";
    case Errc::validation: return "validation";
    case Errc::resolution: return "resolution";
    case Errc::step_size: return "step-size";
    case Errc::incomplete_transit: return "incomplete-transit";
    case Errc::classically_forbidden: return "classically-forbidden";
    case Errc::regime_violation: return "regime-violation";
    case Errc::undefined_time: return "undefined-time";
    case Errc::unsupported_order: return "unsupported-order";
    case Errc::no_transmission: return "no-transmission";
    case Errc::aliasing: return "aliasing";
    case Errc::quadrature: return "quadrature";
    }
    return "unknown";
}

/// Exit-code taxonomy: 2 config, 3 validation, 4 numerical, 5 regime.
inline int exit_code(Errc code)
{
    switch (code) {
    case Errc::configuration:
    case Errc::unsupported_order:
        return 2;
    case Errc::validation:
    case Errc::aliasing:
        return 3;
    case Errc::resolution:
    case Errc::step_size:
    case Errc::incomplete_transit:
    case Errc::no_transmission:
    case Errc::quadrature:
        return 4;
    case Errc::classically_forbidden:
    case Errc::regime_violation:
    case Errc::undefined_time:
        return 5;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline void require(bool condition, Errc code, const std::string& what)
{
    if (!condition)
        throw Error(code, what);
}

} // namespace ttclock
