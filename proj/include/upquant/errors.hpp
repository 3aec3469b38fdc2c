#pragma once

#include <stdexcept>
#include <string>

namespace upquant {

enum class errc {
    negative_entry,
    row_sum_violation,
    empty_channel,
    syntax_error,
    dimension_mismatch,
    not_proportional,
    mass_too_small,
    instance_too_large,
    invalid_spec,
};

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::negative_entry:     return "NegativeEntry";
    case errc::row_sum_violation:  return "RowSumViolation";
    case errc::empty_channel:      return "EmptyChannel";
    case errc::syntax_error:       return "SyntaxError";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::not_proportional:   return "NotProportional";
    case errc::mass_too_small:     return "MassTooSmall";
    case errc::instance_too_large: return "InstanceTooLarge";
    case errc::invalid_spec:       return "InvalidSpec";
    }
    return "UnknownError";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace upquant
