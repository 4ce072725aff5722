#pragma once

#include <stdexcept>
#include <string>

namespace grem {

enum class errc {
    non_normalized,
    uncovered_coordinate,
    empty_set_weight,
    n_too_large,
    unknown_model,
    bad_pair,
    nonmonotone_beta,
    no_finite_rho,
    zero_level_weight,
    too_many_chains,
    chain_mismatch,
    size_guard,
    invalid_n,
    regime_mismatch,
    degenerate_constant,
    degenerate_t1,
    cap_exceeded,
    poor_truncation,
    parse_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::non_normalized: return "NON_NORMALIZED";
        case errc::uncovered_coordinate: return "UNCOVERED_COORDINATE";
        case errc::empty_set_weight: return "EMPTY_SET_WEIGHT";
        case errc::n_too_large: return "N_TOO_LARGE";
        case errc::unknown_model: return "UNKNOWN_MODEL";
        case errc::bad_pair: return "BAD_PAIR";
        case errc::nonmonotone_beta: return "NONMONOTONE_BETA";
        case errc::no_finite_rho: return "NO_FINITE_RHO";
        case errc::zero_level_weight: return "ZERO_LEVEL_WEIGHT";
        case errc::too_many_chains: return "TOO_MANY_CHAINS";
        case errc::chain_mismatch: return "CHAIN_MISMATCH";
        case errc::size_guard: return "SIZE_GUARD";
        case errc::invalid_n: return "INVALID_N";
        case errc::regime_mismatch: return "REGIME_MISMATCH";
        case errc::degenerate_constant: return "DEGENERATE_CONSTANT";
        case errc::degenerate_t1: return "DEGENERATE_T1";
        case errc::cap_exceeded: return "CAP_EXCEEDED";
        case errc::poor_truncation: return "POOR_TRUNCATION";
        case errc::parse_error: return "PARSE_ERROR";
    }
    return "UNKNOWN";
}

/// All recoverable library failures are reported through this exception.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

} // namespace grem
