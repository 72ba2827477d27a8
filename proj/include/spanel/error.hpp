#pragma once

#include <stdexcept>
#include <string>

namespace spanel {

// Category of a toolkit failure. Tests and the CLI dispatch on it; the
// message carries the human-readable diagnostic.
enum class errc {
    ingestion,    // unparseable input row or malformed file
    balance,      // panel not balanced / years not consecutive
    domain,       // value outside the mathematical domain (log of <= 0, ...)
    validation,   // structural invariant violated (asymmetry, negative weight, ...)
    dimension,    // too few observations / periods for the requested operation
    degenerate,   // zero variance, all-zero weights, singular system
    rank,         // collinear regressors
    boundary,     // optimizer pinned at the admissible-interval edge
    numerical,    // non-finite likelihood or unstable solve
    nesting,      // likelihood-ratio pair not nested / negative statistic
    inference,    // simulation inference failed (too many rejected draws)
    campaign,     // too many replication failures
    usage,        // caller error: bad flags, mismatched specs
    io,           // file system failure
};

const char* to_string(errc code);

class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace spanel
