#include "spanel/error.hpp"

namespace spanel {

const char* to_string(errc code) {
    switch (code) {
        case errc::ingestion: return "ingestion error";
        case errc::balance: return "balance error";
        case errc::domain: return "domain error";
        case errc::validation: return "validation error";
        case errc::dimension: return "dimension error";
        case errc::degenerate: return "degenerate input";
        case errc::rank: return "rank error";
        case errc::boundary: return "boundary error";
        case errc::numerical: return "numerical error";
        case errc::nesting: return "nesting error";
        case errc::inference: return "inference error";
        case errc::campaign: return "campaign error";
        case errc::usage: return "usage error";
        case errc::io: return "i/o error";
    }
    return "error";
}

}  // namespace spanel
