#include "ccekit/candidates.hpp"

namespace ccekit {

std::string_view to_string(CandidateSource s) {
    switch (s) {
        case CandidateSource::cs_averages: return "cs_averages";
        case CandidateSource::regressors_only: return "regressors_only";
        case CandidateSource::oracle: return "oracle";
    }
    return "?";
}

void CandidateSet::validate() const {
    if (c.cols() < 1 || c.rows() < 1) {
        throw DimensionError("candidate set must have at least one row and one column");
    }
    if (static_cast<Eigen::Index>(labels.size()) != c.cols()) {
        throw DimensionError("candidate set: label count does not match column count");
    }
    if (!c.allFinite()) {
        throw DimensionError("candidate set contains non-finite entries");
    }
}

}  // namespace ccekit
