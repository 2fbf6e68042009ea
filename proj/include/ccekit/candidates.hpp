#pragma once

#include "ccekit/matlin.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ccekit {

enum class CandidateSource { cs_averages, regressors_only, oracle };

std::string_view to_string(CandidateSource s);

/// T x K matrix of candidate factor proxies with one label per column.
struct CandidateSet {
    Mat c;
    std::vector<std::string> labels;
    CandidateSource source = CandidateSource::cs_averages;

    int T() const { return static_cast<int>(c.rows()); }
    int K() const { return static_cast<int>(c.cols()); }

    /// Throws DimensionError unless K >= 1, labels match and entries are finite.
    void validate() const;
};

}  // namespace ccekit
