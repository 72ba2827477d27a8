#pragma once

#include <string>

namespace spanel {

// One hypothesis-test outcome, shared by the autocorrelation statistics,
// the permutation test, and the coefficient tests (Wald/Hausman/LR).
struct TestResult {
    std::string name;
    double statistic = 0.0;
    double expectation = 0.0;  // null expectation of the statistic
    double sd = 0.0;           // null standard deviation (0 when not applicable)
    double z = 0.0;
    double p_value = 1.0;
    int tails = 2;
    int df = 0;          // chi-squared tests only
    std::string note;    // degraded-computation warnings, empty otherwise
};

}  // namespace spanel
