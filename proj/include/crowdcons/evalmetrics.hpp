#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdcons/answers.hpp"
#include "crowdcons/corpus.hpp"

namespace crowdcons {

// Disagreement is the positive class throughout.

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    double threshold = 0.0;
};

struct PrCurve {
    std::vector<PrPoint> points;  // thresholds descending, one per distinct score
    std::size_t n_positive = 0;
    std::size_t n_total = 0;
};

/// Items with equal scores enter together. Throws LengthMismatch or NoPositives.
PrCurve pr_curve(std::span<const double> scores, std::span<const AgreementLabel> labels);

/// Non-interpolated AP: mean over positives of the precision at the
/// positive's threshold group.
double average_precision(std::span<const double> scores, std::span<const AgreementLabel> labels);

struct EvalReport {
    double ap_overall = 0.0;
    std::map<std::string, double> ap_by_type;  // strata without positives are absent
    std::map<std::string, std::size_t> n_by_type;
};

/// Stratum names are to_string(AnswerType) or "unknown". Throws
/// LengthMismatch; NoPositives only when the whole set has no positive.
EvalReport stratified_eval(std::span<const double> scores, std::span<const AgreementLabel> labels,
                           std::span<const std::optional<AnswerType>> answer_types);

}  // namespace crowdcons
