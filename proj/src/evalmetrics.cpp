#include "crowdcons/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowdcons/error.hpp"

namespace crowdcons {

namespace {

void check_inputs(std::span<const double> scores, std::span<const AgreementLabel> labels) {
    if (scores.size() != labels.size()) {
        throw LengthMismatch(std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) +
                             " labels");
    }
    if (std::any_of(scores.begin(), scores.end(), [](double s) { return std::isnan(s); })) {
        throw InvalidConfig("scores must not be NaN");
    }
    if (std::none_of(labels.begin(), labels.end(),
                     [](AgreementLabel l) { return l == AgreementLabel::Disagreement; })) {
        throw NoPositives("no Disagreement labels to evaluate");
    }
}

struct Group {
    double threshold;
    std::size_t positives;  // within the group
    std::size_t cumulative_positives;
    std::size_t cumulative_total;
};

std::vector<Group> threshold_groups(std::span<const double> scores, std::span<const AgreementLabel> labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<Group> groups;
    std::size_t tp = 0, seen = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        std::size_t pos = 0, j = i;
        for (; j < order.size() && scores[order[j]] == s; ++j) pos += labels[order[j]] == AgreementLabel::Disagreement;
        tp += pos;
        seen += j - i;
        groups.push_back({s, pos, tp, seen});
        i = j;
    }
    return groups;
}

}  // namespace

PrCurve pr_curve(std::span<const double> scores, std::span<const AgreementLabel> labels) {
    check_inputs(scores, labels);
    PrCurve curve;
    curve.n_total = scores.size();
    const auto groups = threshold_groups(scores, labels);
    curve.n_positive = groups.back().cumulative_positives;
    const double p = static_cast<double>(curve.n_positive);
    for (const auto& g : groups) {
        curve.points.push_back({static_cast<double>(g.cumulative_positives) / p,
                                static_cast<double>(g.cumulative_positives) / static_cast<double>(g.cumulative_total),
                                g.threshold});
    }
    return curve;
}

double average_precision(std::span<const double> scores, std::span<const AgreementLabel> labels) {
    check_inputs(scores, labels);
    const auto groups = threshold_groups(scores, labels);
    double sum = 0.0;
    for (const auto& g : groups) {
        if (g.positives == 0) continue;
        sum += static_cast<double>(g.positives) * static_cast<double>(g.cumulative_positives) /
               static_cast<double>(g.cumulative_total);
    }
    return sum / static_cast<double>(groups.back().cumulative_positives);
}

EvalReport stratified_eval(std::span<const double> scores, std::span<const AgreementLabel> labels,
                           std::span<const std::optional<AnswerType>> answer_types) {
    if (answer_types.size() != scores.size()) {
        throw LengthMismatch(std::to_string(answer_types.size()) + " answer types vs " +
                             std::to_string(scores.size()) + " scores");
    }
    EvalReport report;
    report.ap_overall = average_precision(scores, labels);

    std::map<std::string, std::pair<std::vector<double>, std::vector<AgreementLabel>>> strata;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const std::string key = answer_types[i] ? std::string(to_string(*answer_types[i])) : "unknown";
        auto& [s, l] = strata[key];
        s.push_back(scores[i]);
        l.push_back(labels[i]);
    }
    for (const auto& [key, stratum] : strata) {
        const auto& [s, l] = stratum;
        report.n_by_type[key] = s.size();
        if (std::find(l.begin(), l.end(), AgreementLabel::Disagreement) != l.end()) {
            report.ap_by_type[key] = average_precision(s, l);
        }
    }
    return report;
}

}  // namespace crowdcons
