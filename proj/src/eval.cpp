#include "fusenet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fusenet {

std::uint64_t ConfusionMatrix::row_sum(std::size_t r) const {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) s += at(r, c);
    return s;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) s += at(i, i);
    return s;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t s = 0;
    for (std::uint64_t v : counts) s += v;
    return s;
}

namespace {

EvalResult evaluate_over_units(const Network& net, const Dataset& test,
                               const std::vector<std::size_t>& units) {
    // The confusion axis lists the allowed labels in network order.
    EvalResult out;
    out.confusion.classes.reserve(units.size());
    for (std::size_t u : units) {
        out.confusion.classes.push_back(net.class_labels[u]);
    }
    out.confusion.counts.assign(units.size() * units.size(), 0);

    std::set<int> allowed(out.confusion.classes.begin(),
                          out.confusion.classes.end());
    for (int c : test.class_set) {
        if (!allowed.count(c)) {
            throw std::invalid_argument(
                "evaluate: test class not covered by the evaluated outputs: " +
                std::to_string(c));
        }
    }
    auto axis_index = [&out](int label) {
        for (std::size_t i = 0; i < out.confusion.classes.size(); ++i) {
            if (out.confusion.classes[i] == label) return i;
        }
        throw std::logic_error("evaluate: label lookup failed");
    };

    std::uint64_t correct = 0;
    Vector x(net.input_width());
    for (std::size_t i = 0; i < test.size(); ++i) {
        std::copy_n(test.features.row(i), x.size(), x.begin());
        const ForwardTrace tr = forward(net, x);
        std::size_t best = 0;
        for (std::size_t k = 1; k < units.size(); ++k) {
            if (tr.output()[units[k]] > tr.output()[units[best]]) best = k;
        }
        const std::size_t row = axis_index(test.labels[i]);
        out.confusion.at(row, best) += 1;
        if (out.confusion.classes[best] == test.labels[i]) ++correct;
    }
    out.accuracy = test.size() ? double(correct) / double(test.size()) : 0.0;
    return out;
}

} // namespace

EvalResult evaluate(const Network& net, const Dataset& test) {
    net.validate();
    std::vector<std::size_t> units(net.output_width());
    for (std::size_t i = 0; i < units.size(); ++i) units[i] = i;
    return evaluate_over_units(net, test, units);
}

EvalResult evaluate_restricted(const Network& net, const Dataset& test,
                               const std::vector<int>& allowed) {
    net.validate();
    if (allowed.empty()) {
        throw std::invalid_argument("evaluate_restricted: empty label subset");
    }
    if (std::set<int>(allowed.begin(), allowed.end()).size() != allowed.size()) {
        throw std::invalid_argument("evaluate_restricted: duplicate label in subset");
    }
    std::vector<std::size_t> units;
    units.reserve(allowed.size());
    for (int label : allowed) {
        units.push_back(net.label_index(label));
    }
    return evaluate_over_units(net, test, units);
}

std::pair<double, double> aggregate(const std::vector<double>& runs) {
    if (runs.size() < 2) {
        throw std::invalid_argument("aggregate: need at least 2 runs");
    }
    double mean = 0.0;
    for (double r : runs) mean += r;
    mean /= double(runs.size());
    double ss = 0.0;
    for (double r : runs) {
        const double d = r - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / double(runs.size() - 1))};
}

} // namespace fusenet
