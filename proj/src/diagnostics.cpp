#include "fusenet/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fusenet/rng.hpp"

namespace fusenet {

namespace {
inline int sgn(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }
} // namespace

PeqEstimate estimate_peq(std::size_t n_samples, double sigma_a, double sigma_b,
                         std::uint64_t seed) {
    if (n_samples < 1) {
        throw std::invalid_argument("estimate_peq: n_samples must be >= 1");
    }
    if (sigma_a < 0.0 || sigma_b < 0.0) {
        throw std::invalid_argument("estimate_peq: sigmas must be nonnegative");
    }
    if (sigma_a == 0.0 && sigma_b == 0.0) {
        throw std::invalid_argument("estimate_peq: sigmas cannot both be zero");
    }
    Rng rng(seed);
    std::size_t preserved = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double a = sigma_a * rng.normal();
        const double b = sigma_b * rng.normal();
        if (sgn(a + b) == sgn(a)) ++preserved;
    }
    PeqEstimate est;
    est.n_samples = n_samples;
    est.preserved = double(preserved) / double(n_samples);
    est.flipped = double(n_samples - preserved) / double(n_samples);
    return est;
}

std::vector<LayerWeightStats> weight_mean_report(const Network& net) {
    std::vector<LayerWeightStats> out;
    out.reserve(net.depth());
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& w = net.layers[l].weights.data;
        LayerWeightStats st;
        st.layer = l;
        st.n = w.size();
        double sum = 0.0;
        for (double v : w) sum += v;
        st.mean = sum / double(st.n);
        if (st.n >= 2) {
            double ss = 0.0;
            for (double v : w) {
                const double d = v - st.mean;
                ss += d * d;
            }
            st.stddev = std::sqrt(ss / double(st.n - 1));
        }
        st.standard_error = st.stddev / std::sqrt(double(st.n));
        out.push_back(st);
    }
    return out;
}

std::vector<double> dominance_report(const Network& a, const Network& b,
                                     const Dataset& probes) {
    if (probes.size() == 0) {
        throw std::invalid_argument("dominance_report: empty probe set");
    }
    if (a.depth() != b.depth() || a.input_width() != b.input_width() ||
        a.layers[0].out_width() != b.layers[0].out_width()) {
        throw std::invalid_argument("dominance_report: architectures differ");
    }
    if (probes.feature_dim() != a.input_width()) {
        throw std::invalid_argument("dominance_report: probe dimension mismatch");
    }

    const std::size_t width = a.layers[0].out_width();
    Vector sum_a(width, 0.0), sum_b(width, 0.0);
    Vector x(a.input_width());
    for (std::size_t i = 0; i < probes.size(); ++i) {
        std::copy_n(probes.features.row(i), x.size(), x.begin());
        for (std::size_t j = 0; j < width; ++j) {
            sum_a[j] += std::abs(a.layers[0].bias[j] +
                                 dot(a.layers[0].weights.row(j), x.data(), x.size()));
            sum_b[j] += std::abs(b.layers[0].bias[j] +
                                 dot(b.layers[0].weights.row(j), x.data(), x.size()));
        }
    }

    std::vector<double> ratios(width);
    for (std::size_t j = 0; j < width; ++j) {
        ratios[j] = sum_b[j] > 0.0
                        ? sum_a[j] / sum_b[j]
                        : std::numeric_limits<double>::infinity();
    }
    return ratios;
}

} // namespace fusenet
