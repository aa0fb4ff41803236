#include "fusenet/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fusenet {

namespace {

/// F_a*F_b/(F_a+F_b) * (t_a-t_b)^2 with the zero-denominator limit of 0.
inline double pair_term(double fa, double fb, double ta, double tb) {
    const double s = fa + fb;
    if (s <= 0.0) return 0.0;
    const double d = ta - tb;
    return (fa * fb / s) * d * d;
}

void check_same_architecture(const Network& a, const Network& b) {
    if (a.depth() != b.depth() || a.input_width() != b.input_width()) {
        throw std::invalid_argument("align: architectures differ");
    }
    for (std::size_t l = 0; l < a.depth(); ++l) {
        if (a.layers[l].out_width() != b.layers[l].out_width() ||
            a.layers[l].in_width() != b.layers[l].in_width()) {
            throw std::invalid_argument("align: layer widths differ");
        }
    }
}

void check_perm(const std::vector<std::size_t>& perm, std::size_t width) {
    if (perm.size() != width) {
        throw std::invalid_argument("permute_hidden: permutation size mismatch");
    }
    std::vector<char> seen(width, 0);
    for (std::size_t p : perm) {
        if (p >= width || seen[p]) {
            throw std::invalid_argument("permute_hidden: not a bijection");
        }
        seen[p] = 1;
    }
}

void permute_layer_pair(Matrix& w, Vector& b, Matrix& next_w,
                        const std::vector<std::size_t>& perm) {
    Matrix w_new(w.rows, w.cols);
    Vector b_new(b.size());
    for (std::size_t j = 0; j < perm.size(); ++j) {
        std::copy_n(w.row(perm[j]), w.cols, w_new.row(j));
        b_new[j] = b[perm[j]];
    }
    Matrix next_new(next_w.rows, next_w.cols);
    for (std::size_t r = 0; r < next_w.rows; ++r) {
        const double* src = next_w.row(r);
        double* dst = next_new.row(r);
        for (std::size_t j = 0; j < perm.size(); ++j) {
            dst[j] = src[perm[j]];
        }
    }
    w = std::move(w_new);
    b = std::move(b_new);
    next_w = std::move(next_new);
}

} // namespace

Matrix pair_cost(const Network& a, const Network& b, const FisherDiag& fisher_a,
                 const FisherDiag& fisher_b, std::size_t layer, CostScope scope) {
    check_same_architecture(a, b);
    if (layer + 1 >= a.depth()) {
        throw std::invalid_argument("pair_cost: layer index must be hidden");
    }
    validate_fisher(fisher_a, a);
    validate_fisher(fisher_b, b);

    const Matrix& wa = a.layers[layer].weights;
    const Matrix& wb = b.layers[layer].weights;
    const Matrix& fwa = fisher_a.weights[layer];
    const Matrix& fwb = fisher_b.weights[layer];
    const Vector& ba = a.layers[layer].bias;
    const Vector& bb = b.layers[layer].bias;
    const Vector& fba = fisher_a.biases[layer];
    const Vector& fbb = fisher_b.biases[layer];

    const std::size_t n = wa.rows;
    Matrix cost(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            double c = pair_term(fba[k], fbb[l], ba[k], bb[l]);
            const double* ta = wa.row(k);
            const double* tb = wb.row(l);
            const double* fa = fwa.row(k);
            const double* fb = fwb.row(l);
            for (std::size_t i = 0; i < wa.cols; ++i) {
                c += pair_term(fa[i], fb[i], ta[i], tb[i]);
            }
            cost(k, l) = c;
        }
    }

    if (scope == CostScope::presynaptic_and_postsynaptic) {
        const Matrix& na = a.layers[layer + 1].weights;
        const Matrix& nb = b.layers[layer + 1].weights;
        const Matrix& fna = fisher_a.weights[layer + 1];
        const Matrix& fnb = fisher_b.weights[layer + 1];
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t l = 0; l < n; ++l) {
                double c = 0.0;
                for (std::size_t r = 0; r < na.rows; ++r) {
                    c += pair_term(fna(r, k), fnb(r, l), na(r, k), nb(r, l));
                }
                cost(k, l) += c;
            }
        }
    }
    return cost;
}

AssignmentSolution solve_assignment(const Matrix& cost) {
    const std::size_t n = cost.rows;
    if (n == 0 || cost.cols != n) {
        throw std::invalid_argument("solve_assignment: matrix must be square");
    }
    for (double v : cost.data) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument(
                "solve_assignment: entries must be finite and nonnegative");
        }
    }

    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; match[j] is the row currently assigned to column j.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            std::size_t j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    AssignmentSolution sol;
    sol.permutation.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        sol.permutation[match[j] - 1] = j - 1;
    }
    sol.total_cost = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sol.total_cost += cost(k, sol.permutation[k]);
    }
    return sol;
}

Network permute_hidden(const Network& net, std::size_t layer_index,
                       const std::vector<std::size_t>& perm) {
    if (layer_index + 1 >= net.depth()) {
        throw std::invalid_argument("permute_hidden: output layer cannot be permuted");
    }
    check_perm(perm, net.layers[layer_index].out_width());
    Network out = net;
    permute_layer_pair(out.layers[layer_index].weights, out.layers[layer_index].bias,
                       out.layers[layer_index + 1].weights, perm);
    return out;
}

ParamTensors permute_hidden(const ParamTensors& params, std::size_t layer_index,
                            const std::vector<std::size_t>& perm) {
    if (layer_index + 1 >= params.weights.size()) {
        throw std::invalid_argument("permute_hidden: output layer cannot be permuted");
    }
    check_perm(perm, params.weights[layer_index].rows);
    ParamTensors out = params;
    permute_layer_pair(out.weights[layer_index], out.biases[layer_index],
                       out.weights[layer_index + 1], perm);
    return out;
}

AlignResult align_networks(const TrainedModel& a, const TrainedModel& b,
                           CostScope scope) {
    check_same_architecture(a.network, b.network);
    if (!a.fisher || !b.fisher) {
        throw std::invalid_argument("align_networks: both models need Fisher values");
    }
    validate_fisher(*a.fisher, a.network);
    validate_fisher(*b.fisher, b.network);

    AlignResult out;
    out.aligned_b = b;
    for (std::size_t l = 0; l + 1 < a.network.depth(); ++l) {
        const Matrix cost =
            pair_cost(a.network, out.aligned_b.network, *a.fisher,
                      *out.aligned_b.fisher, l, scope);
        double diag_cost = 0.0;
        for (std::size_t k = 0; k < cost.rows; ++k) diag_cost += cost(k, k);
        out.identity_costs.push_back(diag_cost);

        AssignmentSolution sol = solve_assignment(cost);
        out.aligned_b.network =
            permute_hidden(out.aligned_b.network, l, sol.permutation);
        out.aligned_b.fisher =
            permute_hidden(*out.aligned_b.fisher, l, sol.permutation);
        out.solutions.push_back(std::move(sol));
    }
    return out;
}

} // namespace fusenet
