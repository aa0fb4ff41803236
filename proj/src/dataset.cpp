#include "fusenet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fusenet/rng.hpp"

namespace fusenet {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + p.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off,
                        const std::filesystem::path& p) {
    if (off + 4 > b.size()) {
        throw std::runtime_error("truncated IDX header in " + p.string());
    }
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex_magic(std::uint32_t m) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", m);
    return buf;
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

} // namespace

Dataset Dataset::from(Matrix features, std::vector<int> labels) {
    Dataset d;
    d.features = std::move(features);
    d.labels = std::move(labels);
    std::set<int> classes(d.labels.begin(), d.labels.end());
    d.class_set.assign(classes.begin(), classes.end());
    d.validate();
    return d;
}

void Dataset::validate() const {
    if (features.rows != labels.size()) {
        throw std::invalid_argument("dataset: feature rows != label count");
    }
    for (double v : features.data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("dataset: feature value outside [0,1]");
        }
    }
    std::set<int> classes(class_set.begin(), class_set.end());
    if (classes.size() != class_set.size()) {
        throw std::invalid_argument("dataset: duplicate entries in class_set");
    }
    for (int l : labels) {
        if (!classes.count(l)) {
            throw std::invalid_argument("dataset: label not in class_set");
        }
    }
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    const auto img = read_file(images_path);
    const auto lab = read_file(labels_path);

    const std::uint32_t img_magic = read_be32(img, 0, images_path);
    if (img_magic != kImagesMagic) {
        throw std::runtime_error("bad IDX image magic " + hex_magic(img_magic) +
                                 " in " + images_path.string() + " (expected " +
                                 hex_magic(kImagesMagic) + ")");
    }
    const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
    if (lab_magic != kLabelsMagic) {
        throw std::runtime_error("bad IDX label magic " + hex_magic(lab_magic) +
                                 " in " + labels_path.string() + " (expected " +
                                 hex_magic(kLabelsMagic) + ")");
    }

    const std::uint32_t n_img = read_be32(img, 4, images_path);
    const std::uint32_t n_rows = read_be32(img, 8, images_path);
    const std::uint32_t n_cols = read_be32(img, 12, images_path);
    const std::uint32_t n_lab = read_be32(lab, 4, labels_path);

    if (n_img != n_lab) {
        std::ostringstream msg;
        msg << "IDX count mismatch: " << n_img << " images in "
            << images_path.string() << " vs " << n_lab << " labels in "
            << labels_path.string();
        throw std::runtime_error(msg.str());
    }

    const std::size_t dim = std::size_t(n_rows) * n_cols;
    if (img.size() < 16 + std::size_t(n_img) * dim) {
        throw std::runtime_error("truncated IDX image payload in " +
                                 images_path.string());
    }
    if (lab.size() < 8 + std::size_t(n_lab)) {
        throw std::runtime_error("truncated IDX label payload in " +
                                 labels_path.string());
    }

    Matrix features(n_img, dim);
    for (std::size_t i = 0; i < n_img; ++i) {
        const std::uint8_t* src = img.data() + 16 + i * dim;
        double* dst = features.row(i);
        for (std::size_t j = 0; j < dim; ++j) {
            dst[j] = static_cast<double>(src[j]) / 255.0;
        }
    }
    std::vector<int> labels(n_lab);
    for (std::size_t i = 0; i < n_lab; ++i) {
        labels[i] = static_cast<int>(lab[8 + i]);
    }
    return Dataset::from(std::move(features), std::move(labels));
}

void save_idx(const Dataset& d, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
    d.validate();
    for (int l : d.labels) {
        if (l < 0 || l > 255) {
            throw std::invalid_argument("save_idx: labels must fit in a byte");
        }
    }
    std::size_t rows = 1;
    std::size_t cols = d.feature_dim();
    const auto root = static_cast<std::size_t>(std::lround(std::sqrt(double(cols))));
    if (root * root == cols) {
        rows = cols = root;
    }

    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    if (!img) throw std::runtime_error("cannot write " + images_path.string());
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(d.size()));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> buf(d.feature_dim());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double* src = d.features.row(i);
        for (std::size_t j = 0; j < buf.size(); ++j) {
            buf[j] = static_cast<unsigned char>(std::lround(src[j] * 255.0));
        }
        img.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
    }
    if (!img) throw std::runtime_error("write failed: " + images_path.string());

    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    if (!lab) throw std::runtime_error("cannot write " + labels_path.string());
    write_be32(lab, kLabelsMagic);
    write_be32(lab, static_cast<std::uint32_t>(d.size()));
    for (int l : d.labels) {
        const char b = static_cast<char>(static_cast<unsigned char>(l));
        lab.write(&b, 1);
    }
    if (!lab) throw std::runtime_error("write failed: " + labels_path.string());
}

SynthBlobsResult synth_blobs(std::size_t n_classes, std::size_t n_features,
                             std::size_t n_per_class, double center_scale,
                             double noise_std, std::uint64_t seed) {
    if (n_classes == 0 || n_features == 0 || n_per_class == 0) {
        throw std::invalid_argument("synth_blobs: counts must be positive");
    }
    if (center_scale < 0.0 || noise_std < 0.0) {
        throw std::invalid_argument("synth_blobs: scales must be nonnegative");
    }
    Rng rng(seed);

    Matrix centers(n_classes, n_features);
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t f = 0; f < n_features; ++f) {
            centers(c, f) = 0.5 + (rng.uniform() - 0.5) * center_scale;
        }
    }

    SynthBlobsResult out;
    Matrix features(n_classes * n_per_class, n_features);
    std::vector<int> labels(n_classes * n_per_class);
    std::size_t row = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t s = 0; s < n_per_class; ++s, ++row) {
            labels[row] = static_cast<int>(c);
            double* dst = features.row(row);
            for (std::size_t f = 0; f < n_features; ++f) {
                double v = centers(c, f) + noise_std * rng.normal();
                if (v < 0.0) {
                    v = 0.0;
                    ++out.clipped_values;
                } else if (v > 1.0) {
                    v = 1.0;
                    ++out.clipped_values;
                }
                dst[f] = v;
            }
        }
    }
    out.dataset = Dataset::from(std::move(features), std::move(labels));
    return out;
}

std::pair<Dataset, Dataset> split_by_class(const Dataset& d,
                                           const std::vector<int>& classes_a) {
    if (classes_a.empty()) {
        throw std::invalid_argument("split_by_class: classes_a is empty");
    }
    std::set<int> want(classes_a.begin(), classes_a.end());
    std::set<int> have(d.class_set.begin(), d.class_set.end());
    for (int c : want) {
        if (!have.count(c)) {
            throw std::invalid_argument("split_by_class: class not in dataset");
        }
    }
    if (want.size() >= have.size()) {
        throw std::invalid_argument(
            "split_by_class: classes_a must be a proper subset");
    }

    std::vector<std::size_t> idx_a, idx_b;
    for (std::size_t i = 0; i < d.size(); ++i) {
        (want.count(d.labels[i]) ? idx_a : idx_b).push_back(i);
    }
    auto take = [&](const std::vector<std::size_t>& idx) {
        Matrix f(idx.size(), d.feature_dim());
        std::vector<int> l(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::memcpy(f.row(i), d.features.row(idx[i]),
                        d.feature_dim() * sizeof(double));
            l[i] = d.labels[idx[i]];
        }
        return Dataset::from(std::move(f), std::move(l));
    };
    return {take(idx_a), take(idx_b)};
}

std::pair<Dataset, Dataset> holdout(const Dataset& d, std::size_t val_count,
                                    std::uint64_t seed) {
    if (val_count == 0 || val_count >= d.size()) {
        throw std::invalid_argument("holdout: val_count out of range");
    }
    Rng rng(seed);

    // Per-class index pools, shuffled with the seeded generator.
    std::vector<std::vector<std::size_t>> pools(d.class_set.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto it = std::lower_bound(d.class_set.begin(), d.class_set.end(),
                                         d.labels[i]);
        pools[static_cast<std::size_t>(it - d.class_set.begin())].push_back(i);
    }
    for (auto& p : pools) rng.shuffle(p);

    // Largest-remainder apportionment of val_count across classes.
    const double total = static_cast<double>(d.size());
    std::vector<std::size_t> quota(pools.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < pools.size(); ++c) {
        const double exact =
            static_cast<double>(val_count) * static_cast<double>(pools[c].size()) / total;
        quota[c] = static_cast<std::size_t>(exact);
        assigned += quota[c];
        remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                  if (a.first != b.first) return a.first > b.first;
                  return a.second < b.second;
              });
    for (std::size_t k = 0; assigned < val_count; ++k) {
        ++quota[remainders[k % remainders.size()].second];
        ++assigned;
    }

    std::vector<std::size_t> val_idx, train_idx;
    for (std::size_t c = 0; c < pools.size(); ++c) {
        if (quota[c] > pools[c].size()) {
            throw std::invalid_argument("holdout: class too small for quota");
        }
        for (std::size_t i = 0; i < pools[c].size(); ++i) {
            (i < quota[c] ? val_idx : train_idx).push_back(pools[c][i]);
        }
    }
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    auto take = [&](const std::vector<std::size_t>& idx) {
        Matrix f(idx.size(), d.feature_dim());
        std::vector<int> l(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::memcpy(f.row(i), d.features.row(idx[i]),
                        d.feature_dim() * sizeof(double));
            l[i] = d.labels[idx[i]];
        }
        return Dataset::from(std::move(f), std::move(l));
    };
    return {take(train_idx), take(val_idx)};
}

Dataset concat(const Dataset& a, const Dataset& b) {
    if (a.feature_dim() != b.feature_dim()) {
        throw std::invalid_argument("concat: feature dimensions differ");
    }
    Matrix f(a.size() + b.size(), a.feature_dim());
    std::vector<int> l;
    l.reserve(a.size() + b.size());
    std::memcpy(f.data.data(), a.features.data.data(),
                a.features.data.size() * sizeof(double));
    std::memcpy(f.data.data() + a.features.data.size(), b.features.data.data(),
                b.features.data.size() * sizeof(double));
    l.insert(l.end(), a.labels.begin(), a.labels.end());
    l.insert(l.end(), b.labels.begin(), b.labels.end());
    return Dataset::from(std::move(f), std::move(l));
}

} // namespace fusenet
