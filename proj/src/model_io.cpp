#include "fusenet/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "fusenet/fisher.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files assume a little-endian host");

namespace fusenet {

namespace {

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::string encode_floats(const std::vector<double>& values) {
    std::vector<std::uint8_t> bytes(values.size() * sizeof(float));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float f = static_cast<float>(values[i]);
        std::memcpy(bytes.data() + i * sizeof(float), &f, sizeof(float));
    }
    return base64_encode(bytes);
}

std::vector<double> decode_floats(const std::string& text, std::size_t expected) {
    const std::vector<std::uint8_t> bytes = base64_decode(text);
    if (bytes.size() != expected * sizeof(float)) {
        throw std::runtime_error("model file: payload length does not match shape");
    }
    std::vector<double> values(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        float f = 0.0f;
        std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof(float));
        values[i] = static_cast<double>(f);
    }
    return values;
}

nlohmann::json hyper_to_json(const TrainHyper& h) {
    return {{"learning_rate", h.learning_rate}, {"batch_size", h.batch_size},
            {"max_epochs", h.max_epochs},       {"patience", h.patience},
            {"loss", to_string(h.loss_kind)},   {"l2_coeff", h.l2_coeff},
            {"seed", h.seed}};
}

TrainHyper hyper_from_json(const nlohmann::json& j) {
    TrainHyper h;
    h.learning_rate = j.at("learning_rate").get<double>();
    h.batch_size = j.at("batch_size").get<std::size_t>();
    h.max_epochs = j.at("max_epochs").get<std::size_t>();
    h.patience = j.at("patience").get<std::size_t>();
    h.loss_kind = loss_kind_from_string(j.at("loss").get<std::string>());
    h.l2_coeff = j.at("l2_coeff").get<double>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

} // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t v = (std::uint32_t(bytes[i]) << 16) |
                                (std::uint32_t(bytes[i + 1]) << 8) |
                                std::uint32_t(bytes[i + 2]);
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back(kB64Alphabet[v & 63]);
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t v = std::uint32_t(bytes[i]) << 16;
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rest == 2) {
        const std::uint32_t v =
            (std::uint32_t(bytes[i]) << 16) | (std::uint32_t(bytes[i + 1]) << 8);
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw std::runtime_error("base64: length must be a multiple of 4");
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=') {
                if (i + 4 != text.size() || k < 2) {
                    throw std::runtime_error("base64: misplaced padding");
                }
                vals[k] = 0;
                ++pad;
            } else {
                if (pad > 0) throw std::runtime_error("base64: data after padding");
                vals[k] = b64_value(c);
                if (vals[k] < 0) {
                    throw std::runtime_error("base64: invalid character");
                }
            }
        }
        const std::uint32_t v = (std::uint32_t(vals[0]) << 18) |
                                (std::uint32_t(vals[1]) << 12) |
                                (std::uint32_t(vals[2]) << 6) |
                                std::uint32_t(vals[3]);
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 255));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 255));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 255));
    }
    return out;
}

nlohmann::json model_to_json(const TrainedModel& model) {
    model.network.validate();
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["input_width"] = model.network.input_width();
    j["class_labels"] = model.network.class_labels;

    nlohmann::json layers = nlohmann::json::array();
    for (const DenseLayer& lay : model.network.layers) {
        layers.push_back({{"width", lay.out_width()},
                          {"activation", to_string(lay.activation)},
                          {"weights", encode_floats(lay.weights.data)},
                          {"bias", encode_floats(lay.bias)}});
    }
    j["layers"] = std::move(layers);

    if (model.fisher) {
        validate_fisher(*model.fisher, model.network);
        nlohmann::json fisher = nlohmann::json::array();
        for (std::size_t l = 0; l < model.fisher->weights.size(); ++l) {
            fisher.push_back({{"weights", encode_floats(model.fisher->weights[l].data)},
                              {"bias", encode_floats(model.fisher->biases[l])}});
        }
        j["fisher"] = std::move(fisher);
    }

    if (model.meta) {
        j["meta"] = {{"hyper", hyper_to_json(model.meta->hyper)},
                     {"seed", model.meta->seed},
                     {"train_accuracy", model.meta->train_accuracy},
                     {"val_accuracy", model.meta->val_accuracy},
                     {"epochs_run", model.meta->epochs_run},
                     {"warnings", model.meta->warnings}};
    }
    return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
        throw std::runtime_error("model file: unrecognized format_version " +
                                 std::to_string(version));
    }
    TrainedModel model;
    model.network.class_labels = j.at("class_labels").get<std::vector<int>>();

    std::size_t in_w = j.at("input_width").get<std::size_t>();
    for (const auto& jl : j.at("layers")) {
        DenseLayer lay;
        const std::size_t width = jl.at("width").get<std::size_t>();
        lay.activation = activation_from_string(jl.at("activation").get<std::string>());
        lay.weights = Matrix(width, in_w);
        lay.weights.data = decode_floats(jl.at("weights").get<std::string>(),
                                         width * in_w);
        lay.bias = decode_floats(jl.at("bias").get<std::string>(), width);
        model.network.layers.push_back(std::move(lay));
        in_w = width;
    }
    model.network.validate();

    if (j.contains("fisher")) {
        FisherDiag f = ParamTensors::zeros_like(model.network);
        const auto& jf = j.at("fisher");
        if (jf.size() != model.network.depth()) {
            throw std::runtime_error("model file: fisher layer count mismatch");
        }
        for (std::size_t l = 0; l < f.weights.size(); ++l) {
            f.weights[l].data = decode_floats(jf[l].at("weights").get<std::string>(),
                                              f.weights[l].data.size());
            f.biases[l] = decode_floats(jf[l].at("bias").get<std::string>(),
                                        f.biases[l].size());
        }
        validate_fisher(f, model.network);
        model.fisher = std::move(f);
    }

    if (j.contains("meta")) {
        const auto& jm = j.at("meta");
        TrainMeta meta;
        meta.hyper = hyper_from_json(jm.at("hyper"));
        meta.seed = jm.at("seed").get<std::uint64_t>();
        meta.train_accuracy = jm.at("train_accuracy").get<double>();
        meta.val_accuracy = jm.at("val_accuracy").get<double>();
        meta.epochs_run = jm.at("epochs_run").get<std::size_t>();
        meta.warnings = jm.at("warnings").get<std::vector<std::string>>();
        model.meta = std::move(meta);
    }
    return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    const nlohmann::json j = model_to_json(model);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write model file: " + tmp.string());
        }
        out << j.dump(2) << "\n";
        if (!out) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open model file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file " + path.string() +
                                 " is not valid JSON: " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file " + path.string() +
                                 " has an invalid schema: " + e.what());
    }
}

} // namespace fusenet
