#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "fusenet/model_io.hpp"
#include "fusenet/rng.hpp"
#include "support/test_helpers.hpp"

using namespace fusenet;
namespace ft = fusenet::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fusenet-io-" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

TrainedModel random_model(Rng& rng) {
    TrainedModel m;
    m.network = ft::random_small_network(rng, LossKind::cross_entropy);
    TrainMeta meta;
    meta.hyper.seed = rng.next_u64();
    meta.train_accuracy = rng.uniform();
    meta.val_accuracy = rng.uniform();
    meta.epochs_run = 1 + rng.index(40);
    m.meta = meta;
    if (rng.uniform() < 0.7) {
        FisherDiag f = ParamTensors::zeros_like(m.network);
        for (Matrix& w : f.weights) {
            for (double& v : w.data) v = rng.uniform();
        }
        for (Vector& b : f.biases) {
            for (double& v : b) v = rng.uniform();
        }
        m.fisher = std::move(f);
    }
    return m;
}

} // namespace

TEST_SUITE_BEGIN("model_io");

TEST_CASE("base64 round-trips the classic test vectors") {
    auto enc = [](const std::string& s) {
        return base64_encode(std::vector<std::uint8_t>(s.begin(), s.end()));
    };
    CHECK(enc("") == "");
    CHECK(enc("f") == "Zg==");
    CHECK(enc("fo") == "Zm8=");
    CHECK(enc("foo") == "Zm9v");
    CHECK(enc("foob") == "Zm9vYg==");
    CHECK(enc("fooba") == "Zm9vYmE=");
    CHECK(enc("foobar") == "Zm9vYmFy");
    const auto back = base64_decode("Zm9vYmFy");
    CHECK(std::string(back.begin(), back.end()) == "foobar");
}

TEST_CASE("base64 rejects malformed text") {
    CHECK_THROWS_AS(base64_decode("abc"), std::runtime_error);
    CHECK_THROWS_AS(base64_decode("ab!?"), std::runtime_error);
    CHECK_THROWS_AS(base64_decode("=abc"), std::runtime_error);
    CHECK_THROWS_AS(base64_decode("a=bc"), std::runtime_error);
}

TEST_CASE("model files round-trip forward outputs to float32 precision") {
    TempDir tmp;
    Rng rng(4242);
    for (int trial = 0; trial < 100; ++trial) {
        const TrainedModel m = random_model(rng);
        const fs::path p = tmp.path / ("m" + std::to_string(trial) + ".json");
        save_model(m, p);
        const TrainedModel back = load_model(p);
        REQUIRE(back.network.depth() == m.network.depth());
        CHECK(back.network.class_labels == m.network.class_labels);
        CHECK(back.fisher.has_value() == m.fisher.has_value());

        for (int probe = 0; probe < 3; ++probe) {
            const Vector x = ft::random_input(rng, m.network.input_width());
            const Vector y0 = forward(m.network, x).output();
            const Vector y1 = forward(back.network, x).output();
            for (std::size_t i = 0; i < y0.size(); ++i) {
                CHECK(ft::rel_err(y0[i], y1[i], 1e-3) <= 1e-6);
            }
        }
    }
}

TEST_CASE("save produces byte-identical files for identical models") {
    TempDir tmp;
    Rng rng(77);
    const TrainedModel m = random_model(rng);
    save_model(m, tmp.path / "a.json");
    save_model(m, tmp.path / "b.json");
    std::ifstream fa(tmp.path / "a.json", std::ios::binary);
    std::ifstream fb(tmp.path / "b.json", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)),
                         std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(fb)),
                         std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
}

TEST_CASE("meta and fisher survive the round trip") {
    TempDir tmp;
    Rng rng(88);
    TrainedModel m = random_model(rng);
    if (!m.fisher) {
        FisherDiag f = ParamTensors::zeros_like(m.network);
        m.fisher = std::move(f);
    }
    m.meta->hyper.loss_kind = LossKind::square;
    m.meta->hyper.batch_size = 123;
    m.meta->warnings = {"w1", "w2"};
    save_model(m, tmp.path / "m.json");
    const TrainedModel back = load_model(tmp.path / "m.json");
    REQUIRE(back.meta);
    CHECK(back.meta->hyper.loss_kind == LossKind::square);
    CHECK(back.meta->hyper.batch_size == 123);
    CHECK(back.meta->warnings == std::vector<std::string>{"w1", "w2"});
    REQUIRE(back.fisher);
    CHECK(back.fisher->weights[0].rows == m.fisher->weights[0].rows);
}

TEST_CASE("loading rejects unknown versions and mismatched payloads") {
    TempDir tmp;
    Rng rng(99);
    const TrainedModel m = random_model(rng);
    save_model(m, tmp.path / "m.json");

    nlohmann::json j;
    {
        std::ifstream in(tmp.path / "m.json");
        in >> j;
    }
    nlohmann::json bad_version = j;
    bad_version["format_version"] = 9;
    CHECK_THROWS_WITH_AS(model_from_json(bad_version),
                         doctest::Contains("format_version"), std::runtime_error);

    nlohmann::json bad_payload = j;
    bad_payload["layers"][0]["weights"] = "AAAA"; // 3 bytes, not a float array
    CHECK_THROWS_AS(model_from_json(bad_payload), std::runtime_error);

    CHECK_THROWS_AS(load_model(tmp.path / "missing.json"), std::runtime_error);

    std::ofstream(tmp.path / "junk.json") << "{ not json";
    CHECK_THROWS_AS(load_model(tmp.path / "junk.json"), std::runtime_error);
}

TEST_CASE("a failed save leaves no partial file behind") {
    TempDir tmp;
    Rng rng(111);
    const TrainedModel m = random_model(rng);
    const fs::path nested = tmp.path / "no-such-dir" / "m.json";
    CHECK_THROWS_AS(save_model(m, nested), std::exception);
    CHECK(!fs::exists(nested));
    CHECK(!fs::exists(tmp.path / "no-such-dir"));
}

TEST_SUITE_END();
