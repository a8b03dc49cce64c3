#include <doctest.h>

#include <filesystem>

#include "omicscl/encoder.hpp"
#include "support.hpp"

using namespace omicscl;
using testsupport::random_matrix;

namespace {

EncoderParams small_encoder(std::uint64_t seed, std::size_t in = 5, std::size_t hidden = 4) {
    EncoderConfig cfg;
    cfg.input_dim = in;
    cfg.hidden_dim = hidden;
    cfg.proj_dim = 3;
    Rng rng(seed);
    return init_encoder(cfg, rng);
}

}  // namespace

TEST_CASE("initialization shapes and identity batch norm") {
    const auto p = small_encoder(1);
    CHECK(p.w1.rows() == 5);
    CHECK(p.w1.cols() == 4);
    CHECK(p.w2.rows() == 4);
    CHECK(p.w2.cols() == 3);
    CHECK(p.gamma == Matrix(1, 4, 1.0));
    CHECK(p.beta == Matrix(1, 4, 0.0));
    CHECK(p.running_var == std::vector<double>(4, 1.0));
    const double limit = std::sqrt(6.0 / 9.0);
    for (double w : p.w1.values()) CHECK(std::abs(w) <= limit);
}

TEST_CASE("embeddings are unit rows") {
    // Wide enough that no row has every hidden unit switched off.
    auto p = small_encoder(2, 5, 64);
    Rng rng(3);
    const Matrix x = random_matrix(rng, 8, 5);
    for (const Matrix& z : {forward(p, x, Mode::Train), embed(p, x)})
        for (std::size_t r = 0; r < z.rows(); ++r) {
            double n = 0;
            for (double v : z.row(r)) n += v * v;
            CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("train mode updates running statistics, eval mode is pure") {
    auto p = small_encoder(4);
    Rng rng(5);
    const Matrix x = random_matrix(rng, 8, 5, 2.0);
    const auto before = p.running_mean;
    const Matrix e1 = embed(p, x);
    CHECK(p.running_mean == before);
    forward(p, x, Mode::Train);
    CHECK(p.running_mean != before);
    CHECK(embed(p, x) != e1);
}

TEST_CASE("forward pass gradients against central differences") {
    Rng rng(6);
    const auto p = small_encoder(7);
    const Matrix x = random_matrix(rng, 6, 5);
    const Matrix w = random_matrix(rng, 6, 3);
    for (Mode mode : {Mode::Train, Mode::Eval}) {
        std::vector<Matrix> in;
        for (const Matrix* m : trainable(p)) in.push_back(*m);
        in.push_back(x);
        const auto g = testsupport::check_gradients(
            [&](ad::Tape& t, std::span<const ad::Var> v) {
                EncoderLeaves leaves;
                for (std::size_t i = 0; i < 6; ++i) leaves.vars[i] = v[i];
                const ad::Var z = forward(t, leaves, p, v[6], mode);
                return ad::sum(t, ad::mul(t, z, t.constant(w)));
            },
            in);
        INFO(g.where);
        CHECK(g.ok);
    }
}

TEST_CASE("checkpoint round-trips bitwise") {
    Model m;
    m.modalities = {"a", "b"};
    m.encoders = {small_encoder(8, 5), small_encoder(9, 2)};
    Rng rng(10);
    forward(m.encoders[0], random_matrix(rng, 4, 5), Mode::Train);
    const auto path = std::filesystem::temp_directory_path() / "omicscl_test_ckpt.json";
    save_checkpoint(path, m, nlohmann::json{{"seed", 1}});
    const Model r = load_checkpoint(path);
    std::filesystem::remove(path);
    REQUIRE(r.modalities == m.modalities);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto a = trainable(m.encoders[i]);
        const auto b = trainable(r.encoders[i]);
        for (std::size_t k = 0; k < 6; ++k) CHECK(*a[k] == *b[k]);
        CHECK(m.encoders[i].running_mean == r.encoders[i].running_mean);
        CHECK(m.encoders[i].running_var == r.encoders[i].running_var);
    }
}

TEST_CASE("embedding dimension mismatch is an error") {
    const auto p = small_encoder(11);
    CHECK_THROWS_AS(embed(p, Matrix(3, 4)), DimensionError);
}
