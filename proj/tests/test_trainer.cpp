#include <doctest.h>

#include <cmath>

#include "omicscl/dataio.hpp"
#include "omicscl/trainer.hpp"
#include "support.hpp"

using namespace omicscl;

namespace {

struct Fixture {
    train::SplitData train_split, val_split;
    std::vector<std::string> names{"a", "b", "c"};
    std::vector<std::size_t> dims{20, 15, 10};
    EncoderConfig enc;

    explicit Fixture(std::uint64_t seed, double noise = 1.0) {
        data::SyntheticSpec spec;
        spec.n_patients = 150;
        spec.modality_names = names;
        spec.feature_dims = dims;
        spec.noise = noise;
        spec.seed = seed;
        const auto c = data::generate_synthetic(spec);
        data::SplitSpec ss;
        ss.seed = seed;
        const auto idx = data::split(c.size(), ss);
        const auto tr = c.subset(idx.train), va = c.subset(idx.val);
        const auto ts = data::normalize_times(tr.time, tr.patient_ids);
        for (std::size_t v = 0; v < 3; ++v) {
            const auto z = data::zscore_fit(tr.views[v], tr.patient_ids);
            train_split.views.push_back(z.apply(tr.views[v]));
            val_split.views.push_back(z.apply(va.views[v]));
        }
        train_split.surv = {ts.apply(tr.time), tr.event};
        val_split.surv = {ts.apply(va.time), va.event};
        enc.hidden_dim = 32;
        enc.proj_dim = 16;
    }

    Model model(std::uint64_t seed) const { return train::init_model(names, dims, enc, seed); }
};

train::TrainConfig quick(std::uint64_t seed, int max_epochs = 30, int patience = 10) {
    train::TrainConfig cfg;
    cfg.seed = seed;
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    cfg.batch_size = 32;
    return cfg;
}

}  // namespace

TEST_CASE("adam: zero gradient without decay leaves parameters alone") {
    Matrix p{{1.5, -2.0}};
    std::vector<Matrix*> params{&p};
    const std::vector<Matrix> grads{Matrix(1, 2, 0.0)};
    train::AdamState st;
    train::adam_step(params, grads, st, 0.1, 0.0);
    CHECK(p == Matrix{{1.5, -2.0}});
}

TEST_CASE("adam: first step on x^2 from 1 with lr 0.1") {
    Matrix x = Matrix::scalar(1.0);
    std::vector<Matrix*> params{&x};
    train::AdamState st;
    train::adam_step(params, std::vector<Matrix>{Matrix::scalar(2.0)}, st, 0.1, 0.0);
    CHECK(x.item() == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(st.step == 1);
}

TEST_CASE("adam: decoupled weight decay applies before the delta") {
    Matrix x = Matrix::scalar(2.0);
    std::vector<Matrix*> params{&x};
    train::AdamState st;
    train::adam_step(params, std::vector<Matrix>{Matrix::scalar(0.0)}, st, 0.1, 0.5);
    CHECK(x.item() == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
}

TEST_CASE("adam converges on a convex quadratic") {
    Matrix x{{3.0, -1.0}};
    std::vector<Matrix*> params{&x};
    train::AdamState st;
    for (int i = 0; i < 200; ++i) train::adam_step(params, std::vector<Matrix>{2.0 * x}, st, 0.1, 0.0);
    CHECK(std::abs(x(0, 0)) < 1e-2);
    CHECK(std::abs(x(0, 1)) < 1e-2);
    CHECK_THROWS_AS(train::adam_step(params, std::vector<Matrix>{Matrix(2, 2)}, st, 0.1, 0.0), DimensionError);
}

TEST_CASE("triangular learning rate") {
    train::TrainConfig cfg;
    CHECK(train::cyclical_lr(0, cfg) == cfg.lr_min);
    CHECK(train::cyclical_lr(10, cfg) == doctest::Approx(cfg.lr_max));
    CHECK(train::cyclical_lr(20, cfg) == cfg.lr_min);
    CHECK(train::cyclical_lr(5, cfg) == doctest::Approx(0.5 * (cfg.lr_min + cfg.lr_max)));
    CHECK(train::cyclical_lr(47, cfg) == train::cyclical_lr(7, cfg));
}

TEST_CASE("training is deterministic and keeps the best epoch") {
    const Fixture f(1);
    const auto cfg = quick(3);
    const auto a = train::train(f.model(3), f.train_split, f.val_split, {}, cfg, {});
    const auto b = train::train(f.model(3), f.train_split, f.val_split, {}, cfg, {});
    REQUIRE(a.report.epochs.size() == b.report.epochs.size());
    for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
        CHECK(a.report.epochs[i].train_loss == b.report.epochs[i].train_loss);
        CHECK(a.report.epochs[i].val_c_index == b.report.epochs[i].val_c_index);
    }
    CHECK(*trainable(a.model.encoders[0])[0] == *trainable(b.model.encoders[0])[0]);

    double best = 0.0;
    for (const auto& e : a.report.epochs) best = std::max(best, e.val_c_index);
    CHECK(a.report.best_val_c_index == best);
    CHECK(a.report.epochs[static_cast<std::size_t>(a.report.best_epoch)].val_c_index == best);
    // The returned parameters reproduce the recorded best validation score.
    CHECK(train::validation_c_index(a.model, f.val_split, cfg.k_for_validation, {}, cfg.seed) == best);
}

TEST_CASE("alpha 0 trains on NT-Xent alone") {
    const Fixture f(2);
    losses::LossConfig loss;
    loss.alpha = 0.0;
    const auto r = train::train(f.model(4), f.train_split, f.val_split, loss, quick(4, 5, 3), {});
    for (const auto& e : r.report.epochs) CHECK(e.train_loss == e.train_ntxent);
}

TEST_CASE("early stopping when nothing can improve") {
    Fixture f(3);
    for (auto& v : f.train_split.views) v = Matrix(v.rows(), v.cols(), 1.0);
    for (auto& v : f.val_split.views) v = Matrix(v.rows(), v.cols(), 1.0);
    const auto r = train::train(f.model(5), f.train_split, f.val_split, {}, quick(5, 50, 1), {});
    CHECK(r.report.early_stopped);
    CHECK(r.report.epochs.size() <= 3);
    CHECK(r.report.epochs.back().epoch <= 2);
}

TEST_CASE("non-finite inputs abort with a numerical error") {
    Fixture f(4);
    f.train_split.views[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train::train(f.model(6), f.train_split, f.val_split, {}, quick(6), {}), NumericalError);
}

TEST_CASE("cycle-averaged training loss does not rise over the first three cycles") {
    const Fixture f(5);
    auto cfg = quick(7, 60, 59);
    const auto r = train::train(f.model(7), f.train_split, f.val_split, {}, cfg, {});
    REQUIRE(r.report.epochs.size() == 60);
    double cycle[3] = {0, 0, 0};
    for (const auto& e : r.report.epochs) cycle[e.epoch / 20] += e.train_loss / 20.0;
    CHECK(cycle[1] <= cycle[0] * 1.05);
    CHECK(cycle[2] <= cycle[1] * 1.05);
}

TEST_CASE("config validation") {
    train::TrainConfig cfg;
    cfg.batch_size = 1;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.lr_min = 1e-2;
    CHECK_THROWS(cfg.validate());
}
