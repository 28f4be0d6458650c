#include <doctest.h>

#include <set>

#include "sparsereg/error.hpp"
#include "sparsereg/regressor.hpp"
#include "sparsereg/selfcheck.hpp"
#include "test_util.hpp"

using namespace sparsereg;

namespace {

RegressorConfig small_config() {
  RegressorConfig c = tiny_network_config();
  c.epochs = 2;
  c.batch_size = 8;
  c.seed = 3;
  return c;
}

const PairSet& small_set() {
  static const PairSet set = [] {
    PairSetConfig cfg;
    cfg.identity_pool = 10;
    return generate_pair_set(30, Regime::Standard, 21, cfg);
  }();
  return set;
}

}  // namespace

TEST_SUITE("regressor") {
  TEST_CASE("centering round trip") {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const RigidTransform t{Vec3(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9)),
                             testutil::random_rotation(rng)};
      const Vec3 cs(rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-30, 30));
      const Vec3 ct(rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-30, 30));
      const RigidTransform c = center_transform(t, cs, ct);
      // The centered transform maps the source centroid offset onto the target's.
      const Vec3 p(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50));
      CHECK((c.apply(p - cs) - (t.apply(p) - ct)).norm() < 1e-9);
      const RigidTransform back = uncenter_transform(c, cs, ct);
      CHECK((back.t - t.t).norm() < 1e-9);
      CHECK(back.q == t.q);
    }
  }

  TEST_CASE("register_twice composes its stages") {
    RegressorConfig c = tiny_network_config();
    const Regressor model{c, init_params(c, 2)};
    const auto& p = small_set().pairs[0];
    const TwiceResult r = register_twice(model, p.source, p.target);
    const RigidTransform expect = compose(r.second, r.first);
    CHECK(r.combined.q == expect.q);
    CHECK(r.combined.t == expect.t);
    const RigidTransform once = predict(model, p.source, p.target);
    CHECK(r.first.q == once.q);
  }

  TEST_CASE("encoded input has 8 channels at the network resolution") {
    const RegressorConfig c;
    const auto& p = small_set().pairs[1];
    const EncodedPair e = encode_pair(p.source, p.target, c);
    CHECK(e.input.rows() == 8);
    CHECK(e.input.cols() == 32 * 32);
    CHECK((e.source_centroid - centroid(p.source)).norm() < 1e-9);
    // Mask channels are 0 or 1.
    for (int ch : {3, 7}) {
      for (Eigen::Index k = 0; k < e.input.cols(); ++k) {
        const double m = e.input(ch, k);
        CHECK((m == 0.0 || m == 1.0));
      }
    }
  }

  TEST_CASE("validation split is by identity") {
    const auto held = validation_identities(small_set(), 3);
    CHECK(held.size() == 1);
    std::set<std::string> all;
    for (const auto& p : small_set().pairs) all.insert(p.identity);
    CHECK(all.size() == 10);
    CHECK(all.count(held[0]) == 1);
    PairSet single;
    single.pairs.push_back(small_set().pairs[0]);
    CHECK_THROWS_AS(validation_identities(single, 3), Error);
  }

  TEST_CASE("training is bit-reproducible") {
    const TrainResult a = train(small_config(), small_set());
    const TrainResult b = train(small_config(), small_set(), {nullptr, 0, Exec::Serial, {}});
    CHECK(a.model.params.values == b.model.params.values);
    REQUIRE(a.report.epochs.size() == 2);
    for (std::size_t e = 0; e < 2; ++e) {
      CHECK(a.report.epochs[e].mean_loss == b.report.epochs[e].mean_loss);
      CHECK(a.report.epochs[e].val_mean_theta == b.report.epochs[e].val_mean_theta);
    }
    CHECK(a.report.loss_variant == LossVariant::QuatL2);
    CHECK(a.report.validation_pairs == 3);
    CHECK(a.report.train_examples == 2 * 27);
  }

  TEST_CASE("resuming continues the same trajectory") {
    RegressorConfig one = small_config();
    one.epochs = 1;
    const TrainResult first = train(one, small_set());
    TrainOptions resume;
    resume.initial = &first.model.params;
    resume.start_epoch = 1;
    const TrainResult rest = train(small_config(), small_set(), resume);
    REQUIRE(rest.report.epochs.size() == 1);
    CHECK(rest.report.epochs[0].epoch == 2);
  }

  TEST_CASE("learning rate schedule") {
    RegressorConfig c;
    c.epochs = 40;
    CHECK(epoch_learning_rate(c, 1) == doctest::Approx(0.01));
    CHECK(epoch_learning_rate(c, 40) == doctest::Approx(0.0001));
    for (int e = 2; e <= 40; ++e) CHECK(epoch_learning_rate(c, e) < epoch_learning_rate(c, e - 1));
    c.lr_min_fraction = 1.0;
    CHECK(epoch_learning_rate(c, 17) == 0.01);
  }

  TEST_CASE("empty data") {
    CHECK_THROWS_AS(train(small_config(), PairSet{}), Error);
  }
}
