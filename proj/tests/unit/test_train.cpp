#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oppi/error.hpp"
#include "oppi/model/encoder.hpp"
#include "oppi/train/augment.hpp"
#include "oppi/train/losses.hpp"
#include "oppi/train/masking.hpp"
#include "oppi/train/optim.hpp"
#include "oppi/train/synthetic.hpp"
#include "oppi/train/trainer.hpp"
#include "test_support.hpp"

using namespace oppi;
using num::Parameter;
using num::Tensor;

namespace {

Tensor<double> scalar(double v) {
  Tensor<double> t({1});
  t[0] = v;
  return t;
}

// Records parameter values at the moment step() is called, then applies SGD.
class RecordingSgd final : public train::Optimizer<double> {
 public:
  explicit RecordingSgd(double lr) : inner_(lr) {}
  void step(std::vector<Parameter<double>>& params) override {
    seen.clear();
    for (const auto& p : params) seen.push_back(p.value);
    inner_.step(params);
  }
  std::vector<Tensor<double>> seen;

 private:
  train::Sgd<double> inner_;
};

// f(w) = sum_i c_i * w_i^2 / 2 + sin(w_0); grads added into the parameters.
train::LossClosure nonlinear_loss(std::vector<Parameter<double>>& params) {
  return [&params] {
    double loss = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params[i].value.data();
      auto g = params[i].grad.data();
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double c = 1.0 + 0.5 * static_cast<double>(i + k);
        loss += c * w[k] * w[k] / 2 + (k == 0 ? std::sin(w[k]) : 0.0);
        g[k] += c * w[k] + (k == 0 ? std::cos(w[k]) : 0.0);
      }
    }
    return loss;
  };
}

train::TrainConfig small_config(std::uint64_t seed) {
  train::TrainConfig c;
  c.seed = seed;
  c.mlm_epochs = 3;
  c.ppi_epochs = 3;
  return c;
}

}  // namespace

TEST_CASE("masked counts round half up") {
  CHECK(train::round_count(0.15, 100) == 15);
  CHECK(train::round_count(0.15, 30) == 5);
  CHECK(train::round_count(0.15, 10) == 2);
  CHECK(train::round_count(0.20, 10) == 2);
  CHECK(train::masked_count(3, 0.15) == 1);
  CHECK(train::masked_count(6, 0.15) == 1);
  CHECK(train::masked_count(7, 0.15) == 1);
  CHECK(train::masked_count(1273, 0.15) == 191);
}

TEST_CASE("mask_sequence selects exactly 15 of 100 residues") {
  num::CounterRng rng(1);
  const auto protein = test::random_protein(rng, 100);
  const auto tokens = seq::tokenize(protein, 120);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = train::mask_sequence(tokens, {}, rng);
    std::size_t selected = 0;
    for (std::size_t i = 0; i < tokens.max_len(); ++i) {
      if (m.labels[i] != train::kIgnoreLabel) {
        ++selected;
        CHECK(m.labels[i] == tokens[i]);
      } else {
        CHECK(m.tokens[i] == tokens[i]);
      }
    }
    CHECK(selected == 15);
  }
}

TEST_CASE("specials are never masked and the MASK share is 0.9") {
  num::CounterRng rng(2);
  std::size_t selections = 0, masks = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t len = 1 + rng.below(40);
    const auto tokens = seq::tokenize(test::random_protein(rng, len), len + 3 + rng.below(5));
    const auto m = train::mask_sequence(tokens, {}, rng);
    for (std::size_t i = 0; i < tokens.max_len(); ++i) {
      if (!seq::TokenVocab::is_residue(tokens[i])) {
        CHECK(m.tokens[i] == tokens[i]);
        CHECK(m.labels[i] == train::kIgnoreLabel);
      } else if (m.labels[i] != train::kIgnoreLabel) {
        ++selections;
        if (m.tokens[i] == seq::TokenVocab::kMask) {
          ++masks;
        } else {
          CHECK(seq::TokenVocab::is_residue(m.tokens[i]));
        }
      }
    }
  }
  CHECK(selections >= 10000);
  CHECK(std::abs(static_cast<double>(masks) / static_cast<double>(selections) - 0.9) <= 0.02);
}

TEST_CASE("masking policy validation") {
  train::MaskingPolicy p;
  CHECK_NOTHROW(p.validate());
  p.mask_token_prob = 0.8;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("augmentations") {
  num::CounterRng rng(3);
  const auto mkv = seq::ProteinSequence::from_string("MKV", "x");
  const auto reversed = train::apply_augmentation(mkv, train::Augmentation::kReverse, 0.2, rng);
  CHECK(reversed.to_string() == "VKM");
  CHECK(reversed.id() == "x");

  const auto no_alanine = seq::ProteinSequence::from_string("MKVLWYCDEF");
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = train::apply_augmentation(no_alanine, train::Augmentation::kAlanineSub, 0.2, rng).to_string();
    CHECK(std::count(s.begin(), s.end(), 'A') == 2);
  }

  const auto isoleucines = seq::ProteinSequence::from_string("IIIIIIIIII");
  const auto dict = train::apply_augmentation(isoleucines, train::Augmentation::kDictSub, 0.2, rng).to_string();
  CHECK(std::count(dict.begin(), dict.end(), 'V') == 2);
  CHECK(std::count(dict.begin(), dict.end(), 'I') == 8);

  train::AugmentationPolicy policy;
  CHECK(train::augment(no_alanine, policy, rng) == no_alanine);
  policy.technique = train::Augmentation::kReverse;
  int changed = 0;
  for (int trial = 0; trial < 4000; ++trial) changed += train::augment(no_alanine, policy, rng) == no_alanine ? 0 : 1;
  CHECK(std::abs(changed / 4000.0 - 0.25) < 0.03);

  CHECK(train::parse_augmentation("dict") == train::Augmentation::kDictSub);
  CHECK(train::augmentation_name(train::Augmentation::kAlanineSub) == "alanine");
  CHECK_THROWS_AS(train::parse_augmentation("shuffle"), ConfigError);
}

TEST_CASE("losses at analytic points") {
  num::Tape<double> tape(false);
  const std::vector<std::int32_t> labels = {-1, 7, 3, -1};
  auto uniform = train::mlm_loss(tape.constant(Tensor<double>::matrix(4, 25)), labels);
  CHECK(uniform.value()[0] == doctest::Approx(std::log(25.0)).epsilon(1e-12));

  auto peaked = Tensor<double>::matrix(4, 25);
  peaked.at(1, 7) = 60;
  peaked.at(2, 3) = 60;
  CHECK(train::mlm_loss(tape.constant(peaked), labels).value()[0] < 1e-20);
  CHECK_THROWS(train::mlm_loss(tape.constant(peaked), std::vector<std::int32_t>(4, -1)));

  const double p[] = {1.0, 0.0, 0.5, 0.5};
  const int y[] = {1, 0, 1, 0};
  CHECK(train::ppi_loss(std::span(p, 2), std::span(y, 2)) == 0.0);
  CHECK(train::ppi_loss(std::span(p + 2, 2), std::span(y + 2, 2)) == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
}

TEST_CASE("loss gradients match finite differences") {
  num::CounterRng rng(4);
  const std::vector<std::int32_t> labels = {3, -1, 0, 24, -1};
  const std::vector<int> y = {1, 0, 1};
  for (int seed = 0; seed < 20; ++seed) {
    CHECK(test::gradcheck_op([&](auto&, const auto& in) { return train::mlm_loss(in[0], labels); },
                             {test::random_tensor(rng, {5, 25}, 2.0)}, rng) < 1e-4);
    auto probs = test::random_tensor(rng, {3, 1});
    for (auto& v : probs.data()) v = 0.1 + 0.8 / (1.0 + std::exp(-v));
    CHECK(test::gradcheck_op([&](auto&, const auto& in) { return train::ppi_loss(in[0], std::span<const int>(y)); },
                             {probs}, rng) < 1e-4);
  }
}

TEST_CASE("adam first step and zero gradient") {
  std::vector<Parameter<double>> params;
  params.emplace_back("w", scalar(0.5));
  params[0].grad[0] = 1.0;
  train::AdamState<double> state;
  train::adam_step(params, state);
  CHECK(std::abs(params[0].value[0] - (0.5 - 0.001 / (1.0 + 1e-7))) < 1e-15);
  CHECK(state.t == 1);

  const double before = params[0].value[0];
  const double m = state.m[0][0], v = state.v[0][0];
  params[0].grad[0] = 0.0;
  train::adam_step(params, state);
  CHECK(state.m[0][0] == doctest::Approx(0.9 * m));
  CHECK(state.v[0][0] == doctest::Approx(0.999 * v));
  CHECK(params[0].value[0] < before);  // momentum still carries the earlier gradient

  std::vector<Parameter<double>> fresh;
  fresh.emplace_back("w", scalar(0.5));
  train::AdamState<double> fresh_state;
  train::adam_step(fresh, fresh_state);
  CHECK(fresh[0].value[0] == 0.5);
}

TEST_CASE("adam runs are bitwise reproducible") {
  const auto run = [] {
    num::CounterRng rng(5);
    std::vector<Parameter<double>> params;
    params.emplace_back("a", test::random_tensor(rng, {3, 4}));
    params.emplace_back("b", test::random_tensor(rng, {4}));
    train::Adam<double> adam;
    const auto closure = nonlinear_loss(params);
    for (int i = 0; i < 25; ++i) train::plain_step(params, closure, adam);
    return params;
  };
  const auto a = run(), b = run();
  CHECK(a[0].value == b[0].value);
  CHECK(a[1].value == b[1].value);
}

TEST_CASE("sam hand trace on a scalar quadratic") {
  std::vector<Parameter<double>> params;
  params.emplace_back("w", scalar(1.0));
  const train::LossClosure half_square = [&] {
    const double w = params[0].value[0];
    params[0].grad[0] += w;
    return w * w / 2;
  };
  train::Sgd<double> sgd(0.1);
  const auto stats = train::sam_step(params, half_square, {}, sgd);
  CHECK(std::abs(params[0].value[0] - 0.895) < 1e-6);
  CHECK(stats.loss == 0.5);
  CHECK(stats.grad_norm == 1.0);
  CHECK(std::abs(stats.perturbation_norm - 0.05) < 1e-12);
}

TEST_CASE("sam restores the weights bitwise before the optimizer step") {
  num::CounterRng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Parameter<double>> params;
    params.emplace_back("a", test::random_tensor(rng, {3, 5}));
    params.emplace_back("b", test::random_tensor(rng, {7}));
    const auto before = params;
    const auto base = nonlinear_loss(params);

    std::vector<Tensor<double>> perturbed;
    int calls = 0;
    const train::LossClosure closure = [&] {
      if (calls++ == 1) {
        for (const auto& p : params) perturbed.push_back(p.value);
      }
      return base();
    };
    RecordingSgd sgd(0.01);
    const auto stats = train::sam_step(params, closure, {}, sgd);
    CHECK(calls == 2);
    for (std::size_t i = 0; i < params.size(); ++i) CHECK(sgd.seen[i] == before[i].value);

    // Independent norms: |g| from the closure at the original point, |w' - w| from the
    // weights the second pass saw.
    auto probe = before;
    for (auto& p : probe) p.zero_grad();
    nonlinear_loss(probe)();
    double g_sq = 0, d_sq = 0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
      for (std::size_t k = 0; k < probe[i].grad.size(); ++k) {
        g_sq += probe[i].grad[k] * probe[i].grad[k];
        const double d = perturbed[i][k] - before[i].value[k];
        d_sq += d * d;
      }
    }
    const double g = std::sqrt(g_sq);
    const double expected = 0.05 * g / (g + 1e-12);
    CHECK(std::abs(stats.grad_norm - g) <= 1e-12 * g);
    CHECK(std::abs(std::sqrt(d_sq) - expected) <= 1e-9);
    CHECK(std::abs(stats.perturbation_norm - expected) <= 1e-15);
    CHECK(stats.perturbation_norm <= 0.05);
  }
}

TEST_CASE("sam with a vanishing gradient") {
  std::vector<Parameter<double>> params;
  params.emplace_back("w", scalar(0.0));
  const train::LossClosure flat_at_zero = [&] {
    const double w = params[0].value[0];
    params[0].grad[0] += w;
    return w * w / 2;
  };
  train::Sgd<double> sgd(0.1);
  const auto stats = train::sam_step(params, flat_at_zero, {}, sgd);
  CHECK(stats.perturbation_norm == 0.0);
  CHECK(params[0].value[0] == 0.0);
}

TEST_CASE("pretraining is deterministic and logs one line per epoch") {
  const auto corpus = train::synthetic_corpus(8, 1);
  const auto run = [&](std::vector<std::string>& lines) {
    model::EncoderWeights<float> w(model::EncoderConfig::toy(), 9);
    auto cfg = small_config(11);
    cfg.augmentation.technique = train::Augmentation::kDictSub;
    cfg.sam_on_mlm = true;
    train::pretrain_mlm(corpus, cfg, w, [&](const auto& m) { lines.push_back(train::format_metrics(m)); });
    return w;
  };
  std::vector<std::string> first, second;
  const auto a = run(first);
  const auto b = run(second);
  CHECK(first == second);
  REQUIRE(first.size() == 3);
  CHECK(first[0].starts_with("1\tmlm\t"));
  for (std::size_t i = 0; i < a.params().size(); ++i) CHECK(a.params()[i].value == b.params()[i].value);
}

TEST_CASE("pretraining lowers the MLM loss") {
  model::EncoderWeights<float> w(model::EncoderConfig::toy(), 2);
  auto cfg = small_config(2);
  cfg.mlm_epochs = 12;
  const auto history = train::pretrain_mlm(train::synthetic_corpus(32, 2), cfg, w);
  REQUIRE(history.size() == 12);
  CHECK(history.back().mean_loss < history.front().mean_loss);
}

TEST_CASE("fine-tuning checks its inputs") {
  const auto data = train::synthetic_pairs(8, 3);
  const auto table = seq::make_table(data.sequences);
  model::EncoderWeights<float> w(model::EncoderConfig::toy(), 3);

  auto cfg = small_config(3);
  cfg.augmentation.technique = train::Augmentation::kReverse;
  CHECK_THROWS_AS(train::train_ppi(data.pairs, table, cfg, w), ConfigError);

  auto pairs = data.pairs;
  pairs[3].host_id = "ghost";
  try {
    train::train_ppi(pairs, table, small_config(3), w);
    FAIL("unknown id accepted");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }

  auto long_table = table;
  long_table.insert_or_assign("host0", seq::ProteinSequence::from_string(std::string(62, 'L'), "host0"));
  CHECK_THROWS_AS(train::train_ppi(data.pairs, long_table, small_config(3), w), DataError);
}

TEST_CASE("fine-tuning is deterministic") {
  const auto data = train::synthetic_pairs(8, 4);
  const auto table = seq::make_table(data.sequences);
  const auto run = [&] {
    model::EncoderWeights<float> w(model::EncoderConfig::toy(), 4);
    const auto h = train::train_ppi(data.pairs, table, small_config(4), w);
    CHECK(h.size() == 3);
    return w;
  };
  const auto a = run(), b = run();
  for (std::size_t i = 0; i < a.params().size(); ++i) CHECK(a.params()[i].value == b.params()[i].value);
}

TEST_CASE("metrics line format") {
  CHECK(train::format_metrics({3, "ppi", 0.25, 0.9375}) == "3\tppi\t0.250000\t0.9375");
}

TEST_CASE("pairs table parsing") {
  std::istringstream in("# virus host label\nv1 h1 1\n\nv2\th1\t0  # trailing\n");
  const auto pairs = seq::parse_pairs(in);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[1] == seq::PairRecord{"v2", "h1", 0});
  std::istringstream bad_label("v1 h1 2\n");
  CHECK_THROWS_AS(seq::parse_pairs(bad_label), DataError);
  std::istringstream bad_fields("v1 h1\n");
  CHECK_THROWS_AS(seq::parse_pairs(bad_fields), DataError);
  const std::vector<seq::ProteinSequence> dup = {seq::ProteinSequence::from_string("A", "x"),
                                                 seq::ProteinSequence::from_string("C", "x")};
  CHECK_THROWS_AS(seq::make_table(dup), DataError);
}
