#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "model_support.hpp"
#include "oppi/error.hpp"
#include "oppi/model/checkpoint.hpp"

using namespace oppi;
using num::Tensor;
using num::Var;

namespace {

Tensor<double> identity(std::size_t n) {
  auto t = Tensor<double>::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::vector<std::uint8_t> random_mask(num::CounterRng& rng, std::size_t m) {
  std::vector<std::uint8_t> mask(m);
  for (auto& b : mask) b = rng.uniform() < 0.4 ? 1 : 0;
  mask[rng.below(m)] = 0;  // keep at least one key
  return mask;
}

}  // namespace

TEST_CASE("config validation and header map") {
  model::EncoderConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.head_dim() == 16);
  c.d_model = 100;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = model::EncoderConfig::toy();
  c.dropout = 0.25;
  CHECK(model::EncoderConfig::from_map(c.to_map()) == c);
  auto kv = c.to_map();
  kv["d_model"] = "3x";
  CHECK_THROWS_AS(model::EncoderConfig::from_map(kv), ConfigError);
}

TEST_CASE("weight layout and initialisation") {
  const auto c = model::EncoderConfig::toy();
  const model::EncoderWeights<float> w(c, 7);
  CHECK(w.params().size() == 2 + 12 * c.num_layers + 3);
  CHECK(w.find("embed.position").value.shape() == num::Shape{64, 32});
  CHECK(w.find("enc.layer1.ffn.w1").value.shape() == num::Shape{32, 128});
  CHECK(w.find("ppi.dense").value.shape() == num::Shape{64, 1});
  CHECK_THROWS_AS(w.find("nope"), std::out_of_range);

  const double limit = std::sqrt(6.0 / 64.0);
  for (float v : w.find("enc.layer0.mha.wq").value.data()) CHECK(std::abs(v) <= limit);
  for (float v : w.find("embed.token").value.data()) CHECK(std::abs(v) <= 0.05f);
  for (float v : w.find("enc.layer0.ln1.gain").value.data()) CHECK(v == 1.0f);
  for (float v : w.find("enc.layer0.ffn.b1").value.data()) CHECK(v == 0.0f);

  const model::EncoderWeights<float> again(c, 7);
  const model::EncoderWeights<float> other(c, 8);
  CHECK(again.find("enc.layer1.mha.wv").value == w.find("enc.layer1.mha.wv").value);
  CHECK_FALSE(other.find("enc.layer1.mha.wv").value == w.find("enc.layer1.mha.wv").value);

  auto params = w.params();
  params.pop_back();
  CHECK_THROWS_AS(model::EncoderWeights<float>(c, std::move(params)), std::invalid_argument);
}

TEST_CASE("attention: uniform weights and single key") {
  num::CounterRng rng(3);
  num::Tape<double> tape(false);
  const auto v = test::random_tensor(rng, {5, 3});
  const std::vector<std::uint8_t> none(5, 0);
  auto out = model::scaled_dot_attention(tape.constant(Tensor<double>::matrix(2, 4)),
                                         tape.constant(test::random_tensor(rng, {5, 4})), tape.constant(v), none);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      double mean = 0;
      for (std::size_t j = 0; j < 5; ++j) mean += v.at(j, c) / 5.0;
      CHECK(out.value().at(r, c) == doctest::Approx(mean).epsilon(1e-12));
    }
  }

  const auto v1 = test::random_tensor(rng, {1, 3});
  const std::vector<std::uint8_t> one(1, 0);
  auto single = model::scaled_dot_attention(tape.constant(test::random_tensor(rng, {3, 4})),
                                            tape.constant(test::random_tensor(rng, {1, 4})), tape.constant(v1), one);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(single.value().at(r, c) == v1.at(0, c));
  }

  CHECK_THROWS(model::scaled_dot_attention(tape.constant(Tensor<double>::matrix(2, 4)),
                                           tape.constant(Tensor<double>::matrix(5, 3)), tape.constant(v), none));
  CHECK_THROWS(model::scaled_dot_attention(tape.constant(Tensor<double>::matrix(2, 4)),
                                           tape.constant(Tensor<double>::matrix(5, 4)), tape.constant(v), one));
}

TEST_CASE("attention rows are stochastic and masked keys get no weight") {
  num::CounterRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(8), m = 1 + rng.below(12), dk = 1 + rng.below(6);
    const auto mask = random_mask(rng, m);
    num::Tape<float> tape(false);
    auto w = model::attention_weights(tape.constant(test::random_tensor(rng, {n, dk}, 4.0).cast<float>()),
                                      tape.constant(test::random_tensor(rng, {m, dk}, 4.0).cast<float>()), mask);
    for (std::size_t r = 0; r < n; ++r) {
      double total = 0;
      for (std::size_t j = 0; j < m; ++j) {
        total += w.value().at(r, j);
        if (mask[j]) CHECK(w.value().at(r, j) < 1e-9f);
      }
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("multi-head attention with one head reduces to masked row means") {
  num::CounterRng rng(5);
  const std::size_t n = 6, d = 4;
  const auto x = test::random_tensor(rng, {n, d});
  const std::vector<std::uint8_t> mask = {0, 0, 1, 0, 1, 1};
  num::Tape<double> tape(false);
  model::LayerVars<double> layer;
  layer.wq = tape.constant(Tensor<double>::matrix(d, d));
  layer.wk = tape.constant(Tensor<double>::matrix(d, d));
  layer.wv = tape.constant(identity(d));
  layer.wo = tape.constant(identity(d));
  auto out = model::multi_head_attention(tape.constant(x), layer, 1, mask);
  CHECK(out.shape() == x.shape());
  for (std::size_t c = 0; c < d; ++c) {
    const double mean = (x.at(0, c) + x.at(1, c) + x.at(3, c)) / 3.0;
    for (std::size_t r = 0; r < n; ++r) CHECK(out.value().at(r, c) == doctest::Approx(mean).epsilon(1e-12));
  }
  CHECK_THROWS(model::multi_head_attention(tape.constant(x), layer, 3, mask));
}

TEST_CASE("encoder layer preserves shape and is deterministic at inference") {
  const auto c = model::EncoderConfig::toy();
  const model::EncoderWeights<float> w(c, 1);
  num::CounterRng rng(2);
  const auto x = test::random_tensor(rng, {10, c.d_model}).cast<float>();
  const std::vector<std::uint8_t> mask(10, 0);
  Tensor<float> first, second;
  for (auto* dst : {&first, &second}) {
    num::Tape<float> tape(false);
    const auto bound = model::bind_const(tape, w);
    num::CounterRng drop(9);
    *dst = model::encoder_layer(tape.constant(x), bound.layers[0], c, mask, false, drop).value();
  }
  CHECK(first.shape() == x.shape());
  CHECK(first == second);

  // Training mode with dropout draws from the rng and changes the output.
  num::Tape<float> tape(false);
  const auto bound = model::bind_const(tape, w);
  num::CounterRng drop(9);
  CHECK_FALSE(model::encoder_layer(tape.constant(x), bound.layers[0], c, mask, true, drop).value() == first);
}

TEST_CASE("encode shape at default hyperparameters") {
  const model::EncoderConfig c;
  const model::EncoderWeights<float> w(c, 1);
  num::CounterRng rng(4);
  const auto tokens = seq::tokenize(test::random_protein(rng, 40));
  num::Tape<float> tape(false);
  const auto bound = model::bind_const(tape, w);
  auto encoded = model::encode(tokens, bound, false, rng);
  CHECK(encoded.shape() == num::Shape{1300, 128});
  CHECK(encoded.value().all_finite());
  CHECK(model::mlm_logits(encoded, bound).shape() == num::Shape{1300, 25});
}

TEST_CASE("encode rejects sequences longer than the model") {
  const auto c = model::EncoderConfig::toy();
  const model::EncoderWeights<float> w(c, 1);
  num::CounterRng rng(4);
  const auto tokens = seq::tokenize(test::random_protein(rng, 10), 65);
  num::Tape<float> tape(false);
  CHECK_THROWS_AS(model::encode(tokens, model::bind_const(tape, w), false, rng), std::invalid_argument);
}

TEST_CASE("PAD tail length leaves content rows bitwise unchanged") {
  const auto c = model::EncoderConfig::toy();
  const model::EncoderWeights<float> w(c, 21);
  num::CounterRng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto protein = test::random_protein(rng, 1 + rng.below(30));
    const std::size_t tight = protein.size() + seq::kReservedTokens;
    num::Tape<float> tape(false);
    const auto bound = model::bind_const(tape, w);
    const auto a = model::encode(seq::tokenize(protein, tight), bound, false, rng).value();
    const auto b = model::encode(seq::tokenize(protein, c.max_len), bound, false, rng).value();
    for (std::size_t r = 0; r < tight; ++r) {
      for (std::size_t col = 0; col < c.d_model; ++col) CHECK(a.at(r, col) == b.at(r, col));
    }
    CHECK(model::encode_cls(seq::tokenize(protein, tight), w) == model::encode_cls(seq::tokenize(protein, 50), w));
  }
}

TEST_CASE("whole micro-model gradient matches finite differences") {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) worst = std::max(worst, test::micro_model_gradcheck(seed));
  CHECK(worst < 1e-4);
  // With a PAD tail the masked branch is exercised as well.
  CHECK(test::micro_model_gradcheck(99, 7, 2) < 1e-4);
}

TEST_CASE("ppi score is a deterministic probability") {
  const auto c = model::EncoderConfig::toy();
  model::EncoderWeights<float> w(c, 3);
  num::CounterRng rng(6);
  std::vector<std::pair<seq::TokenSequence, seq::TokenSequence>> pairs;
  for (int i = 0; i < 6; ++i) {
    pairs.emplace_back(seq::tokenize(test::random_protein(rng, 5 + rng.below(40)), c.max_len),
                       seq::tokenize(test::random_protein(rng, 5 + rng.below(40)), c.max_len));
  }
  std::vector<double> forward;
  for (const auto& [v, h] : pairs) {
    const double s = model::ppi_score(v, h, w);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(model::ppi_score(v, h, w) == s);
    forward.push_back(s);
  }
  for (std::size_t i = pairs.size(); i-- > 0;) CHECK(model::ppi_score(pairs[i].first, pairs[i].second, w) == forward[i]);

  // Saturating head weights still give a score strictly inside (0, 1).
  w.ppi_bias().value.fill(1e6f);
  CHECK(model::ppi_score(pairs[0].first, pairs[0].second, w) < 1.0);
  w.ppi_bias().value.fill(-1e6f);
  CHECK(model::ppi_score(pairs[0].first, pairs[0].second, w) > 0.0);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const auto c = model::EncoderConfig::toy();
  const model::EncoderWeights<float> w(c, 17);
  std::stringstream buf;
  model::save_checkpoint(buf, w, {{"seed", "17"}, {"phase", "finetune"}});
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "OPPI");

  std::istringstream in(bytes);
  const auto loaded = model::load_checkpoint(in);
  CHECK(loaded.config == c);
  CHECK(loaded.metadata.at("seed") == "17");
  CHECK(loaded.metadata.size() == 2);
  REQUIRE(loaded.weights.params().size() == w.params().size());
  for (std::size_t i = 0; i < w.params().size(); ++i) {
    CHECK(loaded.weights.params()[i].name == w.params()[i].name);
    CHECK(loaded.weights.params()[i].value == w.params()[i].value);
  }
  std::stringstream again;
  model::save_checkpoint(again, loaded.weights, loaded.metadata);
  CHECK(again.str() == bytes);
}

TEST_CASE("checkpoint errors") {
  const auto c = model::EncoderConfig::toy();
  const model::EncoderWeights<float> w(c, 17);
  const auto path = std::filesystem::temp_directory_path() / "oppi_test_model.ckpt";
  model::save_checkpoint(path, w);

  auto expected = c;
  expected.d_model = 64;
  try {
    model::load_checkpoint(path, expected);
    FAIL("mismatch not reported");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("d_model=32") != std::string::npos);
    CHECK(msg.find("d_model=64") != std::string::npos);
  }
  CHECK_NOTHROW(model::load_checkpoint(path, c));
  std::filesystem::remove(path);

  std::stringstream buf;
  model::save_checkpoint(buf, w);
  const std::string bytes = buf.str();
  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(model::load_checkpoint(truncated), DataError);
  std::istringstream bad("XPPI" + bytes.substr(4));
  CHECK_THROWS_AS(model::load_checkpoint(bad), DataError);
  std::istringstream trailing(bytes + "x");
  CHECK_THROWS_AS(model::load_checkpoint(trailing), DataError);
  CHECK_THROWS_AS(model::load_checkpoint(std::filesystem::path("/nonexistent/x.ckpt")), DataError);
  std::stringstream sink;
  CHECK_THROWS_AS(model::save_checkpoint(sink, w, {{"d_model", "1"}}), std::invalid_argument);
}
