#pragma once

// Whole-model helpers shared by the model unit tests and the acceptance suite.

#include <algorithm>
#include <vector>

#include "oppi/model/encoder.hpp"
#include "oppi/seqcore/tokens.hpp"
#include "test_support.hpp"

namespace oppi::test {

/// d=8, one layer, two heads, room for `max_len` tokens.
inline model::EncoderConfig micro_config(std::size_t max_len = 4, std::size_t heads = 2) {
  model::EncoderConfig c;
  c.num_layers = 1;
  c.num_heads = heads;
  c.d_model = 8;
  c.ffn_hidden = 16;
  c.dropout = 0.0;
  c.max_len = max_len;
  return c;
}

/// Randomises every parameter, gains and biases included, so no gradient term hides
/// behind an initial zero or one.
inline model::EncoderWeights<double> random_weights(const model::EncoderConfig& config, num::CounterRng& rng,
                                                    double scale = 0.5) {
  model::EncoderWeights<double> w(config, rng.next());
  for (auto& p : w.params()) p.value = random_tensor(rng, p.value.shape(), scale);
  return w;
}

/// Full forward: MLM cross-entropy on the virus tokens plus PPI BCE on the pair.
inline num::Var<double> micro_loss(const model::BoundWeights<double>& bound,
                                   const seq::TokenSequence& virus, const seq::TokenSequence& host,
                                   const std::vector<std::int32_t>& mlm_labels, int ppi_label) {
  num::CounterRng unused(0);
  auto ev = model::encode(virus, bound, false, unused);
  auto eh = model::encode(host, bound, false, unused);
  auto mlm = num::masked_cross_entropy(model::mlm_logits(ev, bound), mlm_labels);
  const int label[] = {ppi_label};
  auto ppi = num::bce_with_logits(model::ppi_logit(num::select_row(ev, 0), num::select_row(eh, 0), bound), label);
  return num::add(mlm, ppi);
}

/// Worst relative error between the tape gradient and central differences over every
/// parameter of a random micro-model. `residues` residues tokenized into `max_len` slots.
inline double micro_model_gradcheck(std::uint64_t seed, std::size_t max_len = 4, std::size_t residues = 1) {
  num::CounterRng rng(seed, 0x6d6963726fULL);
  const auto config = micro_config(max_len);
  auto weights = random_weights(config, rng);

  auto virus = seq::tokenize(random_protein(rng, residues), max_len);
  const auto host = seq::tokenize(random_protein(rng, residues), max_len);
  virus.set(2, seq::TokenVocab::kMask);
  std::vector<std::int32_t> labels(max_len, -1);
  labels[2] = static_cast<std::int32_t>(seq::TokenVocab::kFirstResidue + rng.below(seq::kNumAminoAcids));
  labels[0] = static_cast<std::int32_t>(rng.below(seq::TokenVocab::kSize));
  const int ppi_label = static_cast<int>(rng.below(2));

  weights.zero_grad();
  {
    num::Tape<double> tape;
    const auto bound = model::bind(tape, weights);
    tape.backward(micro_loss(bound, virus, host, labels, ppi_label));
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < weights.params().size(); ++i) {
    const std::function<double(const num::Tensor<double>&)> f = [&](const num::Tensor<double>& x) {
      auto probe = weights.params();
      probe[i].value = x;
      const model::EncoderWeights<double> shifted(config, std::move(probe));
      num::Tape<double> tape(false);
      return micro_loss(model::bind_const(tape, shifted), virus, host, labels, ppi_label).value()[0];
    };
    const auto numeric = num::finite_diff_grad<double>(f, weights.params()[i].value, 1e-5);
    worst = std::max(worst, num::max_relative_error(weights.params()[i].grad, numeric));
  }
  return worst;
}

}  // namespace oppi::test
