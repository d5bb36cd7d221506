#pragma once

#include <functional>
#include <span>
#include <vector>

#include "oppi/model/weights.hpp"
#include "oppi/num/tensor.hpp"
#include "oppi/seqcore/protein.hpp"

namespace oppi::search {

/// Maps virus variants to binding scores against a fixed partner. Implementations are
/// pure: a variant's score does not depend on the batch it arrives in.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score(std::span<const seq::ProteinSequence> variants) const = 0;
  double score_one(const seq::ProteinSequence& s) const;
};

/// ppi_score against one host with immutable weights. The host's CLS row is computed once.
/// Variants are tokenized to their own length; PAD masking makes this bitwise equal to
/// scoring at the model's full max_len. `threads` > 1 splits a batch across workers.
class ModelScorer final : public Scorer {
 public:
  /// Keeps a reference to `weights`; they must outlive the scorer.
  ModelScorer(const model::EncoderWeights<float>& weights, const seq::ProteinSequence& host, std::size_t threads = 1);

  /// Throws oppi::DataError when a variant does not fit the model's max_len.
  std::vector<double> score(std::span<const seq::ProteinSequence> variants) const override;

 private:
  const model::EncoderWeights<float>& weights_;
  num::Tensor<float> host_cls_;
  std::size_t threads_;
};

/// Wraps an analytic scoring function (validation oracles, toy problems).
class FunctionScorer final : public Scorer {
 public:
  explicit FunctionScorer(std::function<double(const seq::ProteinSequence&)> fn) : fn_(std::move(fn)) {}
  std::vector<double> score(std::span<const seq::ProteinSequence> variants) const override;

 private:
  std::function<double(const seq::ProteinSequence&)> fn_;
};

inline std::vector<double> score_batch(std::span<const seq::ProteinSequence> variants, const Scorer& scorer) {
  return scorer.score(variants);
}

}  // namespace oppi::search
