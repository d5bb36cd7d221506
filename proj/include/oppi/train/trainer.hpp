#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oppi/model/weights.hpp"
#include "oppi/seqcore/pairs.hpp"
#include "oppi/train/augment.hpp"
#include "oppi/train/masking.hpp"
#include "oppi/train/optim.hpp"

namespace oppi::train {

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t mlm_epochs = 50;
  std::size_t ppi_epochs = 15;
  std::uint64_t seed = 0;
  bool sam_on_mlm = false;
  bool sam_on_ppi = true;
  AugmentationPolicy augmentation;  // pretraining only; must stay kNone for train_ppi
  MaskingPolicy masking;
  SamConfig sam;
  AdamConfig adam;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  std::string phase;      // "mlm" or "ppi"
  double mean_loss = 0;
  double accuracy = 0;    // masked-token accuracy for mlm, label accuracy at 0.5 for ppi
};

/// `epoch<TAB>phase<TAB>mean_loss<TAB>accuracy`
std::string format_metrics(const EpochMetrics& m);

using MetricsSink = std::function<void(const EpochMetrics&)>;

/// Masked-language-model pretraining in place. Sequences are checked against the model's
/// max_len before the first step (oppi::DataError naming the offender). Each epoch
/// reshuffles, optionally augments, masks, and steps with Adam (or SAM + Adam). The
/// per-epoch mean loss is weighted by masked-token count.
std::vector<EpochMetrics> pretrain_mlm(const std::vector<seq::ProteinSequence>& corpus, const TrainConfig& config,
                                       model::EncoderWeights<float>& weights, const MetricsSink& sink = {});

/// PPI fine-tuning in place with BCE on the head logit. Throws oppi::ConfigError when an
/// augmentation is configured and oppi::DataError on an unresolvable id or a sequence
/// too long for the model.
std::vector<EpochMetrics> train_ppi(const std::vector<seq::PairRecord>& pairs, const seq::SequenceTable& seqs,
                                    const TrainConfig& config, model::EncoderWeights<float>& weights,
                                    const MetricsSink& sink = {});

}  // namespace oppi::train
