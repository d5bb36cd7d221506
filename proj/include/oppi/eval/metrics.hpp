#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "oppi/model/encoder.hpp"
#include "oppi/seqcore/pairs.hpp"

namespace oppi::eval {

struct EvalReport {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0;
  double f1 = 0;  // positive class; 0 when 2tp + fp + fn == 0
  double threshold = model::kDecisionThreshold;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
};

/// Predicts positive when score >= threshold. Throws std::invalid_argument on empty or
/// mismatched inputs or a label outside {0, 1}.
EvalReport confusion(std::span<const double> scores, std::span<const int> labels,
                     double threshold = model::kDecisionThreshold);

/// Inference scores for each pair, in input order. Each distinct sequence is encoded once;
/// `threads` > 1 spreads the encodings over workers without changing any result.
/// Throws oppi::DataError on an unresolvable id or a sequence too long for the model.
std::vector<double> score_pairs(const model::EncoderWeights<float>& weights, std::span<const seq::PairRecord> pairs,
                                const seq::SequenceTable& seqs, std::size_t threads = 1);

EvalReport evaluate(const model::EncoderWeights<float>& weights, std::span<const seq::PairRecord> pairs,
                    const seq::SequenceTable& seqs, double threshold = model::kDecisionThreshold,
                    std::size_t threads = 1);

/// Human-readable summary with the confusion matrix.
void write_text(std::ostream& out, const EvalReport& r);
/// `key=value` lines: samples, threshold, tp, tn, fp, fn, accuracy, f1.
void write_key_values(std::ostream& out, const EvalReport& r);

}  // namespace oppi::eval
