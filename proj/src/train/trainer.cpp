#include "oppi/train/trainer.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "oppi/error.hpp"
#include "oppi/model/encoder.hpp"
#include "oppi/train/losses.hpp"

namespace oppi::train {

namespace {

enum Phase : std::uint64_t { kMlm = 1, kPpi = 2 };
enum Purpose : std::uint64_t { kShuffle = 1, kAugment = 2, kMask = 3, kDropout = 4 };

class Streams {
 public:
  explicit Streams(std::uint64_t seed) : root_(seed, 0x747261696eULL) {}
  num::CounterRng get(Phase phase, Purpose purpose, std::size_t epoch, std::size_t batch = 0) const {
    return root_.fork(static_cast<std::uint64_t>(phase) << 56 | static_cast<std::uint64_t>(purpose) << 48 |
                      static_cast<std::uint64_t>(epoch) << 24 | static_cast<std::uint64_t>(batch));
  }

 private:
  num::CounterRng root_;
};

void check_fits(const seq::ProteinSequence& s, const model::EncoderConfig& c) {
  if (s.size() + seq::kReservedTokens > c.max_len) {
    throw DataError("sequence '" + s.id() + "' has " + std::to_string(s.size()) + " residues; the model holds at most " +
                    std::to_string(c.max_len - seq::kReservedTokens));
  }
}

// Tokens sized to the sequence itself. PAD keys are masked out, so content rows match a
// full-length encoding bitwise while skipping the padded work.
seq::TokenSequence tight_tokens(const seq::ProteinSequence& s) { return seq::tokenize(s, s.size() + seq::kReservedTokens); }

std::vector<std::size_t> shuffled(std::size_t n, num::CounterRng rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

num::Var<float> weighted_sum(const std::vector<num::Var<float>>& terms, const std::vector<float>& w) {
  auto total = num::scale(terms[0], w[0]);
  for (std::size_t i = 1; i < terms.size(); ++i) total = num::add(total, num::scale(terms[i], w[i]));
  return total;
}

void check_finite(double loss, const char* phase, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw NumericError(std::string(phase) + " loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                       std::to_string(batch));
  }
}

std::size_t argmax_row(const num::Tensor<float>& t, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.cols(); ++c) {
    if (t.at(r, c) > t.at(r, best)) best = c;
  }
  return best;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (mlm_epochs == 0 && ppi_epochs == 0) throw ConfigError("at least one of mlm_epochs/ppi_epochs must be positive");
  augmentation.validate();
  masking.validate();
  sam.validate();
  adam.validate();
}

std::string format_metrics(const EpochMetrics& m) {
  char loss[32], acc[32];
  auto end_loss = std::to_chars(loss, loss + sizeof loss, m.mean_loss, std::chars_format::fixed, 6).ptr;
  auto end_acc = std::to_chars(acc, acc + sizeof acc, m.accuracy, std::chars_format::fixed, 4).ptr;
  return std::to_string(m.epoch) + "\t" + m.phase + "\t" + std::string(loss, end_loss) + "\t" + std::string(acc, end_acc);
}

std::vector<EpochMetrics> pretrain_mlm(const std::vector<seq::ProteinSequence>& corpus, const TrainConfig& config,
                                       model::EncoderWeights<float>& weights, const MetricsSink& sink) {
  config.validate();
  if (corpus.empty()) throw DataError("pretraining corpus is empty");
  for (const auto& s : corpus) check_fits(s, weights.config());

  const Streams streams(config.seed);
  Adam<float> adam(config.adam);
  std::vector<EpochMetrics> history;

  for (std::size_t epoch = 1; epoch <= config.mlm_epochs; ++epoch) {
    const auto order = shuffled(corpus.size(), streams.get(kMlm, kShuffle, epoch));
    double loss_sum = 0;
    std::size_t labelled = 0, correct = 0;

    for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      auto aug_rng = streams.get(kMlm, kAugment, epoch, batch);
      auto mask_rng = streams.get(kMlm, kMask, epoch, batch);
      std::vector<MaskedTokens> items;
      std::vector<std::size_t> counts;
      std::size_t batch_labelled = 0;
      for (std::size_t i = start; i < end; ++i) {
        const auto s = augment(corpus[order[i]], config.augmentation, aug_rng);
        items.push_back(mask_sequence(tight_tokens(s), config.masking, mask_rng));
        counts.push_back(masked_count(s.size(), config.masking.mask_fraction));
        batch_labelled += counts.back();
      }
      std::vector<float> share;
      for (auto c : counts) share.push_back(static_cast<float>(c) / static_cast<float>(batch_labelled));

      const auto dropout_rng = streams.get(kMlm, kDropout, epoch, batch);
      bool first_pass = true;
      std::size_t batch_correct = 0;
      const LossClosure closure = [&] {
        num::Tape<float> tape;
        const auto bound = model::bind(tape, weights);
        auto drop = dropout_rng;  // both SAM passes see the same dropout masks
        std::vector<num::Var<float>> losses;
        for (const auto& item : items) {
          auto logits = model::mlm_logits(model::encode(item.tokens, bound, true, drop), bound);
          losses.push_back(mlm_loss(logits, std::span<const std::int32_t>(item.labels)));
          if (first_pass) {
            for (std::size_t r = 0; r < item.labels.size(); ++r) {
              if (item.labels[r] != kIgnoreLabel && argmax_row(logits.value(), r) == static_cast<std::size_t>(item.labels[r])) {
                ++batch_correct;
              }
            }
          }
        }
        auto total = weighted_sum(losses, share);
        const double loss = total.value()[0];
        check_finite(loss, "mlm", epoch, batch);
        tape.backward(total);
        first_pass = false;
        return loss;
      };
      const double loss = config.sam_on_mlm ? sam_step(weights.params(), closure, config.sam, adam).loss
                                            : plain_step(weights.params(), closure, adam);
      loss_sum += loss * static_cast<double>(batch_labelled);
      labelled += batch_labelled;
      correct += batch_correct;
    }
    history.push_back({epoch, "mlm", loss_sum / static_cast<double>(labelled),
                       static_cast<double>(correct) / static_cast<double>(labelled)});
    if (sink) sink(history.back());
  }
  return history;
}

std::vector<EpochMetrics> train_ppi(const std::vector<seq::PairRecord>& pairs, const seq::SequenceTable& seqs,
                                    const TrainConfig& config, model::EncoderWeights<float>& weights,
                                    const MetricsSink& sink) {
  config.validate();
  if (config.augmentation.technique != Augmentation::kNone) {
    throw ConfigError("augmentation is not applied during PPI training; set augmentation=none");
  }
  if (pairs.empty()) throw DataError("no training pairs");
  seq::check_resolvable(pairs, seqs);
  std::map<std::string, seq::TokenSequence, std::less<>> tokens;
  for (const auto& p : pairs) {
    if (p.label != 0 && p.label != 1) throw DataError("pair label must be 0 or 1");
    for (const auto* id : {&p.virus_id, &p.host_id}) {
      if (tokens.contains(*id)) continue;
      const auto& s = seqs.find(*id)->second;
      check_fits(s, weights.config());
      tokens.emplace(*id, tight_tokens(s));
    }
  }

  const Streams streams(config.seed);
  Adam<float> adam(config.adam);
  std::vector<EpochMetrics> history;

  for (std::size_t epoch = 1; epoch <= config.ppi_epochs; ++epoch) {
    const auto order = shuffled(pairs.size(), streams.get(kPpi, kShuffle, epoch));
    double loss_sum = 0;
    std::size_t correct = 0;

    for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::vector<float> share(end - start, 1.0f / static_cast<float>(end - start));
      const auto dropout_rng = streams.get(kPpi, kDropout, epoch, batch);
      bool first_pass = true;
      std::size_t batch_correct = 0;
      const LossClosure closure = [&] {
        num::Tape<float> tape;
        const auto bound = model::bind(tape, weights);
        auto drop = dropout_rng;
        std::vector<num::Var<float>> losses;
        for (std::size_t i = start; i < end; ++i) {
          const auto& pair = pairs[order[i]];
          auto ev = model::encode(tokens.find(pair.virus_id)->second, bound, true, drop);
          auto eh = model::encode(tokens.find(pair.host_id)->second, bound, true, drop);
          auto logit = model::ppi_logit(num::select_row(ev, 0), num::select_row(eh, 0), bound);
          const int label[] = {pair.label};
          losses.push_back(num::bce_with_logits(logit, std::span<const int>(label)));
          if (first_pass && (logit.value()[0] >= 0.0f ? 1 : 0) == pair.label) ++batch_correct;
        }
        auto total = weighted_sum(losses, share);
        const double loss = total.value()[0];
        check_finite(loss, "ppi", epoch, batch);
        tape.backward(total);
        first_pass = false;
        return loss;
      };
      const double loss = config.sam_on_ppi ? sam_step(weights.params(), closure, config.sam, adam).loss
                                            : plain_step(weights.params(), closure, adam);
      loss_sum += loss * static_cast<double>(end - start);
      correct += batch_correct;
    }
    const auto n = static_cast<double>(pairs.size());
    history.push_back({epoch, "ppi", loss_sum / n, static_cast<double>(correct) / n});
    if (sink) sink(history.back());
  }
  return history;
}

}  // namespace oppi::train
