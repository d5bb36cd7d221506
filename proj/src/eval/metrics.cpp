#include "oppi/eval/metrics.hpp"

#include <charconv>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

#include "oppi/error.hpp"

namespace oppi::eval {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  auto end = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits).ptr;
  return std::string(buf, end);
}

std::string shortest(double v) {
  char buf[64];
  auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return std::string(buf, end);
}

}  // namespace

EvalReport confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.empty()) throw std::invalid_argument("confusion needs at least one score");
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(labels.size()) + " labels");
  }
  EvalReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++(predicted ? r.tp : r.fn);
    } else {
      ++(predicted ? r.fp : r.tn);
    }
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.total());
  const std::size_t denom = 2 * r.tp + r.fp + r.fn;
  r.f1 = denom == 0 ? 0.0 : static_cast<double>(2 * r.tp) / static_cast<double>(denom);
  return r;
}

std::vector<double> score_pairs(const model::EncoderWeights<float>& weights, std::span<const seq::PairRecord> pairs,
                                const seq::SequenceTable& seqs, std::size_t threads) {
  const std::vector<seq::PairRecord> owned(pairs.begin(), pairs.end());
  seq::check_resolvable(owned, seqs);
  const auto& config = weights.config();

  std::map<std::string, std::size_t, std::less<>> slot;
  std::vector<const seq::ProteinSequence*> unique;
  for (const auto& p : pairs) {
    for (const auto* id : {&p.virus_id, &p.host_id}) {
      if (slot.contains(*id)) continue;
      const auto& s = seqs.find(*id)->second;
      if (s.size() + seq::kReservedTokens > config.max_len) {
        throw DataError("sequence '" + s.id() + "' has " + std::to_string(s.size()) +
                        " residues; the model holds at most " + std::to_string(config.max_len - seq::kReservedTokens));
      }
      slot.emplace(*id, unique.size());
      unique.push_back(&s);
    }
  }

  std::vector<num::Tensor<float>> cls(unique.size());
  const auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      cls[i] = model::encode_cls(seq::tokenize(*unique[i], unique[i]->size() + seq::kReservedTokens), weights);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, unique.size()));
  if (workers == 1) {
    run(0, unique.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (unique.size() + workers - 1) / workers;
    for (std::size_t b = 0; b < unique.size(); b += chunk) pool.emplace_back(run, b, std::min(unique.size(), b + chunk));
  }

  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& p : pairs) {
    scores.push_back(model::ppi_score_from_cls(cls[slot.find(p.virus_id)->second], cls[slot.find(p.host_id)->second], weights));
  }
  return scores;
}

EvalReport evaluate(const model::EncoderWeights<float>& weights, std::span<const seq::PairRecord> pairs,
                    const seq::SequenceTable& seqs, double threshold, std::size_t threads) {
  const auto scores = score_pairs(weights, pairs, seqs, threads);
  std::vector<int> labels;
  labels.reserve(pairs.size());
  for (const auto& p : pairs) labels.push_back(p.label);
  return confusion(scores, labels, threshold);
}

void write_text(std::ostream& out, const EvalReport& r) {
  out << "samples    " << r.total() << "\n"
      << "threshold  " << shortest(r.threshold) << "\n"
      << "accuracy   " << fixed(r.accuracy, 6) << "\n"
      << "f1         " << fixed(r.f1, 6) << "\n"
      << "           " << std::setw(7) << "pred+" << std::setw(7) << "pred-" << "\n"
      << "actual+    " << std::setw(7) << r.tp << std::setw(7) << r.fn << "\n"
      << "actual-    " << std::setw(7) << r.fp << std::setw(7) << r.tn << "\n";
}

void write_key_values(std::ostream& out, const EvalReport& r) {
  out << "samples=" << r.total() << "\n"
      << "threshold=" << shortest(r.threshold) << "\n"
      << "tp=" << r.tp << "\ntn=" << r.tn << "\nfp=" << r.fp << "\nfn=" << r.fn << "\n"
      << "accuracy=" << shortest(r.accuracy) << "\n"
      << "f1=" << shortest(r.f1) << "\n";
}

}  // namespace oppi::eval
