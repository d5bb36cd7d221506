// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "model_support.hpp"
#include "op_catalogue.hpp"
#include "oppi/eval/metrics.hpp"
#include "oppi/model/checkpoint.hpp"
#include "oppi/model/encoder.hpp"
#include "oppi/search/search.hpp"
#include "oppi/seqcore/blosum.hpp"
#include "oppi/train/masking.hpp"
#include "oppi/train/optim.hpp"
#include "oppi/train/synthetic.hpp"
#include "oppi/train/trainer.hpp"
#include "search_support.hpp"

using namespace oppi;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  // Records the first failure only; later ones are usually consequences.
  void expect(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::vector<std::size_t> all_positions(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  return p;
}

search::SearchConfig search_config(int cap, std::size_t width, std::size_t iterations) {
  search::SearchConfig c;
  c.blosum_cap = cap;
  c.beamwidth = width;
  c.max_iterations = iterations;
  return c;
}

Verdict gradients() {
  Verdict v;
  double worst = 0;
  for (const auto& op : test::op_catalogue()) {
    double op_worst = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      num::CounterRng rng(1000 + seed);
      op_worst = std::max(op_worst, test::gradcheck_op(op.build, op.inputs(rng), rng));
    }
    v.expect(op_worst < 1e-4, op.name + " relative error " + fmt(op_worst));
    worst = std::max(worst, op_worst);
  }
  double micro = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) micro = std::max(micro, test::micro_model_gradcheck(seed));
  v.expect(micro < 1e-4, "micro-encoder relative error " + fmt(micro));
  if (v.pass) {
    v.detail = std::to_string(test::op_catalogue().size()) + " ops worst " + fmt(worst) + ", micro-encoder worst " +
               fmt(micro) + " over 20 seeds";
  }
  return v;
}

Verdict attention() {
  Verdict v;
  num::CounterRng rng(11);
  double worst_sum = 0, worst_masked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(8), m = 1 + rng.below(12), dk = 1 + rng.below(6);
    std::vector<std::uint8_t> mask(m);
    for (auto& b : mask) b = rng.uniform() < 0.4 ? 1 : 0;
    mask[rng.below(m)] = 0;  // at least one visible key
    num::Tape<float> tape(false);
    const auto w = model::attention_weights(tape.constant(test::random_tensor(rng, {n, dk}, 4.0).cast<float>()),
                                            tape.constant(test::random_tensor(rng, {m, dk}, 4.0).cast<float>()), mask);
    for (std::size_t r = 0; r < n; ++r) {
      double total = 0;
      for (std::size_t j = 0; j < m; ++j) {
        total += w.value().at(r, j);
        if (mask[j]) worst_masked = std::max(worst_masked, static_cast<double>(w.value().at(r, j)));
      }
      worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    }
  }
  v.expect(worst_sum <= 1e-6, "row sum off by " + fmt(worst_sum));
  v.expect(worst_masked < 1e-9, "masked weight " + fmt(worst_masked));
  if (v.pass) v.detail = "500 instances, max |row sum - 1| " + fmt(worst_sum) + ", max masked " + fmt(worst_masked);
  return v;
}

Verdict blosum() {
  Verdict v;
  num::CounterRng rng(7);
  const auto& m = seq::Blosum62::table();
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng.below(64);
    const auto s = test::random_protein(rng, len);
    const auto t = test::random_protein(rng, len);
    const std::string a = s.to_string(), b = t.to_string();
    int expected = 0;
    for (std::size_t i = 0; i < len; ++i) {
      const auto ia = seq::kBlosumOrder.find(a[i]), ib = seq::kBlosumOrder.find(b[i]);
      expected += m[ia][ia] - m[ia][ib];
    }
    v.expect(seq::blosum_distance(s, t) == expected, "mismatch on " + a + " vs " + b);
    v.expect(seq::blosum_distance(s, s) == 0, "D(S,S) != 0 for " + a);
  }
  const auto dist = [](const char* x, const char* y) {
    return seq::blosum_distance(seq::ProteinSequence::from_string(x), seq::ProteinSequence::from_string(y));
  };
  v.expect(dist("A", "S") == 3, "A->S = " + std::to_string(dist("A", "S")));
  v.expect(dist("C", "W") == 11, "C->W = " + std::to_string(dist("C", "W")));
  if (v.pass) v.detail = "1000 random pairs exact, D(S,S)=0, A->S=3, C->W=11";
  return v;
}

Verdict masking() {
  Verdict v;
  num::CounterRng rng(1);
  const auto hundred = seq::tokenize(test::random_protein(rng, 100), 110);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = train::mask_sequence(hundred, {}, rng);
    const auto selected = std::count_if(m.labels.begin(), m.labels.end(), [](int l) { return l != train::kIgnoreLabel; });
    v.expect(selected == 15, "100 residues selected " + std::to_string(selected));
  }
  std::size_t selections = 0, masks = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t len = 1 + rng.below(40);
    const auto tokens = seq::tokenize(test::random_protein(rng, len), len + 3 + rng.below(5));
    const auto m = train::mask_sequence(tokens, {}, rng);
    for (std::size_t i = 0; i < tokens.max_len(); ++i) {
      if (!seq::TokenVocab::is_residue(tokens[i])) {
        v.expect(m.tokens[i] == tokens[i] && m.labels[i] == train::kIgnoreLabel, "special token touched");
      } else if (m.labels[i] != train::kIgnoreLabel) {
        ++selections;
        masks += m.tokens[i] == seq::TokenVocab::kMask;
      }
    }
  }
  const double share = static_cast<double>(masks) / static_cast<double>(selections);
  v.expect(selections >= 10000, "only " + std::to_string(selections) + " selections");
  v.expect(std::abs(share - 0.9) <= 0.02, "MASK share " + fmt(share, 4));
  if (v.pass) {
    v.detail = "15 of 100 exact, MASK share " + fmt(share, 4) + " over " + std::to_string(selections) +
               " selections, specials untouched in 10^4 sequences";
  }
  return v;
}

Verdict sam() {
  Verdict v;
  {
    std::vector<num::Parameter<double>> params;
    params.emplace_back("w", num::Tensor<double>({1}, 1.0));
    const train::LossClosure half_square = [&] {
      params[0].grad[0] += params[0].value[0];
      return params[0].value[0] * params[0].value[0] / 2;
    };
    train::Sgd<double> sgd(0.1);
    train::sam_step(params, half_square, {}, sgd);
    v.expect(std::abs(params[0].value[0] - 0.895) < 1e-6, "w1 = " + fmt(params[0].value[0], 17));
  }

  // Restoration and perturbation size on a random quadratic; the optimizer sees the weights.
  struct Snapshot final : train::Optimizer<double> {
    std::vector<num::Tensor<double>> seen;
    void step(std::vector<num::Parameter<double>>& params) override {
      for (const auto& p : params) seen.push_back(p.value);
    }
  };
  num::CounterRng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<num::Parameter<double>> params;
    params.emplace_back("a", test::random_tensor(rng, {4, 3}));
    params.emplace_back("b", test::random_tensor(rng, {5}));
    const auto before = params;
    std::vector<num::Tensor<double>> perturbed;
    int calls = 0;
    const train::LossClosure closure = [&] {
      if (calls++ == 1) {
        for (const auto& p : params) perturbed.push_back(p.value);
      }
      double loss = 0;
      for (auto& p : params) {
        for (std::size_t k = 0; k < p.value.size(); ++k) {
          loss += std::cos(p.value[k]) + p.value[k] * p.value[k];
          p.grad[k] += -std::sin(p.value[k]) + 2 * p.value[k];
        }
      }
      return loss;
    };
    Snapshot opt;
    const auto stats = train::sam_step(params, closure, {}, opt);
    for (std::size_t i = 0; i < params.size(); ++i) {
      v.expect(opt.seen[i] == before[i].value, "weights not restored bitwise");
    }
    double g_sq = 0, d_sq = 0;
    for (std::size_t i = 0; i < before.size(); ++i) {
      for (std::size_t k = 0; k < before[i].value.size(); ++k) {
        const double w = before[i].value[k];
        const double g = -std::sin(w) + 2 * w;
        g_sq += g * g;
        d_sq += (perturbed[i][k] - w) * (perturbed[i][k] - w);
      }
    }
    const double expected = 0.05 * std::sqrt(g_sq) / (std::sqrt(g_sq) + 1e-12);
    v.expect(std::abs(stats.perturbation_norm - expected) <= 1e-12, "perturbation norm " + fmt(stats.perturbation_norm, 17));
    v.expect(std::abs(std::sqrt(d_sq) - expected) <= 1e-9, "applied perturbation " + fmt(std::sqrt(d_sq), 17));
  }
  if (v.pass) v.detail = "w1 = 0.895, restore bitwise, |eps| = rho*|g|/(|g|+1e-12) over 20 trials";
  return v;
}

Verdict search_oracle() {
  Verdict v;
  num::CounterRng rng(7);
  const model::EncoderWeights<float> w(model::EncoderConfig::toy(), 7);
  const search::ModelScorer model_scorer(w, test::random_protein(rng, 20));
  std::size_t verified = 0;
  const auto reverify = [&](const seq::ProteinSequence& s0, const search::Candidate& c, int cap) {
    ++verified;
    v.expect(seq::blosum_distance(s0, c.sequence) == c.blosum_dist && c.blosum_dist <= cap,
             "variant " + c.sequence.to_string() + " outside the budget");
  };
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t len = 1 + rng.below(6);
    const auto s0 = test::random_protein(rng, len);
    const int cap = static_cast<int>(rng.below(25));
    const auto hashed = test::hash_scorer(rng.next(), trial % 3 == 0 ? 3 : 0);
    const search::Scorer& scorer = trial % 2 ? static_cast<const search::Scorer&>(model_scorer) : hashed;

    const auto cfg = search_config(cap, 20 * len, 1);
    const auto beam = search::beam_search(s0, scorer, cfg);
    const auto top = search::exhaustive_top(s0, scorer, cfg, 1, 20 * len);
    bool same = beam.size() == top.size();
    for (std::size_t i = 0; same && i < beam.size(); ++i) same = beam[i].sequence == top[i].sequence;
    v.expect(same, "depth-1 beam differs from exhaustive top-k on " + s0.to_string());
    for (const auto& c : beam) reverify(s0, c, cap);

    const auto greedy = search::greedy_search(s0, scorer, search_config(cap, 10, 100));
    v.expect(greedy.sequence == test::reference_greedy(s0, scorer, cap, 100),
             "greedy differs from the reference on " + s0.to_string());
    reverify(s0, greedy, cap);

    // Additive objective: m frozen-position commits reach the best set of at most m mutations.
    const std::size_t m = 1 + rng.below(std::min<std::size_t>(3, len));
    const auto additive = test::additive_scorer(rng.next(), len);
    const auto g = search::greedy_search(s0, additive, search_config(10000, 10, m));
    const auto best = search::exhaustive_best(s0, additive, search_config(10000, 10, m), m);
    v.expect(g.sequence == best.sequence, "greedy misses the exhaustive optimum on " + s0.to_string());

    const auto wide = search::beam_search(s0, scorer, search_config(cap, 3, 6));
    for (const auto& c : wide) reverify(s0, c, cap);
  }
  if (v.pass) v.detail = "40 instances, L <= 6, " + std::to_string(verified) + " returned variants re-verified";
  return v;
}

Verdict metrics() {
  Verdict v;
  std::vector<double> scores;
  std::vector<int> labels;
  const auto push = [&](int n, double s, int y) {
    for (int i = 0; i < n; ++i) {
      scores.push_back(s);
      labels.push_back(y);
    }
  };
  push(24, 0.9, 1);
  push(21, 0.1, 0);
  push(5, 0.7, 0);
  const auto r = eval::confusion(scores, labels);
  v.expect(r.tp == 24 && r.tn == 21 && r.fp == 5 && r.fn == 0, "confusion tally");
  v.expect(r.accuracy == 0.9, "accuracy " + fmt(r.accuracy, 17));
  v.expect(std::abs(r.f1 - 0.90566) <= 1e-5 && std::abs(r.f1 - 48.0 / 53.0) < 1e-15, "F1 " + fmt(r.f1, 17));
  if (v.pass) v.detail = "accuracy " + fmt(r.accuracy, 17) + ", F1 " + fmt(r.f1, 17);
  return v;
}

struct ToyRun {
  std::vector<train::EpochMetrics> mlm, ppi;
  double inference_accuracy = 0;
  std::string checkpoint;
};

ToyRun toy_run(std::uint64_t seed) {
  ToyRun out;
  train::TrainConfig tc;
  tc.seed = seed;
  const auto mc = model::EncoderConfig::toy();
  model::EncoderWeights<float> w(mc, seed);
  out.mlm = train::pretrain_mlm(train::synthetic_corpus(64, seed), tc, w, {});
  const auto data = train::synthetic_pairs(32, seed + 1);
  const auto table = seq::make_table(data.sequences);
  out.ppi = train::train_ppi(data.pairs, table, tc, w, {});
  out.inference_accuracy = eval::evaluate(w, data.pairs, table).accuracy;
  std::ostringstream bytes;
  model::save_checkpoint(bytes, w, {{"seed", std::to_string(seed)}});
  out.checkpoint = bytes.str();
  return out;
}

constexpr std::uint64_t kToySeed = 42;
ToyRun first_toy_run;

Verdict toy_end_to_end() {
  Verdict v;
  first_toy_run = toy_run(kToySeed);
  const auto& r = first_toy_run;
  v.expect(r.mlm.size() == 50 && r.ppi.size() == 15, "epoch counts");
  const double first = r.mlm.front().mean_loss, last = r.mlm.back().mean_loss;
  v.expect(last < first, "MLM loss " + fmt(first) + " -> " + fmt(last));
  const double acc = r.ppi.back().accuracy;
  v.expect(acc >= 0.95, "final training accuracy " + fmt(acc));
  if (v.pass) {
    v.detail = "MLM loss " + fmt(first, 4) + " -> " + fmt(last, 4) + ", final training accuracy " + fmt(acc, 4) +
               ", inference accuracy " + fmt(r.inference_accuracy, 4);
  }
  return v;
}

Verdict determinism() {
  Verdict v;
  if (first_toy_run.checkpoint.empty()) first_toy_run = toy_run(kToySeed);
  const auto again = toy_run(kToySeed);
  v.expect(again.checkpoint == first_toy_run.checkpoint, "checkpoints from identical runs differ");

  std::istringstream in(first_toy_run.checkpoint);
  const auto loaded = model::load_checkpoint(in);
  std::ostringstream resaved;
  model::save_checkpoint(resaved, loaded.weights, loaded.metadata);
  v.expect(resaved.str() == first_toy_run.checkpoint, "save/load/save changed bytes");
  if (v.pass) v.detail = std::to_string(first_toy_run.checkpoint.size()) + "-byte checkpoints identical, round trip exact";
  return v;
}

Verdict action_space() {
  Verdict v;
  num::CounterRng rng(4);
  const auto s0 = test::random_protein(rng, 1273);
  const auto n = search::enumerate_variants(s0, all_positions(1273)).size();
  v.expect(n == 25460, "enumerated " + std::to_string(n));
  search::SearchStats stats;
  search::greedy_search(s0, test::w_count_scorer(), search_config(100000, 10, 5), &stats);
  const std::vector<std::size_t> expected = {25460, 25440, 25420, 25400, 25380};
  v.expect(stats.batch_sizes == expected, "batch sizes do not shrink by 20 per commit");
  if (v.pass) v.detail = "25460 variants at L=1273, batches 25460..25380 over 5 commits";
  return v;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> check;
  double budget_seconds;  // 0: no runtime bound
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "gradient correctness", gradients, 60},
      {2, "attention normalization", attention, 0},
      {3, "BLOSUM distance", blosum, 0},
      {4, "masking statistics", masking, 0},
      {5, "SAM step", sam, 0},
      {6, "search vs oracle", search_oracle, 120},
      {7, "metric arithmetic", metrics, 0},
      {8, "toy end-to-end", toy_end_to_end, 300},
      {9, "determinism", determinism, 0},
      {10, "action-space arithmetic", action_space, 0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && seconds > c.budget_seconds) {
      v.expect(false, "took " + fmt(seconds) + " s, budget " + fmt(c.budget_seconds) + " s");
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << c.id << "  " << std::left
              << std::setw(26) << c.name << std::right << std::fixed << std::setprecision(2) << std::setw(7) << seconds
              << " s  " << v.detail << std::defaultfloat << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}
