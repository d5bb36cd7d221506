#include "oppi/cli/app.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <deque>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "oppi/cli/run_config.hpp"
#include "oppi/error.hpp"
#include "oppi/eval/metrics.hpp"
#include "oppi/model/checkpoint.hpp"
#include "oppi/search/search.hpp"
#include "oppi/seqcore/blosum.hpp"
#include "oppi/seqcore/fasta.hpp"
#include "oppi/train/synthetic.hpp"
#include "oppi/train/trainer.hpp"

namespace oppi::cli {

namespace {

// Flags that map one-to-one onto configuration keys; applied after --config and --set.
struct KeyedFlags {
  std::deque<std::pair<std::string, std::string>> values;  // stable addresses for CLI11

  void bind(CLI::App& cmd, const std::string& flag, const std::string& key, const std::string& help) {
    auto* slot = &values.emplace_back(key, std::string()).second;
    cmd.add_option(flag, *slot, help);
  }
};

std::string shortest(double v) {
  char buf[64];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

const std::string& require(const RunConfig& cfg, std::string_view key, std::string_view command) {
  const auto& v = cfg.get(key);
  if (v.empty()) throw ConfigError(std::string(command) + " needs " + std::string(key) + " (flag --" + std::string(key) +
                                   " or config key)");
  return v;
}

std::vector<seq::ProteinSequence> read_all(const std::vector<std::string>& paths) {
  std::vector<seq::ProteinSequence> out;
  for (const auto& p : paths) {
    auto records = seq::read_fasta_file(p);
    out.insert(out.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
  }
  return out;
}

seq::ProteinSequence first_record(const std::string& path) {
  auto records = seq::read_fasta_file(path);
  if (records.empty()) throw DataError(path + " holds no FASTA records");
  return std::move(records.front());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  return f;
}

/// Tees metrics lines to `out` and, when configured, a log file.
class MetricsLog {
 public:
  MetricsLog(std::ostream& out, const std::string& path) : out_(out) {
    if (!path.empty()) file_ = open_out(path);
  }
  void operator()(const train::EpochMetrics& m) {
    const auto line = train::format_metrics(m);
    out_ << line << '\n';
    if (file_.is_open()) file_ << line << '\n';
  }

 private:
  std::ostream& out_;
  std::ofstream file_;
};

std::map<std::string, std::string> run_metadata(const RunConfig& cfg, std::string_view phase, std::size_t epochs) {
  return {{"phase", std::string(phase)}, {"seed", cfg.get("seed")}, {"epochs", std::to_string(epochs)}};
}

int cmd_pretrain(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto corpus = seq::read_fasta_file(require(cfg, "corpus", "pretrain"));
  const auto& out_path = require(cfg, "out", "pretrain");
  const auto tc = cfg.training();
  model::EncoderWeights<float> weights(cfg.encoder(), cfg.seed());
  MetricsLog log(out, cfg.get("metrics"));
  train::pretrain_mlm(corpus, tc, weights, std::ref(log));
  model::save_checkpoint(out_path, weights, run_metadata(cfg, "mlm", tc.mlm_epochs));
  err << "wrote " << out_path << '\n';
  return kExitOk;
}

int cmd_finetune(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto pairs = seq::read_pairs_file(require(cfg, "pairs", "finetune"));
  require(cfg, "fasta", "finetune");
  const auto table = seq::make_table(read_all(cfg.list("fasta")));
  const auto& out_path = require(cfg, "out", "finetune");
  const auto tc = cfg.training();
  const auto ec = cfg.encoder();
  auto weights = cfg.has_value("init") ? model::load_checkpoint(cfg.get("init"), ec).weights
                                       : model::EncoderWeights<float>(ec, cfg.seed());
  MetricsLog log(out, cfg.get("metrics"));
  train::train_ppi(pairs, table, tc, weights, std::ref(log));
  model::save_checkpoint(out_path, weights, run_metadata(cfg, "ppi", tc.ppi_epochs));
  err << "wrote " << out_path << '\n';
  return kExitOk;
}

int cmd_score(const RunConfig& cfg, std::ostream& out) {
  const auto ckpt = model::load_checkpoint(require(cfg, "model", "score"));
  const auto viruses = seq::read_fasta_file(require(cfg, "virus", "score"));
  const auto hosts = seq::read_fasta_file(require(cfg, "host", "score"));
  std::vector<std::vector<double>> by_host;
  for (const auto& h : hosts) by_host.push_back(search::ModelScorer(ckpt.weights, h, cfg.threads()).score(viruses));
  for (std::size_t v = 0; v < viruses.size(); ++v) {
    for (std::size_t h = 0; h < hosts.size(); ++h) {
      out << viruses[v].id() << '\t' << hosts[h].id() << '\t' << shortest(by_host[h][v]) << '\n';
    }
  }
  return kExitOk;
}

int cmd_search(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto ckpt = model::load_checkpoint(require(cfg, "model", "search"));
  const auto s0 = first_record(require(cfg, "s0", "search"));
  const auto host = first_record(require(cfg, "host", "search"));
  const auto sc = cfg.search();
  const search::ModelScorer scorer(ckpt.weights, host, cfg.threads());

  search::SearchStats stats;
  std::vector<search::Candidate> found;
  if (cfg.get("algo") == "beam") {
    found = search::beam_search(s0, scorer, sc, &stats);
  } else {
    found.push_back(search::greedy_search(s0, scorer, sc, &stats));
  }

  const auto emit = [&](const std::string& path, auto&& write) {
    if (path.empty()) {
      write(out);
    } else {
      auto f = open_out(path);
      write(f);
    }
  };
  emit(cfg.get("report"), [&](std::ostream& o) { search::write_report(o, found); });
  const std::string prefix = s0.id().empty() ? "variant" : s0.id();
  emit(cfg.get("variants"), [&](std::ostream& o) { search::write_variants_fasta(o, s0, found, prefix); });
  err << "search: " << stats.iterations << " iterations, stopped on " << stats.stop_reason << "; seed score "
      << shortest(scorer.score_one(s0)) << ", best " << shortest(found.front().score) << " at BLOSUM distance "
      << found.front().blosum_dist << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& format, std::ostream& out) {
  const auto ckpt = model::load_checkpoint(require(cfg, "model", "eval"));
  const auto pairs = seq::read_pairs_file(require(cfg, "pairs", "eval"));
  require(cfg, "fasta", "eval");
  const auto table = seq::make_table(read_all(cfg.list("fasta")));
  const auto report = eval::evaluate(ckpt.weights, pairs, table, cfg.threshold(), cfg.threads());
  if (format != "kv") eval::write_text(out, report);
  if (format == "both") out << '\n';
  if (format != "text") eval::write_key_values(out, report);
  return kExitOk;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  std::istringstream reread(bytes.str());
  const auto ckpt = model::load_checkpoint(reread);
  out << "digest=" << hex(fnv1a(bytes.str())) << '\n';
  for (const auto& [k, v] : ckpt.config.to_map()) out << k << '=' << v << '\n';
  for (const auto& [k, v] : ckpt.metadata) out << k << '=' << v << '\n';
  out << "parameters=" << ckpt.weights.parameter_count() << '\n';
  for (const auto& p : ckpt.weights.params()) {
    const auto data = p.value.data();
    const std::string_view raw(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(float));
    out << p.name << '\t' << num::shape_str(p.value.shape()) << '\t' << hex(fnv1a(raw)) << '\n';
  }
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg, const std::string& corpus_out, const std::string& pairs_out,
              const std::string& fasta_out, std::size_t corpus_size, std::size_t pair_count, std::ostream& err) {
  const auto corpus = train::synthetic_corpus(corpus_size, cfg.seed());
  const auto data = train::synthetic_pairs(pair_count, cfg.seed() + 1);
  if (!corpus_out.empty()) {
    auto f = open_out(corpus_out);
    seq::write_fasta(f, corpus);
  }
  if (!fasta_out.empty()) {
    auto f = open_out(fasta_out);
    seq::write_fasta(f, data.sequences);
  }
  if (!pairs_out.empty()) {
    auto f = open_out(pairs_out);
    f << "# virus_id\thost_id\tlabel\n";
    for (const auto& p : data.pairs) f << p.virus_id << '\t' << p.host_id << '\t' << p.label << '\n';
  }
  err << "synthetic data: " << corpus.size() << " corpus sequences, " << data.pairs.size() << " pairs\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, std::string_view env_seed) {
  CLI::App app{"Protein interaction scorer: MLM pretraining, PPI fine-tuning, scoring and mutation search"};
  app.name("oppi");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  bool toy = false;
  KeyedFlags global;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--set", overrides, "override one key, key=value (repeatable)");
  app.add_flag("--toy", toy, "small model preset (d_model 32, 2 layers, 2 heads, max_len 64)");
  global.bind(app, "--threads", "threads", "scoring workers");
  global.bind(app, "--seed", "seed", "random seed");

  KeyedFlags flags;
  auto* pretrain = app.add_subcommand("pretrain", "masked-language-model pretraining");
  flags.bind(*pretrain, "--corpus", "corpus", "FASTA corpus");
  flags.bind(*pretrain, "--out", "out", "checkpoint to write");
  flags.bind(*pretrain, "--metrics", "metrics", "metrics log");
  flags.bind(*pretrain, "--epochs", "mlm_epochs", "pretraining epochs");

  auto* finetune = app.add_subcommand("finetune", "interaction fine-tuning");
  flags.bind(*finetune, "--init", "init", "starting checkpoint");
  flags.bind(*finetune, "--pairs", "pairs", "pairs table");
  flags.bind(*finetune, "--fasta", "fasta", "comma-separated FASTA files");
  flags.bind(*finetune, "--out", "out", "checkpoint to write");
  flags.bind(*finetune, "--metrics", "metrics", "metrics log");
  flags.bind(*finetune, "--epochs", "ppi_epochs", "fine-tuning epochs");

  auto* score = app.add_subcommand("score", "score every virus against every host");
  flags.bind(*score, "--model", "model", "checkpoint");
  flags.bind(*score, "--virus", "virus", "virus FASTA");
  flags.bind(*score, "--host", "host", "host FASTA");

  auto* searchcmd = app.add_subcommand("search", "propose higher-scoring variants of a seed sequence");
  flags.bind(*searchcmd, "--model", "model", "checkpoint");
  flags.bind(*searchcmd, "--s0", "s0", "seed FASTA (first record)");
  flags.bind(*searchcmd, "--host", "host", "host FASTA (first record)");
  flags.bind(*searchcmd, "--algo", "algo", "greedy or beam");
  flags.bind(*searchcmd, "--beamwidth", "beamwidth", "beam width");
  flags.bind(*searchcmd, "--blosum-cap", "blosum_cap", "BLOSUM distance budget");
  flags.bind(*searchcmd, "--max-iterations", "max_iterations", "iteration bound");
  flags.bind(*searchcmd, "--report", "report", "step report file (default stdout)");
  flags.bind(*searchcmd, "--variants", "variants", "variant FASTA file (default stdout)");

  std::string eval_format = "text";
  auto* evalcmd = app.add_subcommand("eval", "accuracy, F1 and confusion matrix on labelled pairs");
  flags.bind(*evalcmd, "--model", "model", "checkpoint");
  flags.bind(*evalcmd, "--pairs", "pairs", "pairs table");
  flags.bind(*evalcmd, "--fasta", "fasta", "comma-separated FASTA files");
  flags.bind(*evalcmd, "--threshold", "threshold", "decision threshold");
  evalcmd->add_option("--format", eval_format, "text, kv or both")->check(CLI::IsMember({"text", "kv", "both"}));

  auto* blosum = app.add_subcommand("blosum", "print the BLOSUM62 matrix");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "checkpoint header and per-tensor hashes");
  inspect->add_option("checkpoint", inspect_path, "checkpoint file")->required();

  std::string corpus_out, pairs_out, fasta_out;
  std::size_t corpus_size = 64, pair_count = 32;
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus and labelled pairs");
  synth->add_option("--corpus-out", corpus_out, "corpus FASTA");
  synth->add_option("--pairs-out", pairs_out, "pairs table");
  synth->add_option("--fasta-out", fasta_out, "FASTA resolving the pairs");
  synth->add_option("--corpus-size", corpus_size, "corpus sequences")->capture_default_str();
  synth->add_option("--pairs", pair_count, "labelled pairs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    }
    err << "oppi: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  try {
    RunConfig cfg(env_seed);
    if (toy) cfg.apply_toy();
    if (!config_path.empty()) cfg.apply_file(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    for (const auto* set : {&global, &flags}) {
      for (const auto& [key, value] : set->values) {
        if (!value.empty()) cfg.set(key, value);
      }
    }

    if (blosum->parsed()) {
      seq::Blosum62::print(out);
      return kExitOk;
    }
    if (inspect->parsed()) return cmd_inspect(inspect_path, out);
    if (synth->parsed()) return cmd_synth(cfg, corpus_out, pairs_out, fasta_out, corpus_size, pair_count, err);

    cfg.echo(err, "# ");
    if (pretrain->parsed()) return cmd_pretrain(cfg, out, err);
    if (finetune->parsed()) return cmd_finetune(cfg, out, err);
    if (score->parsed()) return cmd_score(cfg, out);
    if (searchcmd->parsed()) return cmd_search(cfg, out, err);
    if (evalcmd->parsed()) return cmd_eval(cfg, eval_format, out);
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "oppi: configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "oppi: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "oppi: numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "oppi: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "oppi: error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace oppi::cli
