// Copyright 2026 The NAPO Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "napo/aux_rec.h"
#include "napo/checkpoint.h"
#include "napo/data.h"
#include "napo/errors.h"
#include "napo/eval.h"
#include "napo/policy.h"
#include "napo/sharing.h"
#include "napo/trainer.h"

namespace napo::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kSplitFiles[] = {"catalog.tsv", "train.tsv", "val.tsv", "test.tsv",
                                       "pop.tsv"};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw UsageError("missing " + what + ": '" + path.string() + "' does not exist");
  }
}

// Recorded before any work starts; never rewritten by the same command.
class RunManifest {
 public:
  RunManifest(std::string command, uint64_t seed) {
    doc_["tool"] = "napo";
    doc_["version"] = kVersion;
    doc_["command"] = std::move(command);
    doc_["seed"] = seed;
    doc_["inputs"] = json::object();
    doc_["artifacts"] = json::array();
  }
  void config(json c) { doc_["config"] = std::move(c); }
  void input_file(const std::string& label, const fs::path& path) {
    require_file(path, label + " input");
    doc_["inputs"][label] = fnv1a_file(path.string());
  }
  void input_dataset(const fs::path& dir) {
    for (const char* name : kSplitFiles) input_file(std::string("data/") + name, dir / name);
  }
  void artifact(const std::string& name) { doc_["artifacts"].push_back(name); }
  void write(const fs::path& dir) const {
    fs::create_directories(dir);
    write_file_atomic(dir / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  json doc_;
};

DatasetSplit load_dataset(const fs::path& dir) {
  for (const char* name : kSplitFiles) require_file(dir / name, "dataset file");
  return load_split(dir);
}

PolicyParams load_policy(const fs::path& path, const std::string& what) {
  require_file(path, what);
  return PolicyParams::from_checkpoint(load_checkpoint(path));
}

AuxParams load_aux(const fs::path& path) {
  require_file(path, "auxiliary recommender checkpoint (run train-aux first)");
  return AuxParams::from_checkpoint(load_checkpoint(path));
}

std::vector<TrainingInstance> pick_split(const DatasetSplit& split, const std::string& name) {
  if (name == "test") return split.test;
  if (name == "validation" || name == "val") return split.validation;
  if (name == "train") return split.train;
  throw UsageError("unknown split '" + name + "' (expected train|validation|test)");
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

// ---- gen-data / ingest ----

struct DataFlags {
  size_t users = 100;
  size_t items = 200;
  size_t seq_len = 12;
  size_t latent_dim = 4;
  uint64_t seed = 0;
  std::string mode = "single";
  size_t candidates = 20;
  size_t n_neg = 3;
  size_t min_interactions = 2;
  bool sliding_window = false;
  std::string interactions;
  std::string items_file;
  std::string out;
};

SplitConfig split_config(const DataFlags& f) {
  SplitConfig c;
  c.candidate_size = f.candidates;
  c.n_neg = f.n_neg;
  c.min_interactions = f.min_interactions;
  c.sliding_window = f.sliding_window;
  c.seed = f.seed;
  return c;
}

json split_config_json(const DataFlags& f) {
  return {{"candidate_size", f.candidates},
          {"n_neg", f.n_neg},
          {"min_interactions", f.min_interactions},
          {"sliding_window", f.sliding_window},
          {"mode", f.mode}};
}

int cmd_gen_data(const DataFlags& f, std::ostream& out) {
  SyntheticConfig sc;
  sc.n_users = f.users;
  sc.n_items = f.items;
  sc.seq_len = f.seq_len;
  sc.latent_dim = f.latent_dim;
  sc.seed = f.seed;
  sc.mode = parse_response_mode(f.mode);
  RunManifest manifest("gen-data", f.seed);
  json cfg = split_config_json(f);
  cfg["users"] = f.users;
  cfg["items"] = f.items;
  cfg["seq_len"] = f.seq_len;
  cfg["latent_dim"] = f.latent_dim;
  manifest.config(cfg);
  for (const char* name : kSplitFiles) manifest.artifact(name);
  manifest.write(f.out);
  const SyntheticCorpus corpus = generate_synthetic(sc, split_config(f));
  save_split(corpus.split, f.out);
  out << "wrote " << corpus.split.train.size() << "/" << corpus.split.validation.size() << "/"
      << corpus.split.test.size() << " train/val/test instances to " << f.out << "\n";
  return kExitOk;
}

int cmd_ingest(const DataFlags& f, std::ostream& out) {
  RunManifest manifest("ingest", f.seed);
  manifest.config(split_config_json(f));
  manifest.input_file("interactions", f.interactions);
  manifest.input_file("items", f.items_file);
  for (const char* name : kSplitFiles) manifest.artifact(name);
  manifest.write(f.out);
  IngestStats stats;
  const DatasetSplit split =
      ingest(f.interactions, f.items_file, split_config(f), parse_response_mode(f.mode), &stats);
  save_split(split, f.out);
  out << "ingested " << stats.interactions << " interactions; kept " << stats.users_kept
      << " users, dropped " << stats.users_dropped << "\n";
  return kExitOk;
}

// ---- train-aux ----

struct AuxFlags {
  std::string data;
  std::string out;
  AuxTrainConfig config;
};

int cmd_train_aux(const AuxFlags& f, std::ostream& out) {
  const AuxTrainConfig& c = f.config;
  RunManifest manifest("train-aux", c.seed);
  manifest.config({{"dim", c.dim},
                   {"epochs", c.epochs},
                   {"lr", c.lr},
                   {"n_negatives", c.n_negatives},
                   {"temperature", c.temperature},
                   {"batch_size", c.batch_size}});
  manifest.input_dataset(f.data);
  manifest.artifact("aux.ckpt");
  manifest.artifact("report.jsonl");
  manifest.write(f.out);
  const DatasetSplit split = load_dataset(f.data);
  const AuxTrainResult result = train_aux(split, c);
  save_checkpoint(result.params.to_checkpoint(), fs::path(f.out) / "aux.ckpt");
  std::ostringstream report;
  for (size_t e = 0; e < result.epoch_losses.size(); ++e) {
    report << json{{"kind", "epoch"}, {"epoch", e}, {"mean_loss", result.epoch_losses[e]}}.dump()
           << "\n";
  }
  write_text(fs::path(f.out) / "report.jsonl", report.str());
  const EvalReport val = evaluate_aux(result.params, split, split.validation.empty()
                                                               ? std::span(split.test)
                                                               : std::span(split.validation));
  out << "aux trained; validation HitRatio@1 " << fmt_double(val.hit_ratio_1) << "\n";
  return kExitOk;
}

// ---- train ----

struct TrainFlags {
  std::string data;
  std::string out;
  std::string config_file;
  std::string sft;
  std::string aux;
  std::string grid;
  // Raw flag values; only applied when given on the command line.
  std::string loss;
  size_t n_neg = 0;
  double rho = 0;
  double gamma0 = 0;
  double alpha = 0;
  double momentum = 0;
  double beta = 0;
  bool length_norm = false;
  std::string share_grad;
  size_t batch_size = 0;
  size_t epochs = 0;
  double lr = 0;
  std::string optimizer;
  uint64_t seed = 0;
  size_t dim = 0;
  double grad_clip = 0;
  bool reset_margin = false;
};

struct TrainOptions {
  CLI::Option* loss;
  CLI::Option* n_neg;
  CLI::Option* rho;
  CLI::Option* gamma0;
  CLI::Option* alpha;
  CLI::Option* momentum;
  CLI::Option* beta;
  CLI::Option* length_norm;
  CLI::Option* share_grad;
  CLI::Option* batch_size;
  CLI::Option* epochs;
  CLI::Option* lr;
  CLI::Option* optimizer;
  CLI::Option* seed;
  CLI::Option* dim;
  CLI::Option* grad_clip;
  CLI::Option* reset_margin;
};

TrainConfig resolve_train_config(const TrainFlags& f, const TrainOptions& o) {
  TrainConfig c;
  if (!f.config_file.empty()) {
    require_file(f.config_file, "config file");
    std::ifstream in(f.config_file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file '" + f.config_file + "' is not valid JSON: " + e.what());
    }
    c = train_config_from_json(j, c);
  }
  if (o.loss->count()) c.loss_kind = parse_loss_kind(f.loss);
  if (o.n_neg->count()) c.n_neg = f.n_neg;
  if (o.rho->count()) c.rho = f.rho;
  if (o.gamma0->count()) c.gamma0 = f.gamma0;
  if (o.alpha->count()) c.alpha = f.alpha;
  if (o.momentum->count()) c.momentum = f.momentum;
  if (o.beta->count()) c.beta = f.beta;
  if (o.length_norm->count()) c.length_normalize = f.length_norm;
  if (o.share_grad->count()) c.gradient_linkage = parse_gradient_linkage(f.share_grad);
  if (o.batch_size->count()) c.batch_size = f.batch_size;
  if (o.epochs->count()) c.epochs = f.epochs;
  if (o.lr->count()) c.lr = f.lr;
  if (o.optimizer->count()) c.optimizer_kind = parse_optimizer_kind(f.optimizer);
  if (o.seed->count()) c.rng_seed = f.seed;
  if (o.dim->count()) c.policy_dim = f.dim;
  if (o.grad_clip->count()) c.grad_clip = f.grad_clip;
  if (o.reset_margin->count()) c.reset_margin_each_epoch = f.reset_margin;
  c.validate();
  return c;
}

struct Prerequisites {
  std::optional<PolicyParams> sft;
  std::optional<AuxParams> aux;
};

Prerequisites load_prerequisites(const TrainConfig& c, const TrainFlags& f) {
  Prerequisites p;
  if (c.loss_kind != LossKind::kSft) {
    if (c.uses_reference() && f.sft.empty()) {
      throw UsageError("loss '" + std::string(to_string(c.loss_kind)) +
                       "' needs the SFT reference checkpoint: pass --sft <policy.ckpt>");
    }
    if (!f.sft.empty()) p.sft = load_policy(f.sft, "SFT checkpoint");
    if (c.needs_aux()) {
      if (f.aux.empty()) {
        throw UsageError("loss '" + std::string(to_string(c.loss_kind)) +
                         "' with rho > 0 or alpha > 0 needs the auxiliary recommender: pass "
                         "--aux <aux.ckpt>");
      }
      p.aux = load_aux(f.aux);
    }
  }
  return p;
}

TrainResult run_training(const TrainConfig& c, const DatasetSplit& split, const Prerequisites& p) {
  if (c.loss_kind == LossKind::kSft) {
    PolicyParams init =
        PolicyParams::init(split.catalog.vocab_size(), c.policy_dim, c.beta, c.rng_seed);
    return train_sft(c, split, std::move(init));
  }
  const PolicyParams init =
      p.sft ? *p.sft
            : PolicyParams::init(split.catalog.vocab_size(), c.policy_dim, c.beta, c.rng_seed);
  if (init.vocab_size != split.catalog.vocab_size()) {
    throw DataError("checkpoint vocabulary does not match the dataset");
  }
  return train_preference(c, split, init, p.aux ? &*p.aux : nullptr, p.sft ? &*p.sft : nullptr);
}

std::string slug(const std::string& name) {
  std::string s;
  for (char ch : name) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!s.empty() && s.back() != '_') {
      s += '_';
    }
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

void add_train_inputs(RunManifest& m, const TrainFlags& f) {
  m.input_dataset(f.data);
  if (!f.config_file.empty()) m.input_file("config", f.config_file);
  if (!f.sft.empty() && fs::exists(f.sft)) m.input_file("sft", f.sft);
  if (!f.aux.empty() && fs::exists(f.aux)) m.input_file("aux", f.aux);
}

int cmd_train(const TrainFlags& f, const TrainOptions& o, std::ostream& out) {
  const TrainConfig base = resolve_train_config(f, o);
  for (const char* name : kSplitFiles) require_file(fs::path(f.data) / name, "dataset file");
  const fs::path dir = f.out;

  if (!f.grid.empty()) {
    if (f.grid != "table4") throw UsageError("unknown grid '" + f.grid + "' (expected table4)");
    if (f.sft.empty()) throw UsageError("--grid needs the SFT checkpoint: pass --sft <policy.ckpt>");
    if (f.aux.empty()) throw UsageError("--grid needs the auxiliary recommender: pass --aux <aux.ckpt>");
    const auto rows = ablation_grid(base);
    RunManifest manifest("train --grid table4", base.rng_seed);
    json cfgs = json::object();
    for (const auto& row : rows) cfgs[row.name] = to_json(row.config);
    manifest.config(cfgs);
    add_train_inputs(manifest, f);
    for (const auto& row : rows) {
      manifest.artifact(slug(row.name) + "/policy.ckpt");
      manifest.artifact(slug(row.name) + "/report.jsonl");
    }
    manifest.artifact("eval.json");
    manifest.write(dir);

    const DatasetSplit split = load_dataset(f.data);
    const PolicyParams sft = load_policy(f.sft, "SFT checkpoint");
    const AuxParams aux = load_aux(f.aux);
    std::vector<NamedReport> reports;
    reports.push_back({"SFT", evaluate_policy(sft, split, split.test)});
    for (const auto& row : rows) {
      TrainResult r = train_preference(row.config, split, sft, &aux, &sft);
      const fs::path rdir = dir / slug(row.name);
      fs::create_directories(rdir);
      save_checkpoint(r.params.to_checkpoint(), rdir / "policy.ckpt");
      write_text(rdir / "report.jsonl", r.report.to_jsonl());
      reports.push_back({row.name, evaluate_policy(r.params, split, split.test)});
    }
    json ej = json::array();
    for (const auto& nr : reports) {
      json row = {{"name", nr.name}, {"report", to_json(nr.report)}};
      if (nr.name != "SFT") {
        row["relative_improvement"] = to_json(relative_improvement(nr.report, reports[0].report));
      }
      ej.push_back(row);
    }
    write_text(dir / "eval.json", ej.dump(2) + "\n");
    out << format_table(reports);
    return kExitOk;
  }

  RunManifest manifest("train", base.rng_seed);
  manifest.config(to_json(base));
  add_train_inputs(manifest, f);
  manifest.artifact("policy.ckpt");
  manifest.artifact("report.jsonl");
  const Prerequisites prereq = load_prerequisites(base, f);
  manifest.write(dir);
  const DatasetSplit split = load_dataset(f.data);
  TrainResult result = run_training(base, split, prereq);
  save_checkpoint(result.params.to_checkpoint(), dir / "policy.ckpt");
  result.report.checkpoint_paths.push_back("policy.ckpt");
  write_text(dir / "report.jsonl", result.report.to_jsonl());
  out << "trained " << to_string(base.loss_kind) << " for " << base.epochs << " epochs";
  if (!result.report.epoch_mean_loss.empty()) {
    out << "; final epoch loss " << fmt_double(result.report.epoch_mean_loss.back());
  }
  out << "\n";
  return kExitOk;
}

// ---- eval ----

struct EvalFlags {
  std::string data;
  std::string policy;
  std::string aux;
  std::string baseline;
  std::string split = "test";
  std::string out;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  if (f.policy.empty() == f.aux.empty()) {
    throw UsageError("pass exactly one of --policy <policy.ckpt> or --aux <aux.ckpt>");
  }
  RunManifest manifest("eval", 0);
  manifest.config({{"split", f.split}});
  manifest.input_dataset(f.data);
  if (!f.policy.empty()) manifest.input_file("policy", f.policy);
  if (!f.aux.empty()) manifest.input_file("aux", f.aux);
  if (!f.baseline.empty()) manifest.input_file("baseline", f.baseline);
  manifest.artifact("eval.json");
  manifest.write(f.out);

  const DatasetSplit split = load_dataset(f.data);
  const std::vector<TrainingInstance> instances = pick_split(split, f.split);
  std::vector<NamedReport> rows;
  if (!f.policy.empty()) {
    rows.push_back({"method", evaluate_policy(load_policy(f.policy, "policy checkpoint"), split,
                                              instances)});
  } else {
    rows.push_back({"aux", evaluate_aux(load_aux(f.aux), split, instances)});
  }
  json doc = {{"split", f.split}, {"method", to_json(rows[0].report)}};
  if (!f.baseline.empty()) {
    rows.push_back({"baseline", evaluate_policy(load_policy(f.baseline, "baseline checkpoint"),
                                                split, instances)});
    const RelativeImprovement rel = relative_improvement(rows[0].report, rows[1].report);
    doc["baseline"] = to_json(rows[1].report);
    doc["relative_improvement"] = to_json(rel);
  }
  write_text(fs::path(f.out) / "eval.json", doc.dump(2) + "\n");
  out << format_table(rows);
  if (doc.contains("relative_improvement")) {
    const auto& rel = doc["relative_improvement"];
    out << "relative to baseline: HitRatio@1 " << fmt_double(rel["hit_ratio_1_pct"].get<double>())
        << "%, ValidRatio " << fmt_double(rel["valid_ratio_pct"].get<double>()) << "%, PopBias "
        << fmt_double(rel["pop_bias_expectation_pct"].get<double>()) << "%\n";
  }
  return kExitOk;
}

// ---- bench ----

struct BenchFlags {
  std::string data;
  std::string out;
  std::string aux;
  std::vector<size_t> n_negs = {1, 3, 7, 19};
  std::vector<double> rhos = {0.0, 0.7};
  size_t batch_size = 16;
  size_t batches = 4;
  size_t oracle_max_batch = 8;
  size_t dim = 16;
  uint64_t seed = 0;
};

size_t param_bytes(const PolicyParams& p) {
  size_t n = 0;
  for (const Tensor* t : p.tensors()) n += t->size();
  return n * sizeof(double);
}

int cmd_bench(const BenchFlags& f, std::ostream& out) {
  RunManifest manifest("bench", f.seed);
  manifest.config({{"n_neg", f.n_negs},
                   {"rho", f.rhos},
                   {"batch_size", f.batch_size},
                   {"batches", f.batches},
                   {"oracle_max_batch", f.oracle_max_batch},
                   {"dim", f.dim}});
  manifest.input_dataset(f.data);
  if (!f.aux.empty()) manifest.input_file("aux", f.aux);
  manifest.artifact("bench.tsv");
  manifest.write(f.out);

  const DatasetSplit split = load_dataset(f.data);
  const bool any_sharing = std::any_of(f.rhos.begin(), f.rhos.end(), [](double r) { return r > 0; });
  std::optional<AuxParams> aux;
  if (any_sharing) {
    if (f.aux.empty()) throw UsageError("rho > 0 needs the auxiliary recommender: pass --aux <aux.ckpt>");
    aux = load_aux(f.aux);
  }
  const PolicyParams params =
      PolicyParams::init(split.catalog.vocab_size(), f.dim, 1.0, f.seed);
  const size_t pbytes = param_bytes(params);

  std::ostringstream tsv;
  tsv << "mode\tn_neg\trho\tK\tbatch_size\tbatches\tf_calls_per_batch\tg_calls_per_batch\t"
         "effective_negatives_mean\tpeak_live_scores\tparam_bytes\n";
  for (size_t n_neg : f.n_negs) {
    TrainConfig c;
    c.loss_kind = LossKind::kNapo;
    c.n_neg = n_neg;
    c.batch_size = f.batch_size;
    c.rng_seed = f.seed;
    const std::vector<TrainingInstance> instances = prepare_instances(c, split);
    auto batch_idx = make_batches(instances.size(), f.batch_size, f.seed, 0);
    // Only full batches, so per-batch counters are comparable across points.
    std::erase_if(batch_idx, [&](const auto& b) { return b.size() != f.batch_size; });
    if (batch_idx.size() > f.batches) batch_idx.resize(f.batches);
    if (batch_idx.empty()) throw DataError("training split smaller than one benchmark batch");
    std::vector<std::vector<TrainingInstance>> batches;
    for (const auto& idx : batch_idx) {
      std::vector<TrainingInstance> b;
      for (size_t i : idx) b.push_back(instances[i]);
      batches.push_back(std::move(b));
    }
    const double nb = static_cast<double>(batches.size());

    for (double rho : f.rhos) {
      OpCounters total;
      double eff = 0.0;
      size_t peak = 0;
      for (const auto& batch : batches) {
        ForwardPass pass(params, false);
        const BatchScores handles = score_batch(pass, split.catalog, batch);
        std::vector<std::vector<size_t>> partners(batch.size());
        if (rho > 0) {
          std::vector<std::vector<ItemId>> seqs;
          for (const auto& inst : batch) seqs.push_back(inst.prompt_context);
          partners = select_share_partners(*aux, seqs, rho);
        }
        AssembleStats stats;
        assemble_hybrid_sets(own_negatives(pass, handles, batch), partners,
                             GradientLinkage::kFlowThrough, &stats);
        total.f_calls += pass.counters().f_calls;
        total.g_calls += pass.counters().g_calls;
        eff += stats.effective_negatives_mean;
        peak = std::max(peak, pass.num_scores());
      }
      tsv << "shared\t" << n_neg << '\t' << fmt_double(rho) << '\t'
          << top_k_count(f.batch_size, rho) << '\t' << f.batch_size << '\t' << batches.size()
          << '\t' << fmt_double(total.f_calls / nb) << '\t' << fmt_double(total.g_calls / nb)
          << '\t' << fmt_double(eff / nb) << '\t' << peak << '\t' << pbytes << '\n';
    }

    if (f.batch_size > f.oracle_max_batch) {
      out << "dense oracle skipped at n_neg=" << n_neg << ": batch " << f.batch_size
          << " exceeds cap " << f.oracle_max_batch << "\n";
      continue;
    }
    OpCounters total;
    size_t peak = 0;
    for (const auto& batch : batches) {
      const DenseOracleResult r =
          naive_dense_oracle(params, split.catalog, batch, f.oracle_max_batch);
      total.f_calls += r.counters.f_calls;
      total.g_calls += r.counters.g_calls;
      size_t live = r.positives.size();
      for (const auto& row : r.scores) {
        for (const auto& col : row) live += col.size();
      }
      peak = std::max(peak, live);
    }
    const size_t b = f.batch_size;
    tsv << "dense\t" << n_neg << "\t1\t" << (b - 1) << '\t' << b << '\t' << batches.size() << '\t'
        << fmt_double(total.f_calls / nb) << '\t' << fmt_double(total.g_calls / nb) << '\t'
        << (b * n_neg) << '\t' << peak << '\t' << pbytes << '\n';
  }
  write_text(fs::path(f.out) / "bench.tsv", tsv.str());
  out << tsv.str();
  return kExitOk;
}

}  // namespace

std::string fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Negative-aware preference optimization toolkit", "napo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  DataFlags gen;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  g->add_option("--users", gen.users, "Number of users")->capture_default_str();
  g->add_option("--items", gen.items, "Number of items")->capture_default_str();
  g->add_option("--seq-len", gen.seq_len, "Interactions per user")->capture_default_str();
  g->add_option("--latent-dim", gen.latent_dim, "Latent preference width")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--mode", gen.mode, "Response mode")->check(CLI::IsMember({"single", "multi"}))
      ->capture_default_str();
  g->add_option("--candidates", gen.candidates, "Candidate set size")->capture_default_str();
  g->add_option("--n-neg", gen.n_neg, "Stored negatives per instance")->capture_default_str();
  g->add_flag("--sliding-window", gen.sliding_window, "One instance per prefix");
  g->add_option("--out", gen.out, "Output dataset directory")->required();

  DataFlags ing;
  auto* in = app.add_subcommand("ingest", "Build a dataset from TSV interaction logs");
  in->add_option("--interactions", ing.interactions, "user<TAB>item<TAB>timestamp file")
      ->required()->check(CLI::ExistingFile);
  in->add_option("--items", ing.items_file, "item<TAB>title file")->required()
      ->check(CLI::ExistingFile);
  in->add_option("--seed", ing.seed, "Random seed")->capture_default_str();
  in->add_option("--mode", ing.mode, "Response mode")->check(CLI::IsMember({"single", "multi"}))
      ->capture_default_str();
  in->add_option("--candidates", ing.candidates, "Candidate set size")->capture_default_str();
  in->add_option("--n-neg", ing.n_neg, "Stored negatives per instance")->capture_default_str();
  in->add_option("--min-interactions", ing.min_interactions, "Drop shorter users")
      ->capture_default_str();
  in->add_flag("--sliding-window", ing.sliding_window, "One instance per prefix");
  in->add_option("--out", ing.out, "Output dataset directory")->required();

  AuxFlags aux;
  auto* a = app.add_subcommand("train-aux", "Train the auxiliary sequential recommender");
  a->add_option("--data", aux.data, "Dataset directory")->required();
  a->add_option("--out", aux.out, "Run directory")->required();
  a->add_option("--dim", aux.config.dim, "Embedding width")->capture_default_str();
  a->add_option("--epochs", aux.config.epochs, "Epochs")->capture_default_str();
  a->add_option("--lr", aux.config.lr, "Learning rate")->capture_default_str();
  a->add_option("--seed", aux.config.seed, "Random seed")->capture_default_str();
  a->add_option("--negatives", aux.config.n_negatives, "Sampled negatives")->capture_default_str();

  TrainFlags tr;
  TrainOptions to{};
  auto* t = app.add_subcommand("train", "Run SFT or preference training");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Run directory")->required();
  t->add_option("--config", tr.config_file, "Flat JSON config; flags override its keys");
  t->add_option("--sft", tr.sft, "SFT checkpoint (initialization and reference)");
  t->add_option("--aux", tr.aux, "Auxiliary recommender checkpoint");
  t->add_option("--grid", tr.grid, "Run an ablation grid (table4)");
  to.loss = t->add_option("--loss", tr.loss, "sft|dpo|simpo|sdpo|napo");
  to.n_neg = t->add_option("--n-neg", tr.n_neg, "Own negatives per instance");
  to.rho = t->add_option("--rho", tr.rho, "Sharing ratio");
  to.gamma0 = t->add_option("--gamma0", tr.gamma0, "Base margin");
  to.alpha = t->add_option("--alpha", tr.alpha, "Margin sensitivity");
  to.momentum = t->add_option("--momentum", tr.momentum, "Margin baseline momentum");
  to.beta = t->add_option("--beta", tr.beta, "Score scale");
  to.length_norm = t->add_flag("--length-norm", tr.length_norm, "Length-normalize scores");
  to.share_grad = t->add_option("--share-grad", tr.share_grad, "flow|detach");
  to.batch_size = t->add_option("--batch-size", tr.batch_size, "Batch size");
  to.epochs = t->add_option("--epochs", tr.epochs, "Epochs");
  to.lr = t->add_option("--lr", tr.lr, "Learning rate");
  to.optimizer = t->add_option("--optimizer", tr.optimizer, "sgd|adam");
  to.seed = t->add_option("--seed", tr.seed, "Random seed");
  to.dim = t->add_option("--dim", tr.dim, "Policy width for a fresh initialization");
  to.grad_clip = t->add_option("--grad-clip", tr.grad_clip, "Global gradient norm cap");
  to.reset_margin = t->add_flag("--reset-margin", tr.reset_margin, "Reset R0 every epoch");

  EvalFlags ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--out", ev.out, "Run directory")->required();
  e->add_option("--policy", ev.policy, "Policy checkpoint");
  e->add_option("--aux", ev.aux, "Auxiliary recommender checkpoint");
  e->add_option("--baseline", ev.baseline, "Baseline policy checkpoint (usually SFT)");
  e->add_option("--split", ev.split, "train|validation|test")->capture_default_str();

  BenchFlags be;
  auto* b = app.add_subcommand("bench", "Count scoring work for shared and dense negatives");
  b->add_option("--data", be.data, "Dataset directory")->required();
  b->add_option("--out", be.out, "Run directory")->required();
  b->add_option("--aux", be.aux, "Auxiliary recommender checkpoint");
  b->add_option("--n-neg", be.n_negs, "n_neg sweep")->capture_default_str()->delimiter(',');
  b->add_option("--rho", be.rhos, "rho sweep")->capture_default_str()->delimiter(',');
  b->add_option("--batch-size", be.batch_size, "Batch size")->capture_default_str();
  b->add_option("--batches", be.batches, "Batches per point")->capture_default_str();
  b->add_option("--oracle-max-batch", be.oracle_max_batch, "Dense oracle batch cap")
      ->capture_default_str();
  b->add_option("--dim", be.dim, "Policy width")->capture_default_str();
  b->add_option("--seed", be.seed, "Random seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen_data(gen, out);
    if (in->parsed()) return cmd_ingest(ing, out);
    if (a->parsed()) return cmd_train_aux(aux, out);
    if (t->parsed()) return cmd_train(tr, to, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (b->parsed()) return cmd_bench(be, out);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& ex) {
    err << "numerical abort: " << ex.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << "\n";
    return kExitData;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace napo::cli
