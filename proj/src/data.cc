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

#include "napo/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "napo/checkpoint.h"
#include "napo/errors.h"

namespace napo {
namespace {

constexpr uint64_t kTagCandidates = 0x63616e64;  // "cand"
constexpr uint64_t kTagNegatives = 0x6e656773;   // "negs"
constexpr uint64_t kTagBatches = 0x62617463;     // "batc"

std::string title_key(std::span<const TokenId> tokens) {
  std::string key;
  for (TokenId t : tokens) {
    key += std::to_string(t);
    key += ' ';
  }
  return key;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

bool skip_line(const std::string& line) {
  return line.empty() || line[0] == '#' || line == "\r";
}

int64_t parse_int(const std::string& s, const std::string& file, size_t line) {
  try {
    size_t used = 0;
    int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file, line, "expected an integer, got '" + s + "'");
  }
}

std::vector<int64_t> parse_int_list(const std::string& s, const std::string& file, size_t line) {
  std::vector<int64_t> out;
  if (s.empty()) return out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(',', start);
    out.push_back(parse_int(s.substr(start, pos - start), file, line));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs, char sep) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(xs[i]);
  }
  return out;
}

std::vector<ItemId> to_item_ids(const std::vector<int64_t>& xs, const Catalog& catalog,
                                const std::string& file, size_t line) {
  std::vector<ItemId> out;
  out.reserve(xs.size());
  for (int64_t x : xs) {
    if (!catalog.contains(static_cast<ItemId>(x))) {
      throw ParseError(file, line, "item " + std::to_string(x) + " not in catalog");
    }
    out.push_back(static_cast<ItemId>(x));
  }
  return out;
}

}  // namespace

std::string_view to_string(ResponseMode mode) {
  return mode == ResponseMode::kSingleToken ? "single" : "multi";
}

ResponseMode parse_response_mode(std::string_view s) {
  if (s == "single") return ResponseMode::kSingleToken;
  if (s == "multi") return ResponseMode::kMultiToken;
  throw UsageError("unknown response mode '" + std::string(s) + "' (expected single|multi)");
}

Catalog::Catalog(ResponseMode mode, size_t word_vocab, std::vector<Item> items)
    : mode_(mode), items_(std::move(items)) {
  content_vocab_ = mode == ResponseMode::kSingleToken ? items_.size() : word_vocab;
  for (size_t i = 0; i < items_.size(); ++i) {
    Item& item = items_[i];
    if (item.item_id != static_cast<ItemId>(i)) {
      throw DataError("catalog item ids must be dense and ordered");
    }
    if (mode == ResponseMode::kSingleToken) item.title_tokens = {item.item_id};
    if (item.title_tokens.empty()) {
      throw DataError("item '" + item.key + "' has an empty title");
    }
    for (TokenId t : item.title_tokens) {
      if (t < 0 || size_t(t) >= content_vocab_) {
        throw DataError("item '" + item.key + "' has a token outside the vocabulary");
      }
    }
    if (!by_key_.emplace(item.key, item.item_id).second) {
      throw DataError("duplicate item id '" + item.key + "'");
    }
    by_title_.emplace(title_key(item.title_tokens), item.item_id);
  }
}

const Item& Catalog::item(ItemId id) const {
  if (!contains(id)) throw DataError("item " + std::to_string(id) + " not in catalog");
  return items_[id];
}

std::optional<ItemId> Catalog::find(std::string_view key) const {
  auto it = by_key_.find(std::string(key));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Catalog::response_tokens(ItemId id) const {
  std::vector<TokenId> out = item(id).title_tokens;
  if (mode_ == ResponseMode::kMultiToken) out.push_back(eos_token());
  return out;
}

std::vector<TokenId> Catalog::prompt_tokens(std::span<const ItemId> context) const {
  std::vector<TokenId> out;
  for (ItemId id : context) {
    const auto& t = item(id).title_tokens;
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

std::optional<ItemId> Catalog::item_for_title(std::span<const TokenId> tokens) const {
  auto it = by_title_.find(title_key(tokens));
  if (it == by_title_.end()) return std::nullopt;
  return it->second;
}

uint64_t derive_seed(uint64_t base, uint64_t tag, uint64_t index) {
  uint64_t z = base ^ (tag * 0x9e3779b97f4a7c15ULL) ^ (index * 0xbf58476d1ce4e5b9ULL);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<ItemId> sample_negatives(size_t catalog_size, std::span<const ItemId> context,
                                     ItemId positive, size_t n_neg, uint64_t seed) {
  std::vector<char> excluded(catalog_size, 0);
  for (ItemId c : context) {
    if (c >= 0 && size_t(c) < catalog_size) excluded[c] = 1;
  }
  if (positive >= 0 && size_t(positive) < catalog_size) excluded[positive] = 1;
  std::vector<ItemId> pool;
  for (size_t i = 0; i < catalog_size; ++i) {
    if (!excluded[i]) pool.push_back(static_cast<ItemId>(i));
  }
  if (pool.size() < n_neg) {
    throw DataError("cannot sample " + std::to_string(n_neg) + " negatives from a pool of " +
                    std::to_string(pool.size()) + " unobserved items");
  }
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n_neg slots become the sample.
  for (size_t i = 0; i < n_neg; ++i) {
    std::uniform_int_distribution<size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n_neg);
  return pool;
}

std::vector<int64_t> count_popularity(size_t catalog_size,
                                      const std::vector<TrainingInstance>& instances) {
  std::vector<int64_t> pop(catalog_size, 0);
  for (const auto& inst : instances) {
    for (ItemId c : inst.prompt_context) ++pop[c];
    ++pop[inst.positive];
  }
  return pop;
}

DatasetSplit build_split(Catalog catalog, const std::vector<InteractionSequence>& sequences,
                         const SplitConfig& config) {
  const int ratio_sum = config.ratio[0] + config.ratio[1] + config.ratio[2];
  if (ratio_sum <= 0 || config.ratio[0] < 0 || config.ratio[1] < 0 || config.ratio[2] < 0) {
    throw UsageError("split ratio must be nonnegative with a positive sum");
  }
  if (config.candidate_size < 1) throw UsageError("candidate_size must be >= 1");

  struct Pending {
    int64_t timestamp;
    size_t seq;
    size_t pos;
  };
  std::vector<Pending> pending;
  for (size_t s = 0; s < sequences.size(); ++s) {
    const auto& seq = sequences[s];
    if (seq.items.size() < 2) throw DataError("sequence shorter than 2 interactions");
    if (config.sliding_window) {
      for (size_t p = 1; p < seq.items.size(); ++p) pending.push_back({seq.timestamps[p], s, p});
    } else {
      const size_t p = seq.items.size() - 1;
      pending.push_back({seq.timestamps[p], s, p});
    }
  }
  std::sort(pending.begin(), pending.end(), [&](const Pending& a, const Pending& b) {
    return std::tuple(a.timestamp, sequences[a.seq].user_id, a.pos) <
           std::tuple(b.timestamp, sequences[b.seq].user_id, b.pos);
  });

  const size_t n = pending.size();
  const size_t n_train = n * config.ratio[0] / ratio_sum;
  const size_t n_val = n * config.ratio[1] / ratio_sum;

  DatasetSplit split;
  std::vector<size_t> train_prefix(sequences.size(), 0);
  for (size_t k = 0; k < n; ++k) {
    const Pending& p = pending[k];
    const auto& seq = sequences[p.seq];
    TrainingInstance inst;
    inst.user_id = seq.user_id;
    inst.prompt_context.assign(seq.items.begin(), seq.items.begin() + p.pos);
    inst.positive = seq.items[p.pos];
    inst.target_timestamp = p.timestamp;
    inst.candidates = sample_negatives(catalog.size(), inst.prompt_context, inst.positive,
                                       config.candidate_size - 1,
                                       derive_seed(config.seed, kTagCandidates, k));
    inst.candidates.push_back(inst.positive);
    std::sort(inst.candidates.begin(), inst.candidates.end());
    inst.sampled_negatives = sample_negatives(catalog.size(), inst.prompt_context, inst.positive,
                                              config.n_neg,
                                              derive_seed(config.seed, kTagNegatives, k));
    if (k < n_train) {
      train_prefix[p.seq] = std::max(train_prefix[p.seq], p.pos + 1);
      split.train.push_back(std::move(inst));
    } else if (k < n_train + n_val) {
      split.validation.push_back(std::move(inst));
    } else {
      split.test.push_back(std::move(inst));
    }
  }

  split.pop_counts.assign(catalog.size(), 0);
  for (size_t s = 0; s < sequences.size(); ++s) {
    for (size_t p = 0; p < train_prefix[s]; ++p) ++split.pop_counts[sequences[s].items[p]];
  }
  split.catalog = std::move(catalog);
  return split;
}

DatasetSplit ingest(const std::filesystem::path& interactions_file,
                    const std::filesystem::path& items_file, const SplitConfig& config,
                    ResponseMode mode, IngestStats* stats) {
  std::ifstream items_in(items_file);
  if (!items_in) throw DataError("cannot open " + items_file.string());
  struct RawItem {
    std::string key;
    std::vector<std::string> words;
  };
  std::vector<RawItem> raw_items;
  std::string line;
  size_t line_no = 0;
  while (std::getline(items_in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0].empty()) {
      throw ParseError(items_file.string(), line_no, "expected 2 tab-separated columns");
    }
    RawItem item{cols[0], {}};
    std::istringstream words(cols[1]);
    for (std::string w; words >> w;) item.words.push_back(w);
    if (item.words.empty()) throw ParseError(items_file.string(), line_no, "empty title");
    raw_items.push_back(std::move(item));
  }

  std::map<std::string, TokenId> word_ids;
  for (const auto& it : raw_items) {
    for (const auto& w : it.words) word_ids.emplace(w, 0);
  }
  TokenId next = 0;
  for (auto& [w, id] : word_ids) id = next++;

  std::vector<Item> items;
  for (size_t i = 0; i < raw_items.size(); ++i) {
    Item item{static_cast<ItemId>(i), raw_items[i].key, {}};
    for (const auto& w : raw_items[i].words) item.title_tokens.push_back(word_ids[w]);
    items.push_back(std::move(item));
  }
  Catalog catalog(mode, word_ids.size(), std::move(items));

  std::ifstream inter_in(interactions_file);
  if (!inter_in) throw DataError("cannot open " + interactions_file.string());
  struct Event {
    int64_t timestamp;
    size_t order;
    ItemId item;
  };
  std::map<std::string, size_t> user_index;
  std::vector<std::vector<Event>> per_user;
  size_t n_events = 0;
  line_no = 0;
  while (std::getline(inter_in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 3 || cols[0].empty()) {
      throw ParseError(interactions_file.string(), line_no, "expected 3 tab-separated columns");
    }
    auto item = catalog.find(cols[1]);
    if (!item) throw ReferenceError(cols[1]);
    const int64_t ts = parse_int(cols[2], interactions_file.string(), line_no);
    auto [it, inserted] = user_index.emplace(cols[0], per_user.size());
    if (inserted) per_user.emplace_back();
    per_user[it->second].push_back({ts, n_events++, *item});
  }

  IngestStats local;
  local.interactions = n_events;
  std::vector<InteractionSequence> sequences;
  // user_index is keyed by name; iterate in first-appearance order instead.
  std::vector<std::string> names(per_user.size());
  for (const auto& [name, idx] : user_index) names[idx] = name;
  for (size_t u = 0; u < per_user.size(); ++u) {
    auto& events = per_user[u];
    if (events.size() < std::max<size_t>(2, config.min_interactions)) {
      ++local.users_dropped;
      continue;
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    InteractionSequence seq;
    seq.user_id = static_cast<int64_t>(u);
    for (const auto& e : events) {
      seq.items.push_back(e.item);
      seq.timestamps.push_back(e.timestamp);
    }
    sequences.push_back(std::move(seq));
    ++local.users_kept;
  }
  if (stats) *stats = local;
  if (sequences.empty()) throw DataError("no user has enough interactions");
  return build_split(std::move(catalog), sequences, config);
}

double latent_affinity(const SyntheticCorpus& corpus, size_t user, ItemId item) {
  return dot(corpus.user_latent.row(user), corpus.item_latent.row(item));
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config,
                                   const SplitConfig& split_config) {
  if (config.latent_dim < 1) throw UsageError("latent_dim must be >= 1");
  if (config.seq_len < 2) throw UsageError("seq_len must be >= 2");
  if (config.n_items <= config.seq_len) throw UsageError("n_items must exceed seq_len");
  if (config.n_users < 1) throw UsageError("n_users must be >= 1");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const size_t k = config.latent_dim;

  SyntheticCorpus corpus;
  corpus.user_latent = Tensor::zeros({config.n_users, k});
  corpus.item_latent = Tensor::zeros({config.n_items, k});
  for (double& v : corpus.user_latent.values) v = normal(rng);
  for (double& v : corpus.item_latent.values) v = normal(rng);
  std::vector<double> item_offset(config.n_items);
  for (double& b : item_offset) b = config.popularity_spread * normal(rng);

  std::vector<Item> items(config.n_items);
  size_t word_vocab = 0;
  if (config.mode == ResponseMode::kMultiToken) {
    word_vocab = std::max<size_t>(config.title_words, 4);
    std::set<std::vector<TokenId>> used;
    std::uniform_int_distribution<TokenId> word(0, static_cast<TokenId>(word_vocab) - 1);
    std::uniform_int_distribution<int> length(2, 3);
    for (size_t i = 0; i < config.n_items; ++i) {
      std::vector<TokenId> title;
      for (int attempt = 0;; ++attempt) {
        title.assign(static_cast<size_t>(length(rng)), 0);
        for (TokenId& t : title) t = word(rng);
        if (used.insert(title).second) break;
        if (attempt > 10000) throw UsageError("title vocabulary too small for n_items");
      }
      items[i].title_tokens = std::move(title);
    }
  }
  for (size_t i = 0; i < config.n_items; ++i) {
    items[i].item_id = static_cast<ItemId>(i);
    items[i].key = "i" + std::to_string(i);
  }
  Catalog catalog(config.mode, word_vocab, std::move(items));

  const double scale = config.affinity_scale / std::sqrt(static_cast<double>(k));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int64_t> start(0, 999);
  std::uniform_int_distribution<int64_t> gap(1, 10);
  std::vector<double> logits(config.n_items);
  std::vector<double> query(k);
  corpus.sequences.reserve(config.n_users);
  for (size_t u = 0; u < config.n_users; ++u) {
    InteractionSequence seq;
    seq.user_id = static_cast<int64_t>(u);
    std::vector<char> taken(config.n_items, 0);
    int64_t t = start(rng);
    for (size_t step = 0; step < config.seq_len; ++step) {
      for (size_t d = 0; d < k; ++d) {
        query[d] = corpus.user_latent(u, d);
        if (!seq.items.empty()) {
          query[d] += config.transition_weight * corpus.item_latent(seq.items.back(), d);
        }
      }
      double mx = -std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < config.n_items; ++i) {
        logits[i] = taken[i] ? -std::numeric_limits<double>::infinity()
                             : scale * dot(query, corpus.item_latent.row(i)) + item_offset[i];
        mx = std::max(mx, logits[i]);
      }
      double total = 0.0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        total += l;
      }
      double r = unit(rng) * total;
      size_t pick = 0;
      for (size_t i = 0; i < config.n_items; ++i) {
        if (taken[i]) continue;
        pick = i;
        r -= logits[i];
        if (r <= 0) break;
      }
      taken[pick] = 1;
      seq.items.push_back(static_cast<ItemId>(pick));
      seq.timestamps.push_back(t);
      t += gap(rng);
    }
    corpus.sequences.push_back(std::move(seq));
  }

  SplitConfig sc = split_config;
  if (sc.seed == 0) sc.seed = config.seed;
  corpus.split = build_split(std::move(catalog), corpus.sequences, sc);
  return corpus;
}

std::vector<std::vector<size_t>> make_batches(size_t n, size_t batch_size, uint64_t seed,
                                              uint64_t epoch) {
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (n == 0) throw DataError("cannot batch an empty split");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(derive_seed(seed, kTagBatches, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < n; start += batch_size) {
    const size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

namespace {

void write_instances(const std::vector<TrainingInstance>& xs, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "# user_id\ttarget_timestamp\tpositive\tcontext\tcandidates\tnegatives\n";
  for (const auto& x : xs) {
    out << x.user_id << '\t' << x.target_timestamp << '\t' << x.positive << '\t'
        << join(x.prompt_context, ',') << '\t' << join(x.candidates, ',') << '\t'
        << join(x.sampled_negatives, ',') << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<TrainingInstance> read_instances(const std::filesystem::path& path,
                                             const Catalog& catalog) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<TrainingInstance> out;
  std::string line;
  size_t line_no = 0;
  const std::string file = path.string();
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 6) throw ParseError(file, line_no, "expected 6 tab-separated columns");
    TrainingInstance x;
    x.user_id = parse_int(cols[0], file, line_no);
    x.target_timestamp = parse_int(cols[1], file, line_no);
    x.positive = to_item_ids({parse_int(cols[2], file, line_no)}, catalog, file, line_no)[0];
    x.prompt_context = to_item_ids(parse_int_list(cols[3], file, line_no), catalog, file, line_no);
    x.candidates = to_item_ids(parse_int_list(cols[4], file, line_no), catalog, file, line_no);
    x.sampled_negatives =
        to_item_ids(parse_int_list(cols[5], file, line_no), catalog, file, line_no);
    if (x.prompt_context.empty()) throw ParseError(file, line_no, "empty context");
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace

void save_split(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Catalog& cat = split.catalog;
  std::ostringstream out;
  out << "# mode=" << to_string(cat.mode()) << " vocab_size=" << cat.vocab_size() << '\n';
  out << "# item_id\tkey\ttitle_tokens\n";
  for (const Item& item : cat.items()) {
    out << item.item_id << '\t' << item.key << '\t' << join(item.title_tokens, ',') << '\n';
  }
  write_file_atomic(dir / "catalog.tsv", out.str());

  write_instances(split.train, dir / "train.tsv");
  write_instances(split.validation, dir / "val.tsv");
  write_instances(split.test, dir / "test.tsv");

  std::ostringstream pop;
  pop << "# item_id\tcount\n";
  for (size_t i = 0; i < split.pop_counts.size(); ++i) {
    pop << i << '\t' << split.pop_counts[i] << '\n';
  }
  write_file_atomic(dir / "pop.tsv", pop.str());
}

DatasetSplit load_split(const std::filesystem::path& dir) {
  const auto catalog_path = dir / "catalog.tsv";
  const std::string file = catalog_path.string();
  std::ifstream in(catalog_path);
  if (!in) throw DataError("cannot open " + file);
  std::string line;
  size_t line_no = 0;
  ResponseMode mode = ResponseMode::kSingleToken;
  size_t vocab_size = 0;
  bool have_header = false;
  std::vector<Item> items;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("# mode=", 0) == 0) {
      std::istringstream hs(line.substr(2));
      for (std::string kv; hs >> kv;) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const auto value = kv.substr(eq + 1);
        if (key == "mode") mode = parse_response_mode(value);
        if (key == "vocab_size") vocab_size = static_cast<size_t>(parse_int(value, file, line_no));
      }
      have_header = true;
      continue;
    }
    if (skip_line(line)) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 3) throw ParseError(file, line_no, "expected 3 tab-separated columns");
    Item item;
    item.item_id = static_cast<ItemId>(parse_int(cols[0], file, line_no));
    item.key = cols[1];
    for (int64_t t : parse_int_list(cols[2], file, line_no)) {
      item.title_tokens.push_back(static_cast<TokenId>(t));
    }
    items.push_back(std::move(item));
  }
  if (!have_header || vocab_size < 1) throw ParseError(file, 1, "missing '# mode=' header");

  DatasetSplit split;
  split.catalog = Catalog(mode, vocab_size - 1, std::move(items));
  split.train = read_instances(dir / "train.tsv", split.catalog);
  split.validation = read_instances(dir / "val.tsv", split.catalog);
  split.test = read_instances(dir / "test.tsv", split.catalog);

  split.pop_counts.assign(split.catalog.size(), 0);
  std::ifstream pin(dir / "pop.tsv");
  if (!pin) throw DataError("cannot open " + (dir / "pop.tsv").string());
  line_no = 0;
  while (std::getline(pin, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2) throw ParseError((dir / "pop.tsv").string(), line_no, "expected 2 columns");
    const int64_t id = parse_int(cols[0], "pop.tsv", line_no);
    if (id < 0 || size_t(id) >= split.pop_counts.size()) {
      throw ParseError((dir / "pop.tsv").string(), line_no, "item out of range");
    }
    split.pop_counts[id] = parse_int(cols[1], "pop.tsv", line_no);
  }
  return split;
}

}  // namespace napo
