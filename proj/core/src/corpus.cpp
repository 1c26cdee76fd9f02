#include "esnmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "esnmt/rng.hpp"

namespace esnmt {

namespace {

constexpr std::size_t kDets = 2;
constexpr std::size_t kAdjs = 4;
constexpr std::size_t kNouns = 6;
constexpr std::size_t kVerbs = 4;
constexpr std::size_t kMaxAdjs = 2;

std::string word(const char* cls, std::size_t i, bool target) {
  return std::string(target ? "x" : "") + cls + std::to_string(i);
}

void add_grammar_lexicon(Vocab& v) {
  for (bool target : {false, true}) {
    for (std::size_t i = 0; i < kDets; ++i) v.add(word("det", i, target));
    for (std::size_t i = 0; i < kAdjs; ++i) v.add(word("adj", i, target));
    for (std::size_t i = 0; i < kNouns; ++i) v.add(word("n", i, target));
    for (std::size_t i = 0; i < kVerbs; ++i) v.add(word("v", i, target));
  }
}

// Source: DET ADJ* N. Target: N' ADJ'* (reversed) DET'.
void noun_phrase(Rng& rng, const Vocab& v, std::vector<TokenId>& src, std::vector<TokenId>& tgt) {
  const std::size_t det = rng.below(kDets);
  const std::size_t n_adj = rng.below(kMaxAdjs + 1);
  std::vector<std::size_t> adjs(n_adj);
  for (auto& a : adjs) a = rng.below(kAdjs);
  const std::size_t noun = rng.below(kNouns);
  src.push_back(v.id(word("det", det, false)));
  for (auto a : adjs) src.push_back(v.id(word("adj", a, false)));
  src.push_back(v.id(word("n", noun, false)));
  tgt.push_back(v.id(word("n", noun, true)));
  for (auto it = adjs.rbegin(); it != adjs.rend(); ++it) tgt.push_back(v.id(word("adj", *it, true)));
  tgt.push_back(v.id(word("det", det, true)));
}

// Source SVO, target SOV.
SentencePair grammar_sentence(Rng& rng, const Vocab& v) {
  SentencePair p;
  std::vector<TokenId> subj_t, obj_s, obj_t;
  noun_phrase(rng, v, p.source, subj_t);
  const std::size_t verb = rng.below(kVerbs);
  p.source.push_back(v.id(word("v", verb, false)));
  const bool transitive = rng.bernoulli(0.5);
  if (transitive) noun_phrase(rng, v, p.source, obj_t);
  p.target = subj_t;
  p.target.insert(p.target.end(), obj_t.begin(), obj_t.end());
  p.target.push_back(v.id(word("v", verb, true)));
  return p;
}

bool has_class(const std::string& tok, const char* cls, std::size_t count) {
  const std::string prefix = std::string("x") + cls;
  if (tok.rfind(prefix, 0) != 0 || tok.size() == prefix.size()) return false;
  const std::string rest = tok.substr(prefix.size());
  if (!std::all_of(rest.begin(), rest.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  return std::stoul(rest) < count;
}

bool parse_np(const std::vector<std::string>& t, std::size_t& pos) {
  if (pos >= t.size() || !has_class(t[pos], "n", kNouns)) return false;
  ++pos;
  std::size_t adjs = 0;
  while (pos < t.size() && has_class(t[pos], "adj", kAdjs)) {
    ++pos;
    if (++adjs > kMaxAdjs) return false;
  }
  if (pos >= t.size() || !has_class(t[pos], "det", kDets)) return false;
  ++pos;
  return true;
}

}  // namespace

std::string_view to_string(ToyKind kind) {
  switch (kind) {
    case ToyKind::copy:
      return "copy";
    case ToyKind::reverse:
      return "reverse";
    case ToyKind::sort_digits:
      return "sort_digits";
    case ToyKind::synthetic_grammar:
      return "synthetic_grammar";
  }
  return "?";
}

ToyKind parse_toy_kind(std::string_view text) {
  for (ToyKind k : {ToyKind::copy, ToyKind::reverse, ToyKind::sort_digits,
                    ToyKind::synthetic_grammar}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown toy task '" + std::string(text) + "'");
}

bool parses_as_grammar_target(const Vocab& vocab, std::span<const TokenId> target) {
  std::vector<std::string> t;
  for (TokenId id : target) t.push_back(vocab.token(id));
  std::size_t pos = 0;
  if (!parse_np(t, pos)) return false;
  if (pos < t.size() && has_class(t[pos], "n", kNouns) && !parse_np(t, pos)) return false;
  if (pos >= t.size() || !has_class(t[pos], "v", kVerbs)) return false;
  return pos + 1 == t.size();
}

ParallelCorpus make_toy_task(const ToyTaskSpec& spec) {
  if (spec.size == 0) throw std::invalid_argument("toy task size must be positive");
  if (spec.min_len == 0 || spec.min_len > spec.max_len) {
    throw std::invalid_argument("toy task needs 1 <= min_len <= max_len");
  }
  ParallelCorpus corpus;
  Vocab& v = corpus.vocab;
  std::vector<TokenId> symbols;
  switch (spec.kind) {
    case ToyKind::copy:
    case ToyKind::reverse:
      if (spec.vocab_size < 5) throw std::invalid_argument("toy vocab_size must exceed 4");
      for (std::size_t i = 0; i + 4 < spec.vocab_size; ++i) symbols.push_back(v.add("s" + std::to_string(i)));
      break;
    case ToyKind::sort_digits:
      for (int d = 0; d < 10; ++d) symbols.push_back(v.add(std::to_string(d)));
      break;
    case ToyKind::synthetic_grammar:
      if (spec.max_len < 3) throw std::invalid_argument("synthetic_grammar needs max_len >= 3");
      add_grammar_lexicon(v);
      break;
  }

  auto generate = [&](std::size_t count, const char* split) {
    Rng rng(spec.seed, std::string("toy/") + std::string(to_string(spec.kind)) + "/" + split);
    std::vector<SentencePair> out;
    out.reserve(count);
    while (out.size() < count) {
      if (spec.kind == ToyKind::synthetic_grammar) {
        SentencePair p = grammar_sentence(rng, v);
        if (p.source.size() < spec.min_len || p.source.size() > spec.max_len) continue;
        out.push_back(std::move(p));
        continue;
      }
      const std::size_t len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
      SentencePair p;
      for (std::size_t i = 0; i < len; ++i) p.source.push_back(symbols[rng.below(symbols.size())]);
      p.target = p.source;
      if (spec.kind == ToyKind::reverse) std::reverse(p.target.begin(), p.target.end());
      if (spec.kind == ToyKind::sort_digits) {
        // Digit ids are assigned in increasing digit order.
        std::sort(p.target.begin(), p.target.end());
      }
      out.push_back(std::move(p));
    }
    return out;
  };
  corpus.train = generate(spec.size, "train");
  corpus.dev = generate(spec.dev_size, "dev");
  corpus.test = generate(spec.test_size, "test");
  return corpus;
}

std::vector<SentencePair> load_parallel_text(const std::filesystem::path& source,
                                             const std::filesystem::path& target, Vocab& vocab,
                                             bool grow) {
  std::ifstream src(source), tgt(target);
  if (!src) throw std::runtime_error("cannot open " + source.string());
  if (!tgt) throw std::runtime_error("cannot open " + target.string());
  std::vector<SentencePair> out;
  std::string a, b;
  std::size_t line = 0;
  while (true) {
    const bool ha = static_cast<bool>(std::getline(src, a));
    const bool hb = static_cast<bool>(std::getline(tgt, b));
    if (!ha && !hb) break;
    ++line;
    if (ha != hb) {
      throw std::runtime_error("parallel files differ in length at line " + std::to_string(line));
    }
    SentencePair p;
    p.source = grow ? vocab.encode_growing(a) : vocab.encode(a);
    p.target = grow ? vocab.encode_growing(b) : vocab.encode(b);
    if (p.source.empty() || p.target.empty()) {
      throw std::runtime_error("empty sentence at line " + std::to_string(line) + " of " +
                               source.string());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::vector<TokenId>> sources_of(std::span<const SentencePair> pairs) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.source);
  return out;
}

std::vector<std::vector<TokenId>> targets_of(std::span<const SentencePair> pairs) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.target);
  return out;
}

}  // namespace esnmt
