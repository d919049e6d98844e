#include "embedtree/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace embedtree {

namespace {

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open corpus file '" + path + "'");
  }
  return in;
}

// Descending frequency, ties lexicographic; the ordering every dictionary
// uses so that identical corpora give identical files.
std::vector<std::pair<std::string, long long>> rank_counts(
    std::map<std::string, long long>&& counts) {
  std::vector<std::pair<std::string, long long>> ranked(
      std::make_move_iterator(counts.begin()), std::make_move_iterator(counts.end()));
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) {
      return a.second > b.second;
    }
    return a.first < b.first;
  });
  return ranked;
}

}  // namespace

Dictionary::Dictionary(std::vector<std::pair<std::string, long long>> ranked, int keep) {
  if (keep < 1) {
    throw std::invalid_argument("Dictionary: keep threshold must be >= 1");
  }
  tokens_.reserve(ranked.size());
  freqs_.reserve(ranked.size());
  for (auto& [token, freq] : ranked) {
    index_.emplace(token, static_cast<int>(tokens_.size()) + 1);
    tokens_.push_back(std::move(token));
    freqs_.push_back(freq);
  }
  kept_ = std::min(keep, size());
}

int Dictionary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

const std::string& Dictionary::token(int index) const {
  if (index < 1 || index > size()) {
    throw std::invalid_argument("Dictionary::token: index " + std::to_string(index) +
                                " out of range [1, " + std::to_string(size()) + "]");
  }
  return tokens_[static_cast<std::size_t>(index - 1)];
}

long long Dictionary::frequency(int index) const {
  if (index < 1 || index > size()) {
    throw std::invalid_argument("Dictionary::frequency: index " + std::to_string(index) +
                                " out of range [1, " + std::to_string(size()) + "]");
  }
  return freqs_[static_cast<std::size_t>(index - 1)];
}

void Dictionary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("Dictionary::save: cannot open '" + path + "' for writing");
  }
  out << "DICT v1 N=" << kept_ << "\n";
  for (int i = 1; i <= size(); ++i) {
    out << token(i) << '\t' << frequency(i) << '\n';
  }
  if (!out) {
    throw DataError("Dictionary::save: write failed for '" + path + "'");
  }
}

Dictionary Dictionary::load(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("DICT v1 N=", 0) != 0) {
    throw DataError("Dictionary::load: '" + path + "': bad header '" + line + "'");
  }
  int keep = 0;
  try {
    keep = std::stoi(line.substr(10));
  } catch (const std::exception&) {
    throw DataError("Dictionary::load: '" + path + "': bad threshold in header");
  }
  std::vector<std::pair<std::string, long long>> ranked;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("Dictionary::load: '" + path + "': missing tab on line " +
                      std::to_string(line_no));
    }
    long long freq = 0;
    try {
      freq = std::stoll(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError("Dictionary::load: '" + path + "': bad frequency on line " +
                      std::to_string(line_no));
    }
    ranked.emplace_back(line.substr(0, tab), freq);
  }
  if (ranked.empty()) {
    throw DataError("Dictionary::load: '" + path + "': no entries");
  }
  return Dictionary(std::move(ranked), keep);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream stream(line);
  std::string token;
  while (stream >> token) {
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::vector<int> map_tokens(const Dictionary& dict,
                            const std::vector<std::string>& tokens) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    out.push_back(dict.index_of(t));
  }
  return out;
}

TokenSequence kept_sequence(const Dictionary& dict,
                            const std::vector<std::string>& tokens) {
  TokenSequence out;
  for (const std::string& t : tokens) {
    const int idx = dict.index_of(t);
    if (dict.is_kept(idx)) {
      out.push_back(idx);
    }
  }
  return out;
}

Dictionary build_dictionary(const std::string& corpus_path, int keep) {
  std::ifstream in = open_or_throw(corpus_path);
  std::map<std::string, long long> counts;
  std::string line;
  while (std::getline(in, line)) {
    for (const std::string& t : tokenize(line)) {
      ++counts[t];
    }
  }
  if (counts.empty()) {
    throw DataError("build_dictionary: corpus '" + corpus_path + "' is empty");
  }
  return Dictionary(rank_counts(std::move(counts)), keep);
}

Dictionary build_pair_dictionary(const std::string& corpus_path,
                                 const Dictionary& words, int keep) {
  std::ifstream in = open_or_throw(corpus_path);
  std::map<std::string, long long> counts;
  std::string line;
  while (std::getline(in, line)) {
    const TokenSequence seq = kept_sequence(words, tokenize(line));
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      ++counts[words.token(seq[i]) + " " + words.token(seq[i + 1])];
    }
  }
  if (counts.empty()) {
    throw DataError("build_pair_dictionary: no kept adjacent pairs in '" +
                    corpus_path + "'");
  }
  return Dictionary(rank_counts(std::move(counts)), keep);
}

TokenSequence pair_sequence(const TokenSequence& words, const Dictionary& word_dict,
                            const Dictionary& pair_dict) {
  TokenSequence out;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    const int idx = pair_dict.index_of(word_dict.token(words[i]) + " " +
                                       word_dict.token(words[i + 1]));
    if (pair_dict.is_kept(idx)) {
      out.push_back(idx);
    }
  }
  return out;
}

std::vector<TokenSequence> extract_ngrams(const std::vector<int>& paragraph,
                                          int window, const Dictionary& dict) {
  if (window < 1) {
    throw std::invalid_argument("extract_ngrams: window must be >= 1");
  }
  std::vector<TokenSequence> out;
  const int len = static_cast<int>(paragraph.size());
  for (int start = 0; start + window <= len; ++start) {
    bool all_kept = true;
    for (int k = 0; k < window; ++k) {
      if (!dict.is_kept(paragraph[static_cast<std::size_t>(start + k)])) {
        all_kept = false;
        break;
      }
    }
    if (all_kept) {
      out.emplace_back(paragraph.begin() + start, paragraph.begin() + start + window);
    }
  }
  return out;
}

std::vector<std::vector<int>> load_paragraphs(const std::string& path,
                                              const Dictionary& dict) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::vector<int>> out;
  std::string line;
  while (std::getline(in, line)) {
    out.push_back(map_tokens(dict, tokenize(line)));
  }
  return out;
}

AlignedCorpus load_aligned(const std::string& path_a, const std::string& path_b,
                           const Dictionary& dict_a, const Dictionary& dict_b) {
  std::ifstream in_a = open_or_throw(path_a);
  std::ifstream in_b = open_or_throw(path_b);
  AlignedCorpus corpus;
  std::string line_a, line_b;
  long long count_a = 0, count_b = 0;
  while (true) {
    const bool got_a = static_cast<bool>(std::getline(in_a, line_a));
    const bool got_b = static_cast<bool>(std::getline(in_b, line_b));
    if (got_a) {
      ++count_a;
    }
    if (got_b) {
      ++count_b;
    }
    if (!got_a || !got_b) {
      // Drain the longer file so the error can report both totals.
      while (std::getline(in_a, line_a)) {
        ++count_a;
      }
      while (std::getline(in_b, line_b)) {
        ++count_b;
      }
      break;
    }
    TokenSequence a = kept_sequence(dict_a, tokenize(line_a));
    TokenSequence b = kept_sequence(dict_b, tokenize(line_b));
    if (a.empty() || b.empty()) {
      ++corpus.skipped;
      continue;
    }
    corpus.pairs.push_back({std::move(a), std::move(b)});
  }
  if (count_a != count_b) {
    throw DataError("load_aligned: line counts differ: '" + path_a + "' has " +
                    std::to_string(count_a) + ", '" + path_b + "' has " +
                    std::to_string(count_b));
  }
  return corpus;
}

EpochSampler::EpochSampler(std::size_t n, bool reshuffle) : reshuffle_(reshuffle) {
  if (n == 0) {
    throw std::invalid_argument("EpochSampler: empty dataset");
  }
  order_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    order_[i] = i;
  }
}

std::size_t EpochSampler::next(Rng& rng) {
  if (pos_ == order_.size()) {
    pos_ = 0;
  }
  if (pos_ == 0 && reshuffle_) {
    for (std::size_t i = order_.size() - 1; i > 0; --i) {
      const std::size_t j =
          static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i) + 1));
      std::swap(order_[i], order_[j]);
    }
  }
  return order_[pos_++];
}

NegativeSample make_negative(const TokenSequence& s, NegativeScheme scheme,
                             Rng& rng, int n_kept) {
  if (s.empty()) {
    throw std::invalid_argument("make_negative: empty sequence");
  }
  if (n_kept < 2) {
    throw std::invalid_argument("make_negative: need at least 2 kept words");
  }
  const int len = static_cast<int>(s.size());
  const int position = scheme == NegativeScheme::Last ? len : 1 + rng.uniform_int(len);
  NegativeSample neg{s, position};
  const int original = s[static_cast<std::size_t>(position - 1)];
  int replacement = original;
  while (replacement == original) {
    replacement = 1 + rng.uniform_int(n_kept);
  }
  neg.tokens[static_cast<std::size_t>(position - 1)] = replacement;
  return neg;
}

}  // namespace embedtree
