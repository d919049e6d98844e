#include "embedtree/translate.hpp"

#include <cmath>
#include <stdexcept>

#include "embedtree/model_file.hpp"

namespace embedtree {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) {
    throw std::invalid_argument(msg);
  }
}

const char* view_name(Language lang, Gram gram) {
  if (lang == Language::A) {
    return gram == Gram::Words ? "words.A" : "pairs.A";
  }
  return gram == Gram::Words ? "words.B" : "pairs.B";
}

const TokenSequence& view(const Sentence& s, Gram gram) {
  return gram == Gram::Words ? s.words : s.pairs;
}

}  // namespace

BiText make_bitext(const AlignedCorpus& corpus) {
  BiText out;
  out.a.reserve(corpus.pairs.size());
  out.b.reserve(corpus.pairs.size());
  for (const AlignedPair& p : corpus.pairs) {
    out.a.push_back({p.source, {}});
    out.b.push_back({p.target, {}});
  }
  return out;
}

BiText make_bitext(const AlignedCorpus& corpus, const Dictionary& dict_a,
                   const Dictionary& dict_b, const Dictionary& pair_dict_a,
                   const Dictionary& pair_dict_b) {
  BiText out;
  out.a.reserve(corpus.pairs.size());
  out.b.reserve(corpus.pairs.size());
  for (const AlignedPair& p : corpus.pairs) {
    out.a.push_back({p.source, pair_sequence(p.source, dict_a, pair_dict_a)});
    out.b.push_back({p.target, pair_sequence(p.target, dict_b, pair_dict_b)});
  }
  return out;
}

TranslationModel::TranslationModel(int d, int n_words_a, int n_words_b,
                                   Distance distance, double margin,
                                   std::uint64_t seed)
    : distance_(distance), margin_(margin > 0.0 ? margin : std::sqrt(d)) {
  require(d >= 1, "TranslationModel: d must be >= 1");
  Rng rng(seed);
  words_a = std::make_shared<EmbeddingTable>(d, n_words_a, rng);
  words_b = std::make_shared<EmbeddingTable>(d, n_words_b, rng);
}

void TranslationModel::enable_pairs(int n_pairs_a, int n_pairs_b, std::uint64_t seed) {
  Rng rng(seed);
  pairs_a = std::make_shared<EmbeddingTable>(d(), n_pairs_a, rng);
  pairs_b = std::make_shared<EmbeddingTable>(d(), n_pairs_b, rng);
}

std::vector<Parameter> TranslationModel::parameters() {
  std::vector<Parameter> out = {{"words.A", &words_a->w, &words_a->grad_w},
                                {"words.B", &words_b->w, &words_b->grad_w}};
  if (pairs_enabled()) {
    out.push_back({"pairs.A", &pairs_a->w, &pairs_a->grad_w});
    out.push_back({"pairs.B", &pairs_b->w, &pairs_b->grad_w});
  }
  return out;
}

EmbeddingTable& TranslationModel::table(Language lang, Gram gram) {
  if (gram == Gram::Pairs) {
    require(pairs_enabled(), "TranslationModel: pair tables are not enabled");
    return lang == Language::A ? *pairs_a : *pairs_b;
  }
  return lang == Language::A ? *words_a : *words_b;
}

void save_translation_model(const TranslationModel& model, const std::string& path) {
  std::vector<NamedMatrix> params = {{"words.A", model.words_a->w},
                                     {"words.B", model.words_b->w}};
  if (model.pairs_enabled()) {
    params.push_back({"pairs.A", model.pairs_a->w});
    params.push_back({"pairs.B", model.pairs_b->w});
  }
  save_model(params, path);
}

TranslationModel load_translation_model(const std::string& path, Distance distance,
                                        double margin) {
  const std::vector<NamedMatrix> params = load_model(path);
  const DenseMatrix& wa = find_param(params, "words.A");
  const DenseMatrix& wb = find_param(params, "words.B");
  if (wa.rows() != wb.rows()) {
    throw DataError("model file: words.A and words.B disagree on dimension: " +
                    wa.shape() + " vs " + wb.shape());
  }
  TranslationModel model(wa.rows(), wa.cols(), wb.cols(), distance, margin, 0);
  model.words_a->w = wa;
  model.words_b->w = wb;
  if (has_param(params, "pairs.A") || has_param(params, "pairs.B")) {
    const DenseMatrix& pa = find_param(params, "pairs.A");
    const DenseMatrix& pb = find_param(params, "pairs.B");
    if (pa.rows() != wa.rows() || pb.rows() != wa.rows()) {
      throw DataError("model file: pair tables disagree with dimension " +
                      std::to_string(wa.rows()));
    }
    model.enable_pairs(pa.cols(), pb.cols(), 0);
    model.pairs_a->w = pa;
    model.pairs_b->w = pb;
  }
  return model;
}

DenseMatrix encode(TranslationModel& model, const TokenSequence& s, Language lang,
                   Gram gram) {
  require(!s.empty(), std::string("encode: empty sentence for table ") +
                          view_name(lang, gram));
  const DenseMatrix columns = model.table(lang, gram).forward(s);
  MeanLayer mean;
  return mean.forward(columns);
}

namespace {

double score_term(Distance distance, const DenseMatrix& x, const DenseMatrix& y) {
  return distance == Distance::L1 ? -l1_distance(x, y) : dot(x, y);
}

// d(score)/dx into grad_x and d(score)/dy into grad_y, scaled by upstream.
void score_term_backward(Distance distance, const DenseMatrix& x,
                         const DenseMatrix& y, double upstream, DenseMatrix& grad_x,
                         DenseMatrix& grad_y) {
  for (int i = 0; i < x.rows(); ++i) {
    if (distance == Distance::L1) {
      // score = -sum |x - y|; sign(0) taken as 0.
      const double diff = x[i] - y[i];
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      grad_x[i] += upstream * -sign;
      grad_y[i] += upstream * sign;
    } else {
      grad_x[i] += upstream * y[i];
      grad_y[i] += upstream * x[i];
    }
  }
}

// Encoding of one view plus what backward needs.
struct EncodedView {
  const TokenSequence* seq;
  EmbeddingTable* table;
  DenseMatrix columns;  // d×l
  DenseMatrix mean;     // d×1
};

EncodedView encode_view(TranslationModel& model, const Sentence& s, Language lang,
                        Gram gram) {
  const TokenSequence& seq = view(s, gram);
  require(!seq.empty(), std::string("encode: empty sentence for table ") +
                            view_name(lang, gram));
  EncodedView out;
  out.seq = &seq;
  out.table = &model.table(lang, gram);
  out.columns = out.table->forward(seq);
  MeanLayer mean;
  out.mean = mean.forward(out.columns);
  return out;
}

void backprop_view(const EncodedView& v, const DenseMatrix& grad_mean) {
  MeanLayer mean;
  mean.forward(v.columns);
  v.table->backward(*v.seq, mean.backward(v.columns, grad_mean));
}

}  // namespace

double pair_score(TranslationModel& model, const Sentence& sa, const Sentence& sb) {
  double score = score_term(model.distance(), encode(model, sa.words, Language::A, Gram::Words),
                            encode(model, sb.words, Language::B, Gram::Words));
  if (model.pairs_enabled() && !sa.pairs.empty() && !sb.pairs.empty()) {
    score += score_term(model.distance(), encode(model, sa.pairs, Language::A, Gram::Pairs),
                        encode(model, sb.pairs, Language::B, Gram::Pairs));
  }
  return score;
}

std::vector<SubNet> enabled_subnets(const TranslationModel& model) {
  const std::vector<std::pair<Language, Language>> lang_pairs = {
      {Language::A, Language::A}, {Language::A, Language::B}, {Language::B, Language::B}};
  const std::vector<Gram> grams =
      model.pairs_enabled() ? std::vector<Gram>{Gram::Words, Gram::Pairs}
                            : std::vector<Gram>{Gram::Words};
  std::vector<SubNet> out;
  for (const auto& [ll, lr] : lang_pairs) {
    for (const Gram gl : grams) {
      for (const Gram gr : grams) {
        if (ll == lr && gl == gr) {
          continue;  // same view on both sides scores identically always
        }
        out.push_back({ll, lr, gl, gr});
      }
    }
  }
  return out;
}

void train_translation(TranslationModel& model, const BiText& bitext,
                       const TranslationTrainConfig& config,
                       const TrainCallback& on_eval) {
  require(config.gamma > 0.0, "train_translation: learning rate must be positive");
  require(config.iters >= 0, "train_translation: iteration count must be >= 0");
  require(bitext.size() >= 2, "train_translation: need at least 2 aligned pairs");

  const std::vector<SubNet> subnets = enabled_subnets(model);
  Rng rng(config.seed);
  EpochSampler sampler(bitext.size(), config.reshuffle);

  if (on_eval) {
    on_eval(0, 0.0, false);
  }
  double window_loss = 0.0;
  long long window_count = 0;
  const int n = static_cast<int>(bitext.size());
  for (long long iter = 1; iter <= config.iters; ++iter) {
    const std::size_t i = sampler.next(rng);
    std::size_t j = i;
    while (j == i) {
      j = static_cast<std::size_t>(rng.uniform_int(n));
    }
    const SubNet net = subnets[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(subnets.size())))];

    // Same-language sub-networks pair two views of one sentence; the
    // negative swaps in a random sentence's right view either way.
    const Sentence& left_sentence = net.lang_left == Language::A ? bitext.a[i] : bitext.b[i];
    const Sentence& pos_sentence = net.lang_right == Language::A ? bitext.a[i] : bitext.b[i];
    const Sentence& neg_sentence = net.lang_right == Language::A ? bitext.a[j] : bitext.b[j];

    // A view can be empty (a one-word sentence has no pairs); such samples
    // carry no signal for this sub-network and are skipped.
    if (view(left_sentence, net.gram_left).empty() ||
        view(pos_sentence, net.gram_right).empty() ||
        view(neg_sentence, net.gram_right).empty()) {
      continue;
    }

    EncodedView left = encode_view(model, left_sentence, net.lang_left, net.gram_left);
    EncodedView pos = encode_view(model, pos_sentence, net.lang_right, net.gram_right);
    EncodedView neg = encode_view(model, neg_sentence, net.lang_right, net.gram_right);

    const double score_pos = score_term(model.distance(), left.mean, pos.mean);
    const double score_neg = score_term(model.distance(), left.mean, neg.mean);
    const MarginResult margin =
        margin_ranking_criterion(score_pos, score_neg, model.margin());
    window_loss += margin.loss;
    ++window_count;

    if (margin.loss > 0.0) {
      DenseMatrix grad_left(model.d(), 1);
      DenseMatrix grad_pos(model.d(), 1);
      DenseMatrix grad_neg(model.d(), 1);
      score_term_backward(model.distance(), left.mean, pos.mean, margin.d_pos,
                          grad_left, grad_pos);
      score_term_backward(model.distance(), left.mean, neg.mean, margin.d_neg,
                          grad_left, grad_neg);
      backprop_view(left, grad_left);
      backprop_view(pos, grad_pos);
      backprop_view(neg, grad_neg);
      sgd_step(model, config.gamma);
    }

    const bool at_interval =
        config.eval_interval > 0 && iter % config.eval_interval == 0;
    if ((at_interval || iter == config.iters) && on_eval) {
      on_eval(iter, window_count > 0 ? window_loss / window_count : 0.0,
              window_count > 0);
      window_loss = 0.0;
      window_count = 0;
    }
  }
}

int exact_rank(TranslationModel& model, const BiText& bitext, int i) {
  const int n = static_cast<int>(bitext.size());
  require(i >= 1 && i <= n, "exact_rank: index " + std::to_string(i) +
                                " out of range [1, " + std::to_string(n) + "]");
  const Sentence& source = bitext.a[static_cast<std::size_t>(i - 1)];
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    scores[static_cast<std::size_t>(j - 1)] =
        pair_score(model, source, bitext.b[static_cast<std::size_t>(j - 1)]);
  }
  const double true_score = scores[static_cast<std::size_t>(i - 1)];
  int rank = 1;
  for (int j = 1; j <= n; ++j) {
    const double s = scores[static_cast<std::size_t>(j - 1)];
    if (s > true_score || (s == true_score && j < i)) {
      ++rank;
    }
  }
  return rank;
}

double estimate_performance(TranslationModel& model, const BiText& bitext, int m,
                            Rng& rng) {
  require(m >= 1, "estimate_performance: M must be >= 1");
  require(bitext.size() >= 1, "estimate_performance: empty corpus");
  const int n = static_cast<int>(bitext.size());
  long long hits = 0;
  for (int i = 0; i < n; ++i) {
    const double true_score =
        pair_score(model, bitext.a[static_cast<std::size_t>(i)],
                   bitext.b[static_cast<std::size_t>(i)]);
    bool all_further = true;
    for (int draw = 0; draw < m; ++draw) {
      const int j = rng.uniform_int(n);
      const double random_score =
          pair_score(model, bitext.a[static_cast<std::size_t>(i)],
                     bitext.b[static_cast<std::size_t>(j)]);
      if (random_score > true_score) {
        all_further = false;
      }
    }
    if (all_further) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / n;
}

}  // namespace embedtree
