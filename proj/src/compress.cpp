#include "embedtree/compress.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace embedtree {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) {
    throw std::invalid_argument(msg);
  }
}

void check_depth(int length, int max_length, const char* where) {
  if (length > max_length) {
    throw std::invalid_argument(std::string(where) + ": sentence length " +
                                std::to_string(length) + " exceeds the depth guard (" +
                                std::to_string(max_length) + ")");
  }
}

std::vector<DenseMatrix> columns_of(const DenseMatrix& m) {
  std::vector<DenseMatrix> cols;
  cols.reserve(static_cast<std::size_t>(m.cols()));
  for (int j = 0; j < m.cols(); ++j) {
    cols.push_back(column_of(m, j));
  }
  return cols;
}

DenseMatrix from_columns(const std::vector<DenseMatrix>& cols) {
  DenseMatrix out(cols.front().rows(), static_cast<int>(cols.size()));
  for (int j = 0; j < out.cols(); ++j) {
    set_column(out, j, cols[static_cast<std::size_t>(j)]);
  }
  return out;
}

// Scalar helpers for the 1×1 score head output.
double scalar(const DenseMatrix& m) { return m[0]; }

DenseMatrix scalar_matrix(double v) {
  DenseMatrix m(1, 1);
  m[0] = v;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Compressor / extractor construction

std::shared_ptr<NetModule> make_compressor(CompressorVariant variant, int d,
                                           int n_hidden, Rng& rng) {
  require(d >= 1, "make_compressor: d must be >= 1");
  if (variant == CompressorVariant::Linear) {
    return std::make_shared<LinearLayer>(d, 2 * d, rng);
  }
  require(n_hidden >= 1, "make_compressor: non-linear variant needs hidden units");
  auto net = std::make_shared<Sequential>();
  net->add(std::make_shared<LinearLayer>(n_hidden, 2 * d, rng));
  net->add(std::make_shared<HardTanhLayer>());
  net->add(std::make_shared<LinearLayer>(d, n_hidden, rng));
  return net;
}

std::shared_ptr<NetModule> make_extractor(CompressorVariant variant, int d,
                                          int n_hidden, Rng& rng) {
  require(d >= 1, "make_extractor: d must be >= 1");
  if (variant == CompressorVariant::Linear) {
    return std::make_shared<LinearLayer>(2 * d, d, rng);
  }
  require(n_hidden >= 1, "make_extractor: non-linear variant needs hidden units");
  auto net = std::make_shared<Sequential>();
  net->add(std::make_shared<LinearLayer>(n_hidden, d, rng));
  net->add(std::make_shared<HardTanhLayer>());
  net->add(std::make_shared<LinearLayer>(2 * d, n_hidden, rng));
  return net;
}

// ---------------------------------------------------------------------------
// Tree application

CompressTrace compress_sentence(NetModule& compressor, const DenseMatrix& embedded,
                                const MergeSteps& steps) {
  const int length = embedded.cols();
  require(steps_valid(steps, length),
          "compress_sentence: invalid steps for length " + std::to_string(length));
  CompressTrace trace;
  trace.steps = steps;
  trace.inputs.reserve(steps.size());
  std::vector<DenseMatrix> working = columns_of(embedded);
  for (const int p : steps) {
    DenseMatrix input = vconcat(working[static_cast<std::size_t>(p - 1)],
                                working[static_cast<std::size_t>(p)]);
    DenseMatrix merged = compressor.forward(input);
    trace.inputs.push_back(std::move(input));
    working[static_cast<std::size_t>(p - 1)] = std::move(merged);
    working.erase(working.begin() + p);
  }
  trace.code = std::move(working.front());
  return trace;
}

DenseMatrix compress_backward(NetModule& compressor, const CompressTrace& trace,
                              int length, const DenseMatrix& grad_code) {
  require(static_cast<int>(trace.steps.size()) == length - 1,
          "compress_backward: trace does not match length " + std::to_string(length));
  std::vector<DenseMatrix> grads;
  grads.reserve(static_cast<std::size_t>(length));
  grads.push_back(grad_code);
  for (int k = static_cast<int>(trace.steps.size()) - 1; k >= 0; --k) {
    const int p = trace.steps[static_cast<std::size_t>(k)];
    DenseMatrix g = std::move(grads[static_cast<std::size_t>(p - 1)]);
    DenseMatrix gx = compressor.backward(trace.inputs[static_cast<std::size_t>(k)], g);
    auto [top, bottom] = vsplit(gx);
    grads[static_cast<std::size_t>(p - 1)] = std::move(top);
    grads.insert(grads.begin() + p, std::move(bottom));
  }
  return from_columns(grads);
}

ExtractTrace extract_sentence(NetModule& extractor, const DenseMatrix& code,
                              const MergeSteps& steps) {
  require(code.cols() == 1, "extract_sentence: code must be a column, got " + code.shape());
  const int length = static_cast<int>(steps.size()) + 1;
  require(steps_valid(steps, length), "extract_sentence: invalid steps");
  ExtractTrace trace;
  trace.inputs.reserve(steps.size());
  std::vector<DenseMatrix> working;
  working.push_back(code);
  for (int k = static_cast<int>(steps.size()) - 1; k >= 0; --k) {
    const int p = steps[static_cast<std::size_t>(k)];
    DenseMatrix input = std::move(working[static_cast<std::size_t>(p - 1)]);
    DenseMatrix expanded = extractor.forward(input);
    auto [top, bottom] = vsplit(expanded);
    trace.inputs.push_back(std::move(input));
    working[static_cast<std::size_t>(p - 1)] = std::move(top);
    working.insert(working.begin() + p, std::move(bottom));
  }
  trace.columns = from_columns(working);
  return trace;
}

DenseMatrix extract_backward(NetModule& extractor, const ExtractTrace& trace,
                             const MergeSteps& steps, const DenseMatrix& grad_columns) {
  const int length = static_cast<int>(steps.size()) + 1;
  require(grad_columns.cols() == length,
          "extract_backward: gradient has " + std::to_string(grad_columns.cols()) +
              " columns, expected " + std::to_string(length));
  std::vector<DenseMatrix> grads = columns_of(grad_columns);
  // Applications ran at positions steps[K-1], steps[K-2], ..., steps[0];
  // undo them in reverse, merging the two result gradients each time.
  for (int j = 0; j < static_cast<int>(steps.size()); ++j) {
    const int p = steps[static_cast<std::size_t>(j)];
    DenseMatrix g2d = vconcat(grads[static_cast<std::size_t>(p - 1)],
                              grads[static_cast<std::size_t>(p)]);
    const std::size_t input_index = trace.inputs.size() - 1 - static_cast<std::size_t>(j);
    DenseMatrix gz = extractor.backward(trace.inputs[input_index], g2d);
    grads[static_cast<std::size_t>(p - 1)] = std::move(gz);
    grads.erase(grads.begin() + p);
  }
  return grads.front();
}

// ---------------------------------------------------------------------------
// CompressTreeModule / ExtractTreeModule

CompressTreeModule::CompressTreeModule(std::shared_ptr<NetModule> compressor, int dim,
                                       int max_length)
    : compressor_(std::move(compressor)), dim_(dim), max_length_(max_length) {}

void CompressTreeModule::set_steps(MergeSteps steps) { steps_ = std::move(steps); }

DenseMatrix CompressTreeModule::forward(const DenseMatrix& input) {
  require(input.rows() == dim_,
          "CompressTreeModule::forward: expected " + std::to_string(dim_) +
              " rows, got " + input.shape());
  check_depth(input.cols(), max_length_, "CompressTreeModule::forward");
  forwarded_ = true;
  last_length_ = input.cols();
  trace_ = compress_sentence(*compressor_, input, steps_);
  return trace_.code;
}

DenseMatrix CompressTreeModule::backward(const DenseMatrix& input,
                                         const DenseMatrix& grad_output) {
  require(forwarded_, "CompressTreeModule::backward called before forward");
  require(input.cols() == last_length_,
          "CompressTreeModule::backward: input does not match the last forward");
  return compress_backward(*compressor_, trace_, input.cols(), grad_output);
}

std::vector<Parameter> CompressTreeModule::parameters() {
  return compressor_->parameters();
}

ExtractTreeModule::ExtractTreeModule(std::shared_ptr<NetModule> extractor, int dim,
                                     int max_length)
    : extractor_(std::move(extractor)), dim_(dim), max_length_(max_length) {}

void ExtractTreeModule::set_steps(MergeSteps steps) { steps_ = std::move(steps); }

DenseMatrix ExtractTreeModule::forward(const DenseMatrix& input) {
  require(input.rows() == dim_ && input.cols() == 1,
          "ExtractTreeModule::forward: expected " + std::to_string(dim_) +
              "x1 code, got " + input.shape());
  check_depth(static_cast<int>(steps_.size()) + 1, max_length_,
              "ExtractTreeModule::forward");
  forwarded_ = true;
  trace_ = extract_sentence(*extractor_, input, steps_);
  return trace_.columns;
}

DenseMatrix ExtractTreeModule::backward(const DenseMatrix& input,
                                        const DenseMatrix& grad_output) {
  require(forwarded_, "ExtractTreeModule::backward called before forward");
  (void)input;
  return extract_backward(*extractor_, trace_, steps_, grad_output);
}

std::vector<Parameter> ExtractTreeModule::parameters() {
  return extractor_->parameters();
}

// ---------------------------------------------------------------------------
// Model

CompressModel::CompressModel(const CompressModelConfig& config) : config_(config) {
  require(config.d >= 1 && config.n_kept >= 1,
          "CompressModel: d and n_kept must be >= 1");
  Rng rng(config.seed);
  embed = std::make_shared<EmbeddingTable>(config.d, config.n_kept, rng);
  compressor = make_compressor(config.variant, config.d, config.n_hidden, rng);
  if (config.with_extractor) {
    extractor = make_extractor(config.variant, config.d, config.n_hidden, rng);
  }
  if (config.with_score) {
    score_head = std::make_shared<LinearLayer>(1, config.d, rng);
  }
}

std::vector<Parameter> CompressModel::parameters() {
  std::vector<Parameter> out;
  auto append = [&out](const std::string& prefix, Trainable& t) {
    for (Parameter p : t.parameters()) {
      p.name = prefix + "." + p.name;
      out.push_back(p);
    }
  };
  append("embed", *embed);
  append("comp", *compressor);
  if (extractor) {
    append("extr", *extractor);
  }
  if (score_head) {
    append("score", *score_head);
  }
  return out;
}

namespace {

// Named matrices of one h / h^-1 network for the checkpoint format.
void append_net_params(std::vector<NamedMatrix>& out, const std::string& prefix,
                       NetModule& net, CompressorVariant variant) {
  if (variant == CompressorVariant::Linear) {
    auto& layer = dynamic_cast<LinearLayer&>(net);
    out.push_back({prefix + ".W", layer.w});
    out.push_back({prefix + ".b", layer.b});
    return;
  }
  auto& seq = dynamic_cast<Sequential&>(net);
  auto& hidden = dynamic_cast<LinearLayer&>(*seq.children.at(0));
  auto& output = dynamic_cast<LinearLayer&>(*seq.children.at(2));
  out.push_back({prefix + ".hidden.W", hidden.w});
  out.push_back({prefix + ".hidden.b", hidden.b});
  out.push_back({prefix + ".output.W", output.w});
  out.push_back({prefix + ".output.b", output.b});
}

void load_matrix(DenseMatrix& dst, const std::vector<NamedMatrix>& params,
                 const std::string& name) {
  const DenseMatrix& src = find_param(params, name);
  if (!dst.same_shape(src)) {
    throw DataError("model file: parameter '" + name + "' has shape " + src.shape() +
                    ", expected " + dst.shape());
  }
  dst = src;
}

void load_net_params(NetModule& net, const std::vector<NamedMatrix>& params,
                     const std::string& prefix, CompressorVariant variant) {
  if (variant == CompressorVariant::Linear) {
    auto& layer = dynamic_cast<LinearLayer&>(net);
    load_matrix(layer.w, params, prefix + ".W");
    load_matrix(layer.b, params, prefix + ".b");
    return;
  }
  auto& seq = dynamic_cast<Sequential&>(net);
  auto& hidden = dynamic_cast<LinearLayer&>(*seq.children.at(0));
  auto& output = dynamic_cast<LinearLayer&>(*seq.children.at(2));
  load_matrix(hidden.w, params, prefix + ".hidden.W");
  load_matrix(hidden.b, params, prefix + ".hidden.b");
  load_matrix(output.w, params, prefix + ".output.W");
  load_matrix(output.b, params, prefix + ".output.b");
}

}  // namespace

void save_compress_model(const CompressModel& model, const std::string& path) {
  std::vector<NamedMatrix> params;
  params.push_back({"embed", model.embed->w});
  append_net_params(params, "comp", *model.compressor, model.variant());
  if (model.extractor) {
    append_net_params(params, "extr", *model.extractor, model.variant());
  }
  if (model.score_head) {
    params.push_back({"score.W", model.score_head->w});
    params.push_back({"score.b", model.score_head->b});
  }
  save_model(params, path);
}

CompressModel load_compress_model(const std::string& path) {
  const std::vector<NamedMatrix> params = load_model(path);
  const DenseMatrix& embed = find_param(params, "embed");

  CompressModelConfig config;
  config.d = embed.rows();
  config.n_kept = embed.cols();
  if (has_param(params, "comp.hidden.W")) {
    config.variant = CompressorVariant::NonLinear;
    config.n_hidden = find_param(params, "comp.hidden.W").rows();
  } else {
    config.variant = CompressorVariant::Linear;
    config.n_hidden = 0;
  }
  config.with_extractor =
      has_param(params, "extr.W") || has_param(params, "extr.hidden.W");
  config.with_score = has_param(params, "score.W");

  CompressModel model(config);
  load_matrix(model.embed->w, params, "embed");
  load_net_params(*model.compressor, params, "comp", config.variant);
  if (model.extractor) {
    load_net_params(*model.extractor, params, "extr", config.variant);
  }
  if (model.score_head) {
    load_matrix(model.score_head->w, params, "score.W");
    load_matrix(model.score_head->b, params, "score.b");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training

namespace {

void validate_train_config(const CompressTrainConfig& config) {
  if (config.gamma <= 0.0) {
    throw std::invalid_argument("train: learning rate must be positive");
  }
  if (config.iters < 0) {
    throw std::invalid_argument("train: iteration count must be >= 0");
  }
  if (config.tree_policy == TreePolicy::Greedy) {
    throw std::invalid_argument("train: greedy trees are an evaluation policy");
  }
}

MergeSteps draw_steps(TreePolicy policy, int length, Rng& rng) {
  if (policy == TreePolicy::Random) {
    return random_tree(length, rng);
  }
  return left_to_right_steps(length);
}

// Shared iteration scaffold: epochs, loss windows, eval cadence.
template <typename PerSample>
void run_training(const std::vector<TokenSequence>& data,
                  const CompressTrainConfig& config, const TrainCallback& on_eval,
                  Rng& rng, PerSample&& per_sample) {
  if (data.empty()) {
    throw std::invalid_argument("train: empty training set");
  }
  if (on_eval) {
    on_eval(0, 0.0, false);
  }
  EpochSampler sampler(data.size(), config.reshuffle);
  double window_loss = 0.0;
  long long window_count = 0;
  for (long long iter = 1; iter <= config.iters; ++iter) {
    const TokenSequence& sample = data[sampler.next(rng)];
    check_depth(static_cast<int>(sample.size()), config.max_length, "train");
    window_loss += per_sample(sample);
    ++window_count;
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

}  // namespace

void train_local_mse(CompressModel& model, const std::vector<TokenSequence>& data,
                     const CompressTrainConfig& config, const TrainCallback& on_eval) {
  validate_train_config(config);
  if (!model.extractor) {
    throw std::invalid_argument("train_local_mse: model has no extractor");
  }
  Rng rng(config.seed);
  run_training(data, config, on_eval, rng, [&](const TokenSequence& s) {
    const int length = static_cast<int>(s.size());
    if (length < 2) {
      return 0.0;
    }
    const MergeSteps steps = draw_steps(config.tree_policy, length, rng);
    std::vector<DenseMatrix> working = columns_of(model.embed->forward(s));
    // leaf_at[i] is the sentence position (0-based) if element i is still an
    // original word vector, -1 once it is a compressed code.
    std::vector<int> leaf_at(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      leaf_at[i] = static_cast<int>(i);
    }
    double sample_loss = 0.0;
    for (const int p : steps) {
      DenseMatrix x = vconcat(working[static_cast<std::size_t>(p - 1)],
                              working[static_cast<std::size_t>(p)]);
      DenseMatrix z = model.compressor->forward(x);
      DenseMatrix xhat = model.extractor->forward(z);
      MseResult mse = mse_criterion(xhat, x);
      sample_loss += mse.loss;
      DenseMatrix gz = model.extractor->backward(z, mse.grad_output);
      DenseMatrix gx = model.compressor->backward(x, gz);
      auto [gtop, gbottom] = vsplit(gx);
      const int left_leaf = leaf_at[static_cast<std::size_t>(p - 1)];
      const int right_leaf = leaf_at[static_cast<std::size_t>(p)];
      if (left_leaf >= 0) {
        model.embed->backward({s[static_cast<std::size_t>(left_leaf)]}, gtop);
      }
      if (right_leaf >= 0) {
        model.embed->backward({s[static_cast<std::size_t>(right_leaf)]}, gbottom);
      }
      sgd_step(model, config.gamma);
      working[static_cast<std::size_t>(p - 1)] = std::move(z);
      working.erase(working.begin() + p);
      leaf_at[static_cast<std::size_t>(p - 1)] = -1;
      leaf_at.erase(leaf_at.begin() + p);
    }
    return sample_loss / static_cast<double>(steps.size());
  });
}

void train_global_mse(CompressModel& model, const std::vector<TokenSequence>& data,
                      const CompressTrainConfig& config, const TrainCallback& on_eval) {
  validate_train_config(config);
  if (!model.extractor) {
    throw std::invalid_argument("train_global_mse: model has no extractor");
  }
  Rng rng(config.seed);
  const int d = model.d();
  run_training(data, config, on_eval, rng, [&](const TokenSequence& s) {
    const int length = static_cast<int>(s.size());
    if (length < 2) {
      return 0.0;
    }
    const MergeSteps steps = draw_steps(config.tree_policy, length, rng);
    const DenseMatrix embedded = model.embed->forward(s);
    const CompressTrace ctrace = compress_sentence(*model.compressor, embedded, steps);
    const ExtractTrace etrace = extract_sentence(*model.extractor, ctrace.code, steps);
    // One loss over all columns: mean over l of the per-column MSE. The
    // original word vectors act as constant targets.
    double loss = 0.0;
    DenseMatrix grad_columns(d, length);
    for (int j = 0; j < length; ++j) {
      for (int i = 0; i < d; ++i) {
        const double diff = embedded(i, j) - etrace.columns(i, j);
        loss += diff * diff / d;
        grad_columns(i, j) =
            (2.0 / d) * (etrace.columns(i, j) - embedded(i, j)) / length;
      }
    }
    loss /= length;
    const DenseMatrix grad_code =
        extract_backward(*model.extractor, etrace, steps, grad_columns);
    const DenseMatrix grad_embedded =
        compress_backward(*model.compressor, ctrace, length, grad_code);
    model.embed->backward(s, grad_embedded);
    sgd_step(model, config.gamma);
    return loss;
  });
}

void train_ranking(CompressModel& model, const std::vector<TokenSequence>& data,
                   const CompressTrainConfig& config, const TrainCallback& on_eval) {
  validate_train_config(config);
  if (!model.score_head) {
    throw std::invalid_argument("train_ranking: model has no score head");
  }
  if (config.margin <= 0.0) {
    throw std::invalid_argument("train_ranking: margin must be positive");
  }
  Rng rng(config.seed);
  run_training(data, config, on_eval, rng, [&](const TokenSequence& s) {
    const int length = static_cast<int>(s.size());
    // One steps draw shared by the positive and its corrupted copy: the two
    // differ in one word, so the same tree keeps the comparison fair.
    const MergeSteps steps = draw_steps(config.tree_policy, length, rng);
    const NegativeSample neg =
        make_negative(s, config.negative_scheme, rng, model.n_kept());

    const DenseMatrix embedded_pos = model.embed->forward(s);
    const CompressTrace trace_pos =
        compress_sentence(*model.compressor, embedded_pos, steps);
    const double score_pos = scalar(model.score_head->forward(trace_pos.code));

    const DenseMatrix embedded_neg = model.embed->forward(neg.tokens);
    const CompressTrace trace_neg =
        compress_sentence(*model.compressor, embedded_neg, steps);
    const double score_neg = scalar(model.score_head->forward(trace_neg.code));

    const MarginResult margin =
        margin_ranking_criterion(score_pos, score_neg, config.margin);
    if (margin.loss > 0.0) {
      const DenseMatrix grad_code_pos =
          model.score_head->backward(trace_pos.code, scalar_matrix(margin.d_pos));
      model.embed->backward(
          s, compress_backward(*model.compressor, trace_pos, length, grad_code_pos));
      const DenseMatrix grad_code_neg =
          model.score_head->backward(trace_neg.code, scalar_matrix(margin.d_neg));
      model.embed->backward(neg.tokens, compress_backward(*model.compressor, trace_neg,
                                                          length, grad_code_neg));
      sgd_step(model, config.gamma);
    }
    return margin.loss;
  });
}

// ---------------------------------------------------------------------------
// Evaluation

StepsProvider fixed_steps_provider(TreePolicy policy, std::uint64_t seed) {
  if (policy == TreePolicy::Greedy) {
    throw std::invalid_argument(
        "fixed_steps_provider: greedy trees need a model (see treesearch)");
  }
  if (policy == TreePolicy::LeftToRight) {
    return [](const TokenSequence& s) {
      return left_to_right_steps(static_cast<int>(s.size()));
    };
  }
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const TokenSequence& s) {
    return random_tree(static_cast<int>(s.size()), *rng);
  };
}

double score_sequence(CompressModel& model, const TokenSequence& s,
                      const MergeSteps& steps) {
  if (!model.score_head) {
    throw std::invalid_argument("score_sequence: model has no score head");
  }
  const DenseMatrix embedded = model.embed->forward(s);
  const CompressTrace trace = compress_sentence(*model.compressor, embedded, steps);
  return scalar(model.score_head->forward(trace.code));
}

namespace {

// 1-based index of the embedding column nearest to v; ties to the lowest.
int nearest_embedding_index(const EmbeddingTable& embeddings, const DenseMatrix& v) {
  int best = 1;
  double best_dist = -1.0;
  for (int idx = 1; idx <= embeddings.entries(); ++idx) {
    double dist = 0.0;
    for (int i = 0; i < embeddings.dim(); ++i) {
      const double diff = embeddings.w(i, idx - 1) - v[i];
      dist += diff * diff;
    }
    if (best_dist < 0.0 || dist < best_dist) {
      best_dist = dist;
      best = idx;
    }
  }
  return best;
}

}  // namespace

double correct_extraction_rate(CompressModel& model,
                               const std::vector<TokenSequence>& sentences,
                               const StepsProvider& steps_for) {
  if (!model.extractor) {
    throw std::invalid_argument("correct_extraction_rate: model has no extractor");
  }
  if (sentences.empty()) {
    throw std::invalid_argument("correct_extraction_rate: empty test set");
  }
  long long correct = 0;
  long long total = 0;
  for (const TokenSequence& s : sentences) {
    const MergeSteps steps = steps_for(s);
    const DenseMatrix embedded = model.embed->forward(s);
    const CompressTrace trace = compress_sentence(*model.compressor, embedded, steps);
    const ExtractTrace extracted = extract_sentence(*model.extractor, trace.code, steps);
    for (int j = 0; j < static_cast<int>(s.size()); ++j) {
      const int nearest =
          nearest_embedding_index(*model.embed, column_of(extracted.columns, j));
      if (nearest == s[static_cast<std::size_t>(j)]) {
        ++correct;
      }
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

int sentence_rank(CompressModel& model, const TokenSequence& s, int position,
                  const MergeSteps& steps) {
  return sentence_rank(
      model, s, position, [&steps](const TokenSequence&) { return steps; }, false);
}

int sentence_rank(CompressModel& model, const TokenSequence& s, int position,
                  const StepsProvider& steps_for_variant, bool per_variant_steps) {
  const int length = static_cast<int>(s.size());
  if (position < 1 || position > length) {
    throw std::invalid_argument("sentence_rank: position " + std::to_string(position) +
                                " out of range [1, " + std::to_string(length) + "]");
  }
  const int n = model.n_kept();
  const int true_word = s[static_cast<std::size_t>(position - 1)];
  MergeSteps shared_steps;
  if (!per_variant_steps) {
    shared_steps = steps_for_variant(s);
  }
  TokenSequence variant = s;
  double true_score = 0.0;
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (int word = 1; word <= n; ++word) {
    variant[static_cast<std::size_t>(position - 1)] = word;
    const MergeSteps steps =
        per_variant_steps ? steps_for_variant(variant) : shared_steps;
    const double score = score_sequence(model, variant, steps);
    scores[static_cast<std::size_t>(word - 1)] = score;
    if (word == true_word) {
      true_score = score;
    }
  }
  int rank = 1;
  for (int word = 1; word <= n; ++word) {
    const double score = scores[static_cast<std::size_t>(word - 1)];
    if (score > true_score || (score == true_score && word < true_word)) {
      ++rank;
    }
  }
  return rank;
}

std::vector<int> nearest_words(const EmbeddingTable& embeddings, int query_index,
                               int k) {
  const int n = embeddings.entries();
  if (query_index < 1 || query_index > n) {
    throw std::invalid_argument("nearest_words: index " + std::to_string(query_index) +
                                " out of range [1, " + std::to_string(n) + "]");
  }
  if (k < 0 || k >= n) {
    throw std::invalid_argument("nearest_words: k must be in [0, N)");
  }
  const DenseMatrix query = column_of(embeddings.w, query_index - 1);
  std::vector<std::pair<double, int>> dists;
  dists.reserve(static_cast<std::size_t>(n - 1));
  for (int idx = 1; idx <= n; ++idx) {
    if (idx == query_index) {
      continue;
    }
    dists.emplace_back(euclidean_sq(column_of(embeddings.w, idx - 1), query), idx);
  }
  std::sort(dists.begin(), dists.end());
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.push_back(dists[static_cast<std::size_t>(i)].second);
  }
  return out;
}

std::vector<TokenSequence> nearest_ngrams(CompressModel& model,
                                          const TokenSequence& query, int k,
                                          int limit_n, long long enumeration_cap) {
  if (query.size() != 2) {
    throw std::invalid_argument("nearest_ngrams: query must be a pair");
  }
  if (limit_n < 1 || limit_n > model.n_kept()) {
    throw std::invalid_argument("nearest_ngrams: limit must be in [1, N]");
  }
  const long long total = static_cast<long long>(limit_n) * limit_n;
  if (total > enumeration_cap) {
    throw std::invalid_argument("nearest_ngrams: " + std::to_string(total) +
                                " pairs exceed the enumeration cap of " +
                                std::to_string(enumeration_cap));
  }
  if (k < 0 || static_cast<long long>(k) > total - 1) {
    throw std::invalid_argument("nearest_ngrams: k out of range for " +
                                std::to_string(total) + " candidate pairs");
  }
  const MergeSteps steps = {1};
  const DenseMatrix query_embedded = model.embed->forward(query);
  const DenseMatrix query_code =
      compress_sentence(*model.compressor, query_embedded, steps).code;

  std::vector<std::pair<double, std::pair<int, int>>> dists;
  dists.reserve(static_cast<std::size_t>(total));
  TokenSequence candidate(2);
  for (int a = 1; a <= limit_n; ++a) {
    for (int b = 1; b <= limit_n; ++b) {
      if (a == query[0] && b == query[1]) {
        continue;
      }
      candidate[0] = a;
      candidate[1] = b;
      const DenseMatrix code =
          compress_sentence(*model.compressor, model.embed->forward(candidate), steps)
              .code;
      dists.push_back({euclidean_sq(code, query_code), {a, b}});
    }
  }
  std::sort(dists.begin(), dists.end());
  std::vector<TokenSequence> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.push_back({dists[static_cast<std::size_t>(i)].second.first,
                   dists[static_cast<std::size_t>(i)].second.second});
  }
  return out;
}

}  // namespace embedtree
