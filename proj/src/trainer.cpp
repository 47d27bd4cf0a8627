#include "painter/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

namespace painter {

extern const char* const kBundledCorpus;

using nlohmann::json;

std::string_view bundled_corpus() { return kBundledCorpus; }

void TrainConfig::validate() const {
  if (!(lr > 0)) throw Error("train config: lr must be positive");
  if (batch_size < 1) throw Error("train config: batch_size must be >= 1");
  if (steps < 0) throw Error("train config: steps must be >= 0");
  if (mix_ratio < 0 || mix_ratio > 1) throw Error("train config: mix_ratio must be in [0,1]");
  if (text_window < 1) throw Error("train config: text_window must be >= 1");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr", c.lr},
           {"batch_size", c.batch_size},
           {"steps", c.steps},
           {"seed", c.seed},
           {"mix_ratio", c.mix_ratio},
           {"checkpoint_every", c.checkpoint_every},
           {"dataset_paths", c.dataset_paths},
           {"text_corpus_path", c.text_corpus_path},
           {"grad_clip", c.grad_clip},
           {"text_window", c.text_window},
           {"model", c.model}};
}

void from_json(const json& j, TrainConfig& c) {
  TrainConfig d;
  c.lr = j.value("lr", d.lr);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.steps = j.value("steps", d.steps);
  c.seed = j.value("seed", d.seed);
  c.mix_ratio = j.value("mix_ratio", d.mix_ratio);
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.dataset_paths = j.value("dataset_paths", d.dataset_paths);
  c.text_corpus_path = j.value("text_corpus_path", d.text_corpus_path);
  c.grad_clip = j.value("grad_clip", d.grad_clip);
  c.text_window = j.value("text_window", d.text_window);
  c.model = j.contains("model") ? j.at("model").get<nn::ModelConfig>() : default_model_config();
}

nn::ModelConfig default_model_config() { return nn::ModelConfig{}; }

Transcript sample_transcript(const Sample& s) {
  Transcript t;
  if (!s.command_text.empty()) t.command.push_back(TextSegment{s.command_text});
  t.command.push_back(ImagePlaceholder{0});
  t.images.push_back(std::make_shared<const Canvas>(s.prompt_canvas()));
  const auto feedback = s.feedback_canvases();
  for (std::size_t i = 0; i < s.response_strokes.size(); ++i) {
    t.append_response_text(serialize_stroke(s.response_strokes[i]));
    t.append_response_image(std::make_shared<const Canvas>(feedback[i]));
  }
  if (!s.response_text.empty()) t.append_response_text(s.response_text);
  return t;
}

TrainingSequence sample_to_sequence(const Sample& s, const Vocab& v, int ctx_len) {
  const auto t = sample_transcript(s);
  const auto words = lex_words(serialize_transcript(t));
  std::vector<TokenId> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(v.id(w));
  if (ids.size() - 1 > static_cast<std::size_t>(ctx_len))
    throw ContextOverflow("sample needs " + std::to_string(ids.size() - 1) + " positions, context is " +
                          std::to_string(ctx_len));

  TrainingSequence seq;
  seq.input.tokens.assign(ids.begin(), ids.end() - 1);
  seq.targets.assign(ids.begin() + 1, ids.end());
  const TokenId response_open = v.id(tags::kResponseOpen);
  bool in_response = false;
  int image = 0;
  for (std::size_t p = 0; p < seq.input.tokens.size(); ++p) {
    if (seq.input.tokens[p] == Vocab::kPlaceholderId) {
      seq.input.placeholders.push_back({static_cast<int>(p), image});
      seq.input.images.push_back(t.images[static_cast<std::size_t>(image)]);
      ++image;
    }
    if (seq.input.tokens[p] == response_open) in_response = true;
    seq.mask.push_back(in_response && seq.targets[p] != Vocab::kPlaceholderId);
  }
  return seq;
}

TrainingSequence text_to_sequence(std::span<const TokenId> window) {
  if (window.size() < 2) throw ShapeMismatch("text window needs at least two tokens");
  TrainingSequence seq;
  seq.input.tokens.assign(window.begin(), window.end() - 1);
  seq.targets.assign(window.begin() + 1, window.end());
  seq.mask.assign(seq.targets.size(), true);
  return seq;
}

Vocab training_vocab(std::span<const Sample> samples, const std::vector<std::string>& classes,
                     std::string_view corpus_text) {
  auto corpus = base_corpus(classes);
  for (const auto& s : samples) corpus.push_back(serialize_transcript(sample_transcript(s)));
  corpus.emplace_back(corpus_text);
  return build_vocab(corpus);
}

bool detect_divergence(std::span<const LossRecord> curve, int window, double tolerance) {
  std::vector<double> task;
  for (const auto& r : curve)
    if (r.component == "task") task.push_back(r.loss);
  double prev = -1;
  for (std::size_t start = 0; start + static_cast<std::size_t>(window) <= task.size();
       start += static_cast<std::size_t>(window)) {
    const double mean =
        std::accumulate(task.begin() + static_cast<std::ptrdiff_t>(start),
                        task.begin() + static_cast<std::ptrdiff_t>(start) + window, 0.0) / window;
    if (prev >= 0 && mean > prev * (1 + tolerance)) return true;
    prev = mean;
  }
  return false;
}

std::string loss_csv(std::span<const LossRecord> curve, bool header) {
  std::string out = header ? "step,loss,component\n" : "";
  char buf[96];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%lld,%.9g,%s\n", static_cast<long long>(r.step), r.loss, r.component.c_str());
    out += buf;
  }
  return out;
}

namespace {

std::vector<TokenId> corpus_tokens(std::string_view text, const Vocab& v) {
  std::vector<TokenId> ids;
  for (const auto& w : lex_words(text))
    if (auto id = v.find(w)) ids.push_back(*id);
  return ids;
}

class BatchPlan {
 public:
  BatchPlan(std::uint64_t seed, std::size_t n) : seed_(seed), n_(n) {}

  std::size_t index(std::int64_t step, int batch, int b) {
    const auto k = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(batch) + static_cast<std::uint64_t>(b);
    const auto epoch = k / n_;
    auto it = perms_.find(epoch);
    if (it == perms_.end()) {
      if (perms_.size() > 4) perms_.erase(perms_.begin());
      std::vector<std::size_t> p(n_);
      std::iota(p.begin(), p.end(), 0);
      Rng rng(mix_seed(seed_, 0x5eed0000ULL + epoch));
      rng.shuffle(p);
      it = perms_.emplace(epoch, std::move(p)).first;
    }
    return it->second[k % n_];
  }

 private:
  std::uint64_t seed_;
  std::size_t n_;
  std::map<std::uint64_t, std::vector<std::size_t>> perms_;
};

std::vector<std::string> manifest_classes(const json& manifest, std::span<const Sample> samples) {
  if (manifest.is_object() && manifest.contains("classes")) return manifest.at("classes").get<std::vector<std::string>>();
  std::vector<std::string> out;
  for (const auto& s : samples)
    for (const auto& o : s.objects)
      if (std::find(out.begin(), out.end(), o.class_name) == out.end()) out.push_back(o.class_name);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, std::span<const Sample> samples, std::string_view corpus_text,
                  TrainOptions opt) {
  cfg.validate();
  if (samples.empty()) throw Error("training needs at least one sample");

  Checkpoint ck;
  if (opt.resume) {
    ck = std::move(*opt.resume);
    if (!ck.adam) ck.adam = nn::adam_init<float>(ck.config);
  } else {
    ck.dataset = opt.dataset_manifest;
    ck.vocab = training_vocab(samples, manifest_classes(opt.dataset_manifest, samples), corpus_text);
    ck.config = cfg.model;
    ck.config.vocab = ck.vocab.size();
    ck.weights = nn::init_weights<float>(ck.config, mix_seed(cfg.seed, 0x1417));
    ck.adam = nn::adam_init<float>(ck.config);
  }
  ck.train = cfg;
  const auto& mc = ck.config;
  mc.validate();

  for (const auto& s : samples) {
    const auto n = sample_token_count(s);
    if (n > static_cast<std::size_t>(mc.ctx_len) + 1)
      throw ContextOverflow("a training sample needs " + std::to_string(n - 1) + " positions, context is " +
                            std::to_string(mc.ctx_len));
  }
  const auto text_ids = corpus_tokens(corpus_text, ck.vocab);
  const bool have_text = text_ids.size() >= 2 && cfg.mix_ratio > 0;
  const auto window = std::min<std::size_t>(static_cast<std::size_t>(std::min(cfg.text_window, mc.ctx_len)) + 1,
                                            text_ids.size());

  BatchPlan plan(cfg.seed, samples.size());
  const nn::AdamParams adam{cfg.lr};
  auto grads = nn::zero_weights<float>(mc);
  TrainResult result;

  std::ofstream csv;
  if (opt.out_dir) {
    std::filesystem::create_directories(*opt.out_dir);
    const auto path = *opt.out_dir / "loss.csv";
    const bool append = opt.resume.has_value() && std::filesystem::exists(path);
    csv.open(path, append ? std::ios::app : std::ios::trunc);
    if (!csv) throw IoError("cannot write " + path.string());
    if (!append) csv << "step,loss,component\n";
  }

  for (std::int64_t step = ck.step; step < cfg.steps; ++step) {
    Rng step_rng(mix_seed(cfg.seed ^ 0x7e47ULL, static_cast<std::uint64_t>(step)));
    const bool text_batch = have_text && step_rng.coin(cfg.mix_ratio);
    std::vector<TrainingSequence> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (text_batch) {
        const auto start =
            static_cast<std::size_t>(step_rng.uniform_int(0, static_cast<int>(text_ids.size() - window)));
        batch.push_back(text_to_sequence(std::span(text_ids).subspan(start, window)));
      } else {
        batch.push_back(sample_to_sequence(samples[plan.index(step, cfg.batch_size, b)], ck.vocab, mc.ctx_len));
      }
    }
    std::size_t total = 0;
    for (const auto& s : batch) total += static_cast<std::size_t>(std::count(s.mask.begin(), s.mask.end(), true));

    nn::zero_grads(grads);
    double loss = 0;
    for (const auto& s : batch) {
      const auto count = static_cast<double>(std::count(s.mask.begin(), s.mask.end(), true));
      const float weight = static_cast<float>(count / static_cast<double>(total));
      loss += weight * static_cast<double>(nn::backward(s.input, s.targets, s.mask, ck.weights, mc, grads, weight));
    }
    nn::clip_grad_norm(grads, cfg.grad_clip);
    nn::adam_step(ck.weights, grads, *ck.adam, adam);
    ck.step = step + 1;

    LossRecord rec{step, loss, text_batch ? "text" : "task"};
    result.curve.push_back(rec);
    if (csv) csv << loss_csv(std::span(&rec, 1), false) << std::flush;
    if (opt.progress) opt.progress(rec);
    if (opt.out_dir && cfg.checkpoint_every > 0 && ck.step % cfg.checkpoint_every == 0) {
      char name[48];
      std::snprintf(name, sizeof name, "checkpoint-%06lld.ckpt", static_cast<long long>(ck.step));
      save_checkpoint(ck, *opt.out_dir / name);
    }
  }
  if (opt.out_dir) save_checkpoint(ck, *opt.out_dir / "model.ckpt");
  result.diverged = detect_divergence(result.curve);
  result.checkpoint = std::move(ck);
  return result;
}

}  // namespace painter
