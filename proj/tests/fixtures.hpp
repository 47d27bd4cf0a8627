#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "painter/model.hpp"
#include "painter/trainer.hpp"

namespace painter::testing {

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("painter_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline nn::ModelConfig micro_model() {
  nn::ModelConfig c;
  c.n_layers = 2;
  c.hidden = 16;
  c.heads = 2;
  c.ctx_len = 160;
  c.grid = 2;
  c.feat = 8;
  c.pos_dim = 8;
  c.enc_channels = {4, 4, 4};
  return c;
}

inline Dataset micro_dataset(std::size_t n = 8, std::uint64_t seed = 5) {
  DatasetConfig dc;
  dc.classes = {"circle", "square", "triangle"};
  dc.samples = n;
  dc.eval_samples = 4;
  dc.seed = seed;
  dc.tasks = {TaskKind::kClassification, TaskKind::kRemoveAll, TaskKind::kReproduce};
  dc.max_objects = 1;
  dc.relationship_fraction = 0;
  return build_dataset(dc);
}

inline TrainConfig micro_train(int steps) {
  TrainConfig tc;
  tc.steps = steps;
  tc.batch_size = 2;
  tc.mix_ratio = 0;
  tc.lr = 1e-3;
  tc.seed = 3;
  tc.model = micro_model();
  return tc;
}

/// Emits a fixed word sequence, then ends the response.
class ScriptedModel : public LanguageModel {
 public:
  ScriptedModel(Vocab v, std::vector<std::string> script) : v_(std::move(v)) {
    for (const auto& w : script) ids_.push_back(v_.id(w));
  }
  const Vocab& vocab() const override { return v_; }
  std::string id() const override { return "scripted"; }
  std::unique_ptr<TokenDecoder> start() const override { return std::make_unique<Dec>(*this); }

  mutable std::vector<std::uint64_t> seen_image_hashes;

 private:
  struct Dec : TokenDecoder {
    explicit Dec(const ScriptedModel& m) : m(m) {}
    std::vector<float> feed(TokenId token, const Canvas* image) override {
      if (image) m.seen_image_hashes.push_back(canvas_hash(*image));
      if (token == m.v_.id(tags::kResponseOpen)) started = true;
      else if (started && token != Vocab::kPlaceholderId) ++next;
      std::vector<float> logits(static_cast<std::size_t>(m.v_.size()), 0.0f);
      const TokenId want = next < m.ids_.size() ? m.ids_[next] : m.v_.id(tags::kResponseClose);
      if (started) logits[static_cast<std::size_t>(want)] = 50.0f;
      return logits;
    }
    const ScriptedModel& m;
    bool started = false;
    std::size_t next = 0;
  };
  Vocab v_;
  std::vector<TokenId> ids_;
};

inline Vocab test_vocab() { return build_vocab(base_corpus({"circle", "square", "triangle", "tree", "apple"})); }

}  // namespace painter::testing
