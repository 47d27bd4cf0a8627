#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "painter/checkpoint.hpp"
#include "painter/dataset.hpp"
#include "painter/nn/transformer.hpp"

namespace painter {

struct TrainConfig {
  double lr = 3e-4;
  int batch_size = 8;
  int steps = 1000;
  std::uint64_t seed = 0;
  double mix_ratio = 0.1;  // fraction of text-only batches
  int checkpoint_every = 0;
  std::vector<std::string> dataset_paths;
  std::string text_corpus_path;
  double grad_clip = 1.0;
  int text_window = 64;
  nn::ModelConfig model;  // vocab is filled from the data

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Small plain-text corpus shipped with the library.
std::string_view bundled_corpus();

/// Desk-scale model defaults.
nn::ModelConfig default_model_config();

struct TrainingSequence {
  nn::SequenceInput input;
  std::vector<TokenId> targets;
  std::vector<bool> mask;
};

/// Full transcript of a sample: the command with the prompt canvas bound to
/// its placeholder, then each response stroke followed by a placeholder bound
/// to the canvas after that stroke, then any response text.
Transcript sample_transcript(const Sample& s);

/// Next-token inputs/targets over the tokenized transcript. The mask covers
/// targets inside the response, end tag included, except placeholders.
/// Throws ContextOverflow when the input exceeds ctx_len.
TrainingSequence sample_to_sequence(const Sample& s, const Vocab& v, int ctx_len);

/// Text-only language modeling over a token window; every target counts.
TrainingSequence text_to_sequence(std::span<const TokenId> window);

/// Base corpus, then every word of the samples, then the text corpus.
Vocab training_vocab(std::span<const Sample> samples, const std::vector<std::string>& classes,
                     std::string_view corpus_text);

struct LossRecord {
  std::int64_t step = 0;
  double loss = 0;
  std::string component;  // "task" or "text"
  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

/// True when the smoothed task loss rises by more than `tolerance` (relative)
/// from one window to the next.
bool detect_divergence(std::span<const LossRecord> curve, int window = 50, double tolerance = 0.1);

std::string loss_csv(std::span<const LossRecord> curve, bool header = true);

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<Checkpoint> resume;
  nlohmann::json dataset_manifest;
  std::function<void(const LossRecord&)> progress;
};

struct TrainResult {
  std::vector<LossRecord> curve;
  bool diverged = false;
  Checkpoint checkpoint;
};

/// Deterministic in (samples, corpus, config): the batch of step s is drawn
/// from a permutation seeded by (seed, epoch) and the text/task choice from
/// (seed, s), so a resumed run continues the same loss curve.
TrainResult train(const TrainConfig& cfg, std::span<const Sample> samples, std::string_view corpus_text,
                  TrainOptions opt = {});

}  // namespace painter
