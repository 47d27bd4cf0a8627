#pragma once

#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "painter/checkpoint.hpp"
#include "painter/dataset.hpp"
#include "painter/nn/decoder.hpp"

namespace painter {

/// One generation's worth of decoder state.
class TokenDecoder {
 public:
  virtual ~TokenDecoder() = default;
  /// Feeds one token (with its canvas when it is a placeholder) and returns
  /// next-token logits. Throws ContextOverflow when the context is full.
  virtual std::vector<float> feed(TokenId token, const Canvas* image) = 0;
};

/// Anything the inference loop can drive. Implementations are immutable and
/// may be shared across sessions.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual const Vocab& vocab() const = 0;
  virtual std::unique_ptr<TokenDecoder> start() const = 0;
  virtual std::string id() const = 0;
};

class TransformerModel : public LanguageModel {
 public:
  explicit TransformerModel(Checkpoint ck, std::string id = "transformer");

  const Vocab& vocab() const override { return ck_.vocab; }
  std::unique_ptr<TokenDecoder> start() const override;
  std::string id() const override { return id_; }

  const nn::ModelConfig& config() const { return ck_.config; }
  const nn::Weights<float>& weights() const { return ck_.weights; }
  const Checkpoint& checkpoint() const { return ck_; }

 private:
  Checkpoint ck_;
  std::string id_;
};

/// Fake model that replays ground truth: it recognizes a sample by its
/// command words and prompt canvas, then puts all mass on the sample's next
/// response word. Unknown prompts end the response immediately.
class ReplayOracle : public LanguageModel {
 public:
  ReplayOracle(Vocab v, std::span<const Sample> samples);

  const Vocab& vocab() const override { return vocab_; }
  std::unique_ptr<TokenDecoder> start() const override;
  std::string id() const override { return "replay-oracle"; }

  /// Response words without placeholders, keyed by command and prompt hash.
  struct Entry {
    std::vector<TokenId> response;
  };
  const Entry* lookup(std::span<const TokenId> command, std::uint64_t prompt_hash) const;

 private:
  Vocab vocab_;
  std::unordered_map<std::string, Entry> entries_;
};

/// Vocabulary covering the samples, for oracle runs without a checkpoint.
Vocab oracle_vocab(std::span<const Sample> samples);

}  // namespace painter
