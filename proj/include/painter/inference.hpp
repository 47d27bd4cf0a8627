#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "painter/model.hpp"

namespace painter {

struct SamplingPolicy {
  enum class Kind { kGreedy, kTopP };
  Kind kind = Kind::kGreedy;
  double p = 0.9;
  std::uint64_t seed = 0;

  static SamplingPolicy greedy() { return {}; }
  static SamplingPolicy top_p(double p, std::uint64_t seed) { return {Kind::kTopP, p, seed}; }
};

/// Smallest prefix of ids sorted by descending probability (ties by
/// ascending id) whose mass reaches p.
std::vector<TokenId> nucleus(std::span<const double> probs, double p);

std::vector<double> softmax(std::span<const float> logits);

/// Greedy: argmax, lowest id on ties. TopP: draw from the renormalized
/// nucleus using `rng`.
TokenId sample_token(std::span<const float> logits, const SamplingPolicy& policy, Rng& rng);

struct Budgets {
  int max_tokens = 2048;
  int max_strokes = 64;
};

struct Event {
  enum class Kind { kText, kStroke, kDone };
  Kind kind = Kind::kText;
  std::string token;
  Stroke stroke;
  std::uint64_t canvas_hash = 0;
  std::string reason;
};

namespace done_reason {
inline constexpr std::string_view kResponseEnd = "response-end";
inline constexpr std::string_view kMaxTokens = "max-tokens";
inline constexpr std::string_view kMaxStrokes = "max-strokes";
inline constexpr std::string_view kContextFull = "context-full";
inline constexpr std::string_view kCancelled = "cancelled";
}  // namespace done_reason

/// Live canvas plus the transcript of the last command. Not thread safe;
/// one command at a time.
class Session {
 public:
  Session(std::shared_ptr<const LanguageModel> model, SamplingPolicy policy = {}, Budgets budgets = {});

  const LanguageModel& model() const { return *model_; }
  Canvas canvas;
  Transcript transcript;
  SamplingPolicy policy;
  Budgets budgets;
  Rng rng;
  /// Strokes emitted so far, across commands.
  std::vector<Stroke> strokes;
  /// Dropped malformed strokes, across commands.
  int dropped_strokes = 0;

  void set_policy(const SamplingPolicy& p) {
    policy = p;
    rng = Rng(p.seed);
  }

 private:
  std::shared_ptr<const LanguageModel> model_;
};

using EventSink = std::function<void(const Event&)>;

/// Command token ids. Throws UnknownWord for words outside the vocabulary
/// and for markup tags.
std::vector<TokenId> check_command(const Vocab& v, std::string_view text);

/// One draw/observe loop: prompts with the current canvas (or `prompt_image`
/// when given, as for reproduction), generates, rasterizes each completed
/// stroke onto session.canvas and feeds the new canvas back. Malformed
/// strokes are dropped. Always ends with exactly one Done event, whose
/// reason is returned. Throws UnknownWord before generating anything when
/// the command has words outside the vocabulary.
std::string run_command(Session& session, std::string_view text, const EventSink& sink = {},
                        const Canvas* prompt_image = nullptr, const std::atomic<bool>* cancel = nullptr);

/// Greedy run; the text words joined, trimmed.
std::string classify(Session& session, std::string_view text);

std::string event_to_json(const Event& e);

}  // namespace painter
