#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "painter/canvas.hpp"
#include "painter/stroke.hpp"

namespace painter {

// Literal tag words of the prompt/response language. They are ordinary
// vocabulary entries; only the placeholder and padding have reserved ids.
namespace tags {
inline constexpr std::string_view kCommandOpen = "<command>";
inline constexpr std::string_view kCommandClose = "</command>";
inline constexpr std::string_view kResponseOpen = "<response>";
inline constexpr std::string_view kResponseClose = "</response>";
inline constexpr std::string_view kStrokeOpen = "<stroke>";
inline constexpr std::string_view kStrokeClose = "</stroke>";
inline constexpr std::string_view kPlaceholder = "<image-placeholder>";
inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kColor = "color";
inline constexpr std::string_view kWidth = "width";
inline constexpr std::string_view kPoints = "points";
inline constexpr std::string_view kComma = ",";
}  // namespace tags

/// Splits on whitespace runs; commas are always their own word.
std::vector<std::string> lex_words(std::string_view text);

/// Joins words with single spaces, gluing "," onto the preceding word.
std::string join_words(std::span<const std::string> words);

std::string serialize_stroke(const Stroke& s);
Stroke parse_stroke(std::string_view text);

struct TextSegment {
  std::string text;
  friend bool operator==(const TextSegment&, const TextSegment&) = default;
};

struct ImagePlaceholder {
  int image_index = 0;
  friend bool operator==(const ImagePlaceholder&, const ImagePlaceholder&) = default;
};

using PromptSegment = std::variant<TextSegment, ImagePlaceholder>;

/// Interleaved command/response text with image placeholders. Placeholder
/// indices run over command then response, in order. `images` holds the
/// canvas bound to each placeholder; a parsed transcript has unbound
/// (null) entries.
struct Transcript {
  std::vector<PromptSegment> command;
  std::vector<PromptSegment> response;
  bool response_closed = true;
  std::vector<std::shared_ptr<const Canvas>> images;

  int placeholder_count() const;
  /// Appends to the response, merging with a trailing text segment.
  void append_response_text(std::string_view text);
  void append_response_image(std::shared_ptr<const Canvas> image);
};

std::string serialize_transcript(const Transcript& t);
Transcript parse_transcript(std::string_view text);

/// Strokes embedded in the response text, in order. Throws MalformedStroke.
std::vector<Stroke> response_strokes(const Transcript& t);

using TokenId = std::int32_t;

class Vocab {
 public:
  static constexpr TokenId kPadId = 0;
  static constexpr TokenId kPlaceholderId = 1;
  static constexpr TokenId kReserved = 2;

  Vocab();

  TokenId id(std::string_view word) const;  // throws UnknownWord
  std::optional<TokenId> find(std::string_view word) const;
  const std::string& word(TokenId id) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }
  int size() const { return static_cast<int>(words_.size()); }
  std::span<const std::string> words() const { return words_; }

  /// Adds `word` if absent and returns its id.
  TokenId add(std::string_view word);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Ids assigned by first occurrence over the corpus, after the reserved ids.
Vocab build_vocab(std::span<const std::string> corpus);
Vocab vocab_from_words(std::span<const std::string> words_in_id_order);

std::vector<TokenId> tokenize(std::string_view text, const Vocab& v);
std::string detokenize(std::span<const TokenId> ids, const Vocab& v);

/// Incremental scanner over generated response tokens.
struct ScanState {
  enum class Phase {
    kIdle,
    kColor,
    kWidthWord,
    kWidth,
    kPointsWord,
    kX,
    kY,
    kAfterPoint,
    kEnded,
  };
  Phase phase = Phase::kIdle;
  int channel = 0;
  Stroke partial;
  int pending_x = 0;
  std::size_t consumed = 0;
};

struct ScanEvent {
  enum class Kind { kNone, kStrokeComplete, kResponseEnd };
  Kind kind = Kind::kNone;
  std::optional<Stroke> stroke;
};

struct ScanStep {
  ScanState state;
  ScanEvent event;
};

/// Pure transition; throws MalformedStream on grammar violations.
ScanStep stream_scan(const ScanState& state, std::string_view token);
ScanStep stream_scan(const ScanState& state, TokenId id, const Vocab& v);

}  // namespace painter
