#include "painter/codec.hpp"

#include <cctype>
#include <charconv>

#include "painter/error.hpp"

namespace painter {

namespace {

std::optional<int> parse_byte(std::string_view s) {
  if (s.empty() || s.size() > 3) return std::nullopt;
  if (s.size() > 1 && s[0] == '0') return std::nullopt;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  if (v < 0 || v > 255) return std::nullopt;
  return v;
}

[[noreturn]] void stream_error(const ScanState& st, std::string_view token, std::string_view what) {
  throw MalformedStream("token " + std::to_string(st.consumed) + " ('" + std::string(token) +
                        "'): " + std::string(what));
}

std::string append_int(std::string out, int v) { return out + std::to_string(v); }

void append_segments(std::string& out, const std::vector<PromptSegment>& segs) {
  for (const auto& seg : segs) {
    if (const auto* t = std::get_if<TextSegment>(&seg)) {
      const auto words = lex_words(t->text);
      if (words.empty()) continue;
      out += ' ';
      out += join_words(words);
    } else {
      out += ' ';
      out += tags::kPlaceholder;
    }
  }
}

}  // namespace

std::vector<std::string> lex_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      flush();
    } else if (ch == ',') {
      flush();
      words.emplace_back(tags::kComma);
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return words;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0 && words[i] != tags::kComma) out += ' ';
    out += words[i];
  }
  return out;
}

std::string serialize_stroke(const Stroke& s) {
  std::string out{tags::kStrokeOpen};
  out += " color ";
  out = append_int(std::move(out), s.color.r) + ' ';
  out = append_int(std::move(out), s.color.g) + ' ';
  out = append_int(std::move(out), s.color.b);
  out += " width ";
  out = append_int(std::move(out), s.width);
  out += " points";
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    out += i == 0 ? " " : ", ";
    out = append_int(std::move(out), s.points[i].x) + ' ';
    out = append_int(std::move(out), s.points[i].y);
  }
  out += ' ';
  out += tags::kStrokeClose;
  return out;
}

Stroke parse_stroke(std::string_view text) {
  const auto words = lex_words(text);
  if (words.empty() || words.front() != tags::kStrokeOpen)
    throw MalformedStroke("token 0: expected '<stroke>'");
  ScanState st;
  for (std::size_t i = 0; i < words.size(); ++i) {
    ScanStep step;
    try {
      step = stream_scan(st, words[i]);
    } catch (const MalformedStream& e) {
      throw MalformedStroke(e.what());
    }
    if (step.event.kind == ScanEvent::Kind::kStrokeComplete) {
      if (i + 1 != words.size())
        throw MalformedStroke("token " + std::to_string(i + 1) + ": trailing input after '</stroke>'");
      return std::move(*step.event.stroke);
    }
    if (step.event.kind == ScanEvent::Kind::kResponseEnd)
      throw MalformedStroke("token " + std::to_string(i) + ": unexpected '</response>'");
    st = std::move(step.state);
  }
  throw MalformedStroke("token " + std::to_string(words.size()) + ": missing '</stroke>'");
}

int Transcript::placeholder_count() const {
  int n = 0;
  for (const auto* segs : {&command, &response})
    for (const auto& s : *segs) n += std::holds_alternative<ImagePlaceholder>(s) ? 1 : 0;
  return n;
}

void Transcript::append_response_text(std::string_view text) {
  if (!response.empty()) {
    if (auto* t = std::get_if<TextSegment>(&response.back())) {
      t->text = join_words(lex_words(t->text + " " + std::string(text)));
      return;
    }
  }
  response.push_back(TextSegment{join_words(lex_words(text))});
}

void Transcript::append_response_image(std::shared_ptr<const Canvas> image) {
  response.push_back(ImagePlaceholder{placeholder_count()});
  images.push_back(std::move(image));
}

std::string serialize_transcript(const Transcript& t) {
  std::string out{tags::kCommandOpen};
  append_segments(out, t.command);
  out += ' ';
  out += tags::kCommandClose;
  out += ' ';
  out += tags::kResponseOpen;
  append_segments(out, t.response);
  if (t.response_closed) {
    out += ' ';
    out += tags::kResponseClose;
  }
  return out;
}

Transcript parse_transcript(std::string_view text) {
  const auto words = lex_words(text);
  Transcript t;
  t.response_closed = false;
  std::size_t i = 0;
  auto fail = [&](std::string_view what) -> void {
    throw MalformedTranscript("token " + std::to_string(i) + ": " + std::string(what));
  };
  auto expect = [&](std::string_view tag) {
    if (i >= words.size() || words[i] != tag) fail("expected '" + std::string(tag) + "'");
    ++i;
  };
  // Collects one section until `close`; returns true if the close tag was seen.
  auto section = [&](std::vector<PromptSegment>& segs, std::string_view close) {
    std::vector<std::string> pending;
    auto flush = [&] {
      if (!pending.empty()) segs.push_back(TextSegment{join_words(pending)});
      pending.clear();
    };
    for (; i < words.size(); ++i) {
      const auto& w = words[i];
      if (w == close) {
        flush();
        ++i;
        return true;
      }
      if (w == tags::kPlaceholder) {
        flush();
        segs.push_back(ImagePlaceholder{static_cast<int>(t.images.size())});
        t.images.push_back(nullptr);
      } else if (w == tags::kCommandOpen || w == tags::kCommandClose ||
                 w == tags::kResponseOpen || w == tags::kResponseClose) {
        fail("unexpected '" + w + "' (tag mismatch or nesting violation)");
      } else {
        pending.push_back(w);
      }
    }
    flush();
    return false;
  };
  expect(tags::kCommandOpen);
  if (!section(t.command, tags::kCommandClose)) fail("unterminated '<command>'");
  expect(tags::kResponseOpen);
  t.response_closed = section(t.response, tags::kResponseClose);
  if (i != words.size()) fail("trailing input after '</response>'");
  return t;
}

std::vector<Stroke> response_strokes(const Transcript& t) {
  std::vector<Stroke> out;
  for (const auto& seg : t.response) {
    const auto* text = std::get_if<TextSegment>(&seg);
    if (!text) continue;
    const auto words = lex_words(text->text);
    std::size_t start = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (words[i] == tags::kStrokeOpen) start = i;
      if (words[i] == tags::kStrokeClose) {
        std::span<const std::string> span(words.data() + start, i - start + 1);
        out.push_back(parse_stroke(join_words(span)));
      }
    }
  }
  return out;
}

Vocab::Vocab() {
  add(tags::kPad);
  add(tags::kPlaceholder);
}

TokenId Vocab::add(std::string_view word) {
  if (auto found = find(word)) return *found;
  const auto id = static_cast<TokenId>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(words_.back(), id);
  return id;
}

std::optional<TokenId> Vocab::find(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(std::string_view word) const {
  if (auto found = find(word)) return *found;
  throw UnknownWord("unknown word '" + std::string(word) + "'");
}

const std::string& Vocab::word(TokenId id) const {
  if (id < 0 || id >= size()) throw UnknownWord("token id " + std::to_string(id) + " out of range");
  return words_[static_cast<std::size_t>(id)];
}

Vocab build_vocab(std::span<const std::string> corpus) {
  Vocab v;
  for (const auto& line : corpus)
    for (const auto& w : lex_words(line)) v.add(w);
  return v;
}

Vocab vocab_from_words(std::span<const std::string> words_in_id_order) {
  if (words_in_id_order.size() < 2 || words_in_id_order[0] != tags::kPad ||
      words_in_id_order[1] != tags::kPlaceholder)
    throw ParseError("vocab: reserved words missing");
  Vocab v;
  for (std::size_t i = Vocab::kReserved; i < words_in_id_order.size(); ++i) {
    if (v.contains(words_in_id_order[i]))
      throw ParseError("vocab: duplicate word '" + words_in_id_order[i] + "'");
    v.add(words_in_id_order[i]);
  }
  return v;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocab& v) {
  std::vector<TokenId> ids;
  for (const auto& w : lex_words(text)) ids.push_back(v.id(w));
  return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocab& v) {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (auto id : ids) words.push_back(v.word(id));
  return join_words(words);
}

ScanStep stream_scan(const ScanState& state, std::string_view token) {
  using Phase = ScanState::Phase;
  ScanStep out{state, {}};
  auto& st = out.state;
  auto byte_or_fail = [&](std::string_view what) {
    const auto v = parse_byte(token);
    if (!v) stream_error(state, token, std::string("expected ") + std::string(what));
    return *v;
  };
  switch (state.phase) {
    case Phase::kIdle:
      if (token == tags::kStrokeOpen) {
        st.phase = Phase::kColor;
        st.channel = -1;
        st.partial = Stroke{};
      } else if (token == tags::kResponseClose) {
        st.phase = Phase::kEnded;
        out.event.kind = ScanEvent::Kind::kResponseEnd;
      }
      break;
    case Phase::kColor:
      if (st.channel < 0) {
        if (token != tags::kColor) stream_error(state, token, "expected 'color'");
        st.channel = 0;
        break;
      }
      {
        const int v = byte_or_fail("color channel");
        if (st.channel == 0) st.partial.color.r = v;
        if (st.channel == 1) st.partial.color.g = v;
        if (st.channel == 2) st.partial.color.b = v;
        if (++st.channel == 3) st.phase = Phase::kWidthWord;
      }
      break;
    case Phase::kWidthWord:
      if (token != tags::kWidth) stream_error(state, token, "expected 'width' (missing channel?)");
      st.phase = Phase::kWidth;
      break;
    case Phase::kWidth: {
      const int w = byte_or_fail("width");
      if (w != 1 && w != 2) stream_error(state, token, "width must be 1 or 2");
      st.partial.width = w;
      st.phase = Phase::kPointsWord;
      break;
    }
    case Phase::kPointsWord:
      if (token != tags::kPoints) stream_error(state, token, "expected 'points'");
      st.phase = Phase::kX;
      break;
    case Phase::kX:
      if (token == tags::kStrokeClose) {
        if (st.partial.points.empty()) stream_error(state, token, "empty point list");
        stream_error(state, token, "dangling ',' before '</stroke>'");
      }
      st.pending_x = byte_or_fail("x coordinate");
      st.phase = Phase::kY;
      break;
    case Phase::kY:
      if (token == tags::kStrokeClose || token == tags::kComma)
        stream_error(state, token, "odd coordinate count");
      st.partial.points.push_back({st.pending_x, byte_or_fail("y coordinate")});
      st.phase = Phase::kAfterPoint;
      break;
    case Phase::kAfterPoint:
      if (token == tags::kComma) {
        st.phase = Phase::kX;
      } else if (token == tags::kStrokeClose) {
        out.event.kind = ScanEvent::Kind::kStrokeComplete;
        out.event.stroke = std::move(st.partial);
        st.partial = Stroke{};
        st.phase = Phase::kIdle;
      } else if (parse_byte(token)) {
        stream_error(state, token, "odd coordinate count or missing ','");
      } else {
        stream_error(state, token, "expected ',' or '</stroke>'");
      }
      break;
    case Phase::kEnded:
      stream_error(state, token, "token after '</response>'");
  }
  ++st.consumed;
  return out;
}

ScanStep stream_scan(const ScanState& state, TokenId id, const Vocab& v) {
  if (id < 0 || id >= v.size()) stream_error(state, "?", "token id out of range");
  return stream_scan(state, v.word(id));
}

}  // namespace painter
