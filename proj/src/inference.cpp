#include "painter/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace painter {

std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> p(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(static_cast<double>(logits[i]) - m);
  for (auto& v : p) v /= z;
  return p;
}

std::vector<TokenId> nucleus(std::span<const double> probs, double p) {
  std::vector<TokenId> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });
  double mass = 0;
  std::size_t n = 0;
  while (n < order.size()) {
    mass += probs[static_cast<std::size_t>(order[n++])];
    if (mass >= p) break;
  }
  order.resize(n);
  return order;
}

TokenId sample_token(std::span<const float> logits, const SamplingPolicy& policy, Rng& rng) {
  if (policy.kind == SamplingPolicy::Kind::kGreedy)
    return static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  const auto probs = softmax(logits);
  const auto keep = nucleus(probs, policy.p);
  double mass = 0;
  for (auto id : keep) mass += probs[static_cast<std::size_t>(id)];
  double u = rng.uniform() * mass;
  for (auto id : keep) {
    u -= probs[static_cast<std::size_t>(id)];
    if (u < 0) return id;
  }
  return keep.back();
}

Session::Session(std::shared_ptr<const LanguageModel> m, SamplingPolicy p, Budgets b)
    : policy(p), budgets(b), rng(p.seed), model_(std::move(m)) {}

namespace {

bool is_tag(std::string_view w) {
  return w == tags::kCommandOpen || w == tags::kCommandClose || w == tags::kResponseOpen ||
         w == tags::kResponseClose || w == tags::kPlaceholder || w == tags::kPad || w == tags::kStrokeOpen ||
         w == tags::kStrokeClose;
}

}  // namespace

std::vector<TokenId> check_command(const Vocab& v, std::string_view text) {
  std::vector<TokenId> ids;
  for (const auto& w : lex_words(text)) {
    if (is_tag(w)) throw UnknownWord("command text may not contain the tag '" + w + "'");
    ids.push_back(v.id(w));
  }
  return ids;
}

std::string run_command(Session& session, std::string_view text, const EventSink& sink, const Canvas* prompt_image,
                        const std::atomic<bool>* cancel) {
  const auto& model = session.model();
  const auto& v = model.vocab();
  const auto command = check_command(v, text);
  const auto words = lex_words(text);

  Transcript& t = session.transcript;
  t = Transcript{};
  t.response_closed = false;
  if (!words.empty()) t.command.push_back(TextSegment{join_words(words)});
  t.command.push_back(ImagePlaceholder{0});
  t.images.push_back(std::make_shared<const Canvas>(prompt_image ? *prompt_image : session.canvas));

  auto finish = [&](std::string_view reason) {
    if (reason == done_reason::kResponseEnd) t.response_closed = true;
    Event e;
    e.kind = Event::Kind::kDone;
    e.reason = std::string(reason);
    e.canvas_hash = canvas_hash(session.canvas);
    if (sink) sink(e);
    return std::string(reason);
  };

  auto decoder = model.start();
  std::vector<float> logits;
  try {
    logits = decoder->feed(v.id(tags::kCommandOpen), nullptr);
    for (auto id : command) logits = decoder->feed(id, nullptr);
    logits = decoder->feed(Vocab::kPlaceholderId, t.images[0].get());
    logits = decoder->feed(v.id(tags::kCommandClose), nullptr);
    logits = decoder->feed(v.id(tags::kResponseOpen), nullptr);
  } catch (const ContextOverflow&) {
    return finish(done_reason::kContextFull);
  }

  ScanState scan;
  int generated = 0;
  int strokes = 0;
  while (true) {
    if (cancel && cancel->load()) return finish(done_reason::kCancelled);
    if (generated >= session.budgets.max_tokens) return finish(done_reason::kMaxTokens);
    logits[Vocab::kPadId] = -std::numeric_limits<float>::infinity();
    logits[Vocab::kPlaceholderId] = -std::numeric_limits<float>::infinity();
    const TokenId tok = sample_token(logits, session.policy, session.rng);
    ++generated;
    const std::string& word = v.word(tok);

    ScanStep st;
    try {
      st = stream_scan(scan, word);
    } catch (const MalformedStream&) {
      ++session.dropped_strokes;
      st = stream_scan(ScanState{}, word);
    }
    if (st.event.kind == ScanEvent::Kind::kResponseEnd) return finish(done_reason::kResponseEnd);

    try {
      logits = decoder->feed(tok, nullptr);
    } catch (const ContextOverflow&) {
      return finish(done_reason::kContextFull);
    }
    t.append_response_text(word);

    if (st.event.kind == ScanEvent::Kind::kStrokeComplete) {
      const Stroke& s = *st.event.stroke;
      draw_stroke_into(session.canvas, s);
      session.strokes.push_back(s);
      ++strokes;
      auto snapshot = std::make_shared<const Canvas>(session.canvas);
      t.append_response_image(snapshot);
      Event e;
      e.kind = Event::Kind::kStroke;
      e.stroke = s;
      e.canvas_hash = canvas_hash(session.canvas);
      if (sink) sink(e);
      try {
        logits = decoder->feed(Vocab::kPlaceholderId, snapshot.get());
      } catch (const ContextOverflow&) {
        return finish(done_reason::kContextFull);
      }
      if (strokes >= session.budgets.max_strokes) return finish(done_reason::kMaxStrokes);
      st.state = ScanState{};
    } else if (st.state.phase == ScanState::Phase::kIdle && word != tags::kResponseClose) {
      Event e;
      e.kind = Event::Kind::kText;
      e.token = word;
      if (sink) sink(e);
    }
    scan = st.state;
  }
}

std::string classify(Session& session, std::string_view text) {
  const auto saved = session.policy;
  session.policy = SamplingPolicy::greedy();
  std::vector<std::string> words;
  run_command(session, text, [&](const Event& e) {
    if (e.kind == Event::Kind::kText) words.push_back(e.token);
  });
  session.policy = saved;
  return join_words(words);
}

std::string event_to_json(const Event& e) {
  nlohmann::json j;
  switch (e.kind) {
    case Event::Kind::kText:
      j = {{"type", "text"}, {"token", e.token}};
      break;
    case Event::Kind::kStroke: {
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& p : e.stroke.points) pts.push_back({p.x, p.y});
      j = {{"type", "stroke"},
           {"stroke",
            {{"color", {e.stroke.color.r, e.stroke.color.g, e.stroke.color.b}},
             {"width", e.stroke.width},
             {"points", pts},
             {"text", serialize_stroke(e.stroke)}}},
           {"canvasHash", hash_hex(e.canvas_hash)}};
      break;
    }
    case Event::Kind::kDone:
      j = {{"type", "done"}, {"reason", e.reason}, {"canvasHash", hash_hex(e.canvas_hash)}};
      break;
  }
  return j.dump();
}

}  // namespace painter
