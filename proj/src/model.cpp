#include "painter/model.hpp"

#include "painter/trainer.hpp"

namespace painter {

namespace {

class TransformerDecoder : public TokenDecoder {
 public:
  TransformerDecoder(const nn::Weights<float>& w, const nn::ModelConfig& cfg) : dec_(w, cfg) {}

  std::vector<float> feed(TokenId token, const Canvas* image) override {
    const auto logits = dec_.step(token, image);
    return {logits.data(), logits.data() + logits.size()};
  }

 private:
  nn::IncrementalDecoder<float> dec_;
};

std::string oracle_key(std::span<const TokenId> command, std::uint64_t hash) {
  std::string key = hash_hex(hash);
  for (auto t : command) key += ":" + std::to_string(t);
  return key;
}

class OracleDecoder : public TokenDecoder {
 public:
  explicit OracleDecoder(const ReplayOracle& m)
      : m_(m),
        open_(m.vocab().id(tags::kResponseOpen)),
        close_(m.vocab().id(tags::kResponseClose)),
        cmd_open_(m.vocab().id(tags::kCommandOpen)) {}

  std::vector<float> feed(TokenId token, const Canvas* image) override {
    if (!in_response_) {
      if (token == open_) {
        in_response_ = true;
        entry_ = m_.lookup(command_, prompt_hash_);
      } else if (token == Vocab::kPlaceholderId) {
        if (!have_prompt_ && image) prompt_hash_ = canvas_hash(*image);
        have_prompt_ = true;
      } else if (token != cmd_open_ && !have_prompt_) {
        command_.push_back(token);
      }
    } else if (token != Vocab::kPlaceholderId) {
      ++next_;
    }
    std::vector<float> logits(static_cast<std::size_t>(m_.vocab().size()), -30.0f);
    TokenId want = close_;
    if (in_response_ && entry_ && next_ < entry_->response.size()) want = entry_->response[next_];
    logits[static_cast<std::size_t>(want)] = 30.0f;
    return logits;
  }

 private:
  const ReplayOracle& m_;
  TokenId open_, close_, cmd_open_;
  std::vector<TokenId> command_;
  std::uint64_t prompt_hash_ = 0;
  bool have_prompt_ = false;
  bool in_response_ = false;
  const ReplayOracle::Entry* entry_ = nullptr;
  std::size_t next_ = 0;
};

}  // namespace

TransformerModel::TransformerModel(Checkpoint ck, std::string id) : ck_(std::move(ck)), id_(std::move(id)) {
  ck_.config.validate();
}

std::unique_ptr<TokenDecoder> TransformerModel::start() const {
  return std::make_unique<TransformerDecoder>(ck_.weights, ck_.config);
}

ReplayOracle::ReplayOracle(Vocab v, std::span<const Sample> samples) : vocab_(std::move(v)) {
  for (const auto& s : samples) {
    std::vector<TokenId> command;
    for (const auto& w : lex_words(s.command_text)) command.push_back(vocab_.id(w));
    Entry e;
    for (const auto& st : s.response_strokes)
      for (const auto& w : lex_words(serialize_stroke(st))) e.response.push_back(vocab_.id(w));
    for (const auto& w : lex_words(s.response_text)) e.response.push_back(vocab_.id(w));
    e.response.push_back(vocab_.id(tags::kResponseClose));
    entries_.emplace(oracle_key(command, canvas_hash(s.prompt_canvas())), std::move(e));
  }
}

const ReplayOracle::Entry* ReplayOracle::lookup(std::span<const TokenId> command, std::uint64_t prompt_hash) const {
  auto it = entries_.find(oracle_key(command, prompt_hash));
  return it == entries_.end() ? nullptr : &it->second;
}

std::unique_ptr<TokenDecoder> ReplayOracle::start() const { return std::make_unique<OracleDecoder>(*this); }

Vocab oracle_vocab(std::span<const Sample> samples) {
  std::vector<std::string> classes;
  for (const auto& s : samples)
    for (const auto& o : s.objects)
      if (std::find(classes.begin(), classes.end(), o.class_name) == classes.end()) classes.push_back(o.class_name);
  std::sort(classes.begin(), classes.end());
  return training_vocab(samples, classes, {});
}

}  // namespace painter
