#include "painter/eval.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace painter {

nlohmann::json report_to_json(const EvalReport& r) {
  return {{"task", r.task},           {"metric", r.metric},      {"mean", r.mean},
          {"perSample", r.per_sample}, {"sampleCount", r.sample_count}, {"modelId", r.model_id},
          {"seed", r.seed}};
}

namespace {

EvalReport make_report(std::string task, std::string metric, std::vector<double> scores, const LanguageModel& m,
                       std::uint64_t seed) {
  EvalReport r{std::move(task), std::move(metric), 0, std::move(scores), 0, m.id(), seed};
  r.sample_count = r.per_sample.size();
  if (!r.per_sample.empty())
    r.mean = std::accumulate(r.per_sample.begin(), r.per_sample.end(), 0.0) / static_cast<double>(r.sample_count);
  return r;
}

std::string normalize_answer(std::string_view s) {
  std::string out;
  for (const auto& w : lex_words(s)) {
    if (!out.empty() && w != ",") out += ' ';
    for (char c : w) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

EvalReport eval_psnr_task(std::shared_ptr<const LanguageModel> model, std::span<const Sample> samples, TaskKind task,
                          const EvalOptions& opt) {
  if (task != TaskKind::kRemoveAll && task != TaskKind::kRemovePartial && task != TaskKind::kReproduce)
    throw Error("PSNR evaluation covers remove-all, remove-partial and reproduce only");
  std::vector<double> scores;
  std::size_t k = 0;
  for (const auto& s : samples) {
    if (s.task != task) continue;
    auto policy = opt.policy;
    policy.seed = mix_seed(opt.seed, k++);
    Session session(model, policy, opt.budgets);
    session.canvas = s.start_canvas();
    const Canvas prompt = s.prompt_canvas();
    run_command(session, s.command_text, {}, &prompt);
    scores.push_back(psnr(session.canvas, s.gt_canvas()));
  }
  return make_report(std::string(task_name(task)), "psnr-dB", std::move(scores), *model, opt.seed);
}

bool answers_match(std::string_view predicted, std::string_view truth) {
  return normalize_answer(predicted) == normalize_answer(truth);
}

EvalReport eval_classification(std::shared_ptr<const LanguageModel> model, std::span<const Sample> samples,
                               const EvalOptions& opt) {
  std::vector<double> scores;
  for (const auto& s : samples) {
    if (s.task != TaskKind::kClassification) continue;
    Session session(model, SamplingPolicy::greedy(), opt.budgets);
    session.canvas = s.prompt_canvas();
    const auto answer = classify(session, s.command_text);
    scores.push_back(answers_match(answer, s.response_text) ? 100.0 : 0.0);
  }
  return make_report(std::string(task_name(TaskKind::kClassification)), "accuracy-%", std::move(scores), *model,
                     opt.seed);
}

std::vector<nn::Mat<float>> attention_maps(const TransformerModel& model, const Sample& sample) {
  const auto& cfg = model.config();
  const auto& v = model.vocab();
  nn::IncrementalDecoder<float> dec(model.weights(), cfg);
  dec.step(v.id(tags::kCommandOpen));
  for (const auto& w : lex_words(sample.command_text)) dec.step(v.id(w));
  const Canvas prompt = sample.prompt_canvas();
  dec.step(Vocab::kPlaceholderId, &prompt);
  std::vector<nn::Mat<float>> maps;
  for (const auto& col : dec.last_cross_weights())
    maps.push_back(Eigen::Map<const nn::Mat<float>>(col.data(), cfg.grid, cfg.grid));
  return maps;
}

Canvas attention_canvas(const nn::Mat<float>& map) {
  const float lo = map.minCoeff(), hi = map.maxCoeff();
  const auto g = static_cast<int>(map.rows());
  Canvas c;
  for (int y = 0; y < Canvas::kSize; ++y)
    for (int x = 0; x < Canvas::kSize; ++x) {
      const float val = map(y * g / Canvas::kSize, x * g / Canvas::kSize);
      const double n = hi - lo > 1e-12f ? (val - lo) / (hi - lo) : 0.5;
      const int b = static_cast<int>(std::lround(n * 255.0));
      c.set(x, y, {b, b, b});
    }
  return c;
}

std::vector<std::filesystem::path> export_attention_maps(const TransformerModel& model, const Sample& sample,
                                                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> out;
  const auto maps = attention_maps(model, sample);
  for (std::size_t l = 0; l < maps.size(); ++l) {
    auto path = out_dir / ("attn-layer" + std::to_string(l) + ".ppm");
    write_file(path, encode_ppm(attention_canvas(maps[l])));
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace painter
