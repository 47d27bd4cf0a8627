#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "painter/inference.hpp"

namespace painter {

struct EvalReport {
  std::string task;
  std::string metric;  // "psnr-dB" or "accuracy-%"
  double mean = 0;
  std::vector<double> per_sample;
  std::size_t sample_count = 0;
  std::string model_id;
  std::uint64_t seed = 0;
};

nlohmann::json report_to_json(const EvalReport& r);

struct EvalOptions {
  SamplingPolicy policy = SamplingPolicy::greedy();
  Budgets budgets;
  std::uint64_t seed = 0;
};

/// Runs each sample of `task` from its start canvas (blank for Reproduce,
/// with the reference bound to the prompt placeholder) and scores PSNR
/// against the ground truth. Samples of other tasks are ignored.
EvalReport eval_psnr_task(std::shared_ptr<const LanguageModel> model, std::span<const Sample> samples, TaskKind task,
                          const EvalOptions& opt = {});

/// Case-insensitive exact match after trimming.
bool answers_match(std::string_view predicted, std::string_view truth);

/// Greedy classification accuracy over the Classification samples.
EvalReport eval_classification(std::shared_ptr<const LanguageModel> model, std::span<const Sample> samples,
                               const EvalOptions& opt = {});

/// Cross-attention weights at the sample's prompt placeholder, one G x G
/// grid per cross-attention layer, before normalization.
std::vector<nn::Mat<float>> attention_maps(const TransformerModel& model, const Sample& sample);

/// Min-max normalized and nearest-neighbor upscaled to a gray canvas;
/// a constant map becomes mid gray.
Canvas attention_canvas(const nn::Mat<float>& map);

/// Writes attn-layer<k>.ppm per cross-attention layer; returns the paths.
std::vector<std::filesystem::path> export_attention_maps(const TransformerModel& model, const Sample& sample,
                                                         const std::filesystem::path& out_dir);

}  // namespace painter
