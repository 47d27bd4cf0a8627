#include "painter/cli.hpp"

#include <csignal>
#include <fstream>

#include <CLI11.hpp>

#include "painter/eval.hpp"
#include "painter/service.hpp"
#include "painter/trainer.hpp"

namespace painter {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct PolicyFlags {
  bool greedy = false;
  double top_p = 0.9;

  void add(CLI::App* app) {
    app->add_flag("--greedy", greedy, "Greedy decoding instead of top-p");
    app->add_option("--top-p", top_p, "Nucleus mass")->check(CLI::Range(1e-9, 1.0));
  }
  SamplingPolicy policy(std::uint64_t seed) const {
    return greedy ? SamplingPolicy::greedy() : SamplingPolicy::top_p(top_p, seed);
  }
};

std::vector<Sample> load_split(const fs::path& data, const std::string& split) {
  if (split == "train") return load_samples(data, false);
  if (split == "eval") return load_samples(data, true);
  if (split == "all") {
    auto a = load_samples(data, false);
    if (fs::is_directory(data) && fs::exists(data / "eval.jsonl")) {
      auto b = load_samples(data, true);
      a.insert(a.end(), b.begin(), b.end());
    }
    return a;
  }
  throw Error("unknown split '" + split + "' (train, eval, all)");
}

json read_manifest(const fs::path& data) {
  const auto path = data / "manifest.json";
  if (!fs::is_directory(data) || !fs::exists(path)) return json::object();
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::shared_ptr<const LanguageModel> open_model(const std::string& ckpt, const std::string& oracle_data) {
  if (!oracle_data.empty()) {
    const auto samples = load_split(oracle_data, "all");
    return std::make_shared<ReplayOracle>(oracle_vocab(samples), samples);
  }
  if (ckpt.empty()) throw Error("either --ckpt or --oracle-data is required");
  return std::make_shared<TransformerModel>(load_checkpoint(ckpt), fs::path(ckpt).stem().string());
}

Canvas read_canvas(const std::string& path) { return path.empty() ? blank_canvas() : decode_ppm(read_file(path)); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::atomic<StudioService*> g_service{nullptr};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stroke-language sketch model: data, training, evaluation and the studio server", "painter"};
  app.require_subcommand(1);
  std::function<void()> action;

  // dataset build
  auto* dataset = app.add_subcommand("dataset", "Dataset tools");
  dataset->require_subcommand(1);
  auto* build = dataset->add_subcommand("build", "Synthesize a dataset into shards");
  DatasetConfig dc;
  std::string out_dir, classes = "circle,square,triangle", tasks;
  std::vector<std::string> quickdraw;
  std::string relationships;
  build->add_option("--out", out_dir, "Output directory")->required();
  build->add_option("--samples", dc.samples, "Training samples");
  build->add_option("--eval-samples", dc.eval_samples, "Held-out samples");
  build->add_option("--classes", classes, "Comma-separated classes");
  build->add_option("--tasks", tasks, "Comma-separated tasks (default: all)");
  build->add_option("--max-objects", dc.max_objects, "Objects per location scene (1-4)")->check(CLI::Range(1, 4));
  build->add_option("--relationship-fraction", dc.relationship_fraction)->check(CLI::Range(0.0, 1.0));
  build->add_option("--location-probability", dc.location_prompt_probability)->check(CLI::Range(0.0, 1.0));
  build->add_option("--perturbation", dc.scene.perturbation)->check(CLI::Range(0.0, 1.0));
  build->add_option("--rdp-epsilon", dc.scene.rdp_epsilon);
  build->add_option("--max-tokens", dc.max_tokens);
  build->add_option("--shard-size", dc.shard_size)->check(CLI::PositiveNumber);
  build->add_option("--quickdraw", quickdraw, "Quick-Draw ndjson files")->check(CLI::ExistingFile);
  build->add_option("--relationships", relationships, "Relationship CSV")->check(CLI::ExistingFile);
  build->add_option("--seed", dc.seed);
  build->callback([&] {
    action = [&] {
      dc.classes = split_list(classes);
      if (!tasks.empty()) {
        dc.tasks.clear();
        for (const auto& t : split_list(tasks)) dc.tasks.push_back(parse_task(t));
      }
      for (const auto& q : quickdraw) dc.quickdraw_files.emplace_back(q);
      if (!relationships.empty()) dc.relationships_csv = relationships;
      const auto ds = build_dataset(dc);
      write_dataset(ds, dc, out_dir);
      out << json{{"train", ds.train.size()}, {"eval", ds.eval.size()}, {"out", out_dir}}.dump() << "\n";
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  std::string train_config, resume, corpus;
  std::vector<std::string> data_dirs;
  int steps = -1;
  std::uint64_t seed = 0;
  train_cmd->add_option("--config", train_config, "Training configuration JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_dir, "Checkpoint directory")->required();
  train_cmd->add_option("--data", data_dirs, "Dataset directories (override the config)");
  train_cmd->add_option("--steps", steps, "Override the step count");
  train_cmd->add_option("--resume", resume, "Checkpoint to resume from")->check(CLI::ExistingFile);
  train_cmd->add_option("--corpus", corpus, "Text corpus file; 'none' disables, default bundled");
  auto* train_seed = train_cmd->add_option("--seed", seed);
  train_cmd->callback([&] {
    action = [&] {
      TrainConfig tc;
      if (!train_config.empty()) {
        try {
          tc = json::parse(read_file(train_config)).get<TrainConfig>();
        } catch (const json::exception& e) {
          throw ParseError(train_config + ": " + e.what());
        }
      } else {
        tc.model = default_model_config();
      }
      if (!data_dirs.empty()) tc.dataset_paths = data_dirs;
      if (steps >= 0) tc.steps = steps;
      if (train_seed->count()) tc.seed = seed;
      if (!corpus.empty()) tc.text_corpus_path = corpus;
      if (tc.dataset_paths.empty()) throw Error("no dataset: pass --data or set dataset_paths");
      std::vector<Sample> samples;
      for (const auto& d : tc.dataset_paths) {
        auto s = load_samples(d);
        samples.insert(samples.end(), s.begin(), s.end());
      }
      std::string text;
      if (tc.text_corpus_path.empty())
        text = bundled_corpus();
      else if (tc.text_corpus_path != "none")
        text = read_file(tc.text_corpus_path);
      TrainOptions opt;
      opt.out_dir = fs::path(out_dir);
      opt.dataset_manifest = read_manifest(tc.dataset_paths.front());
      if (!resume.empty()) opt.resume = load_checkpoint(resume);
      const auto res = train(tc, samples, text, opt);
      if (res.diverged) err << "warning: smoothed training loss increased between windows\n";
      out << json{{"steps", res.checkpoint.step},
                  {"finalLoss", res.curve.empty() ? 0.0 : res.curve.back().loss},
                  {"diverged", res.diverged},
                  {"checkpoint", (fs::path(out_dir) / "model.ckpt").string()}}
                 .dump()
          << "\n";
    };
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset");
  std::string task_str, ckpt, data, split = "eval", oracle_data;
  std::size_t limit = 0;
  PolicyFlags pf;
  eval_cmd->add_option("--task", task_str, "remove-all, remove-partial, reproduce or classification")->required();
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint")->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data, "Dataset directory or .jsonl")->required();
  eval_cmd->add_option("--split", split, "train, eval or all");
  eval_cmd->add_option("--limit", limit, "Evaluate at most N samples of the task");
  eval_cmd->add_option("--oracle-data", oracle_data, "Use the replay oracle built from this dataset");
  eval_cmd->add_option("--seed", seed);
  pf.add(eval_cmd);
  eval_cmd->callback([&] {
    action = [&] {
      const auto task = parse_task(task_str);
      auto samples = load_split(data, split);
      std::vector<Sample> chosen;
      for (auto& s : samples)
        if (s.task == task && (limit == 0 || chosen.size() < limit)) chosen.push_back(std::move(s));
      const auto model = open_model(ckpt, oracle_data);
      EvalOptions opt;
      opt.seed = seed;
      opt.policy = pf.policy(seed);
      const auto report = task == TaskKind::kClassification ? eval_classification(model, chosen, opt)
                                                            : eval_psnr_task(model, chosen, task, opt);
      out << report_to_json(report).dump() << "\n";
    };
  });

  // generate
  auto* gen = app.add_subcommand("generate", "Run one command and save the canvas");
  std::string prompt, canvas_in, reference, out_file, events_file;
  Budgets budgets;
  gen->add_option("--prompt", prompt, "Command text")->required();
  gen->add_option("--canvas", canvas_in, "Start canvas (PPM); blank by default")->check(CLI::ExistingFile);
  gen->add_option("--reference", reference, "Image bound to the prompt placeholder instead of the start canvas")
      ->check(CLI::ExistingFile);
  gen->add_option("--out", out_file, "Output PPM")->required();
  gen->add_option("--events", events_file, "Event log (JSONL)");
  gen->add_option("--ckpt", ckpt, "Checkpoint")->check(CLI::ExistingFile);
  gen->add_option("--oracle-data", oracle_data, "Use the replay oracle built from this dataset");
  gen->add_option("--max-tokens", budgets.max_tokens)->check(CLI::PositiveNumber);
  gen->add_option("--max-strokes", budgets.max_strokes)->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed);
  pf.add(gen);
  gen->callback([&] {
    action = [&] {
      Session session(open_model(ckpt, oracle_data), pf.policy(seed), budgets);
      session.canvas = read_canvas(canvas_in);
      std::optional<Canvas> ref;
      if (!reference.empty()) ref = read_canvas(reference);
      std::string log;
      const auto reason =
          run_command(session, prompt, [&](const Event& e) { log += event_to_json(e) + "\n"; }, ref ? &*ref : nullptr);
      write_file(out_file, encode_ppm(session.canvas));
      if (!events_file.empty()) write_file(events_file, log);
      out << json{{"reason", reason}, {"strokes", session.strokes.size()},
                  {"canvasHash", hash_hex(canvas_hash(session.canvas))}}
                 .dump()
          << "\n";
    };
  });

  // classify
  auto* cls = app.add_subcommand("classify", "Answer a classification command about a canvas");
  cls->add_option("--prompt", prompt, "Command text")->required();
  cls->add_option("--canvas", canvas_in, "Canvas (PPM)")->check(CLI::ExistingFile);
  cls->add_option("--ckpt", ckpt, "Checkpoint")->check(CLI::ExistingFile);
  cls->add_option("--oracle-data", oracle_data, "Use the replay oracle built from this dataset");
  cls->add_option("--seed", seed);
  cls->callback([&] {
    action = [&] {
      Session session(open_model(ckpt, oracle_data));
      session.canvas = read_canvas(canvas_in);
      out << classify(session, prompt) << "\n";
    };
  });

  // attn-dump
  auto* attn = app.add_subcommand("attn-dump", "Export cross-attention maps for one sample");
  std::size_t index = 0;
  attn->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  attn->add_option("--data", data, "Dataset directory or .jsonl")->required();
  attn->add_option("--split", split, "train, eval or all");
  attn->add_option("--index", index, "Sample index within the split");
  attn->add_option("--out", out_dir, "Output directory")->required();
  attn->add_option("--seed", seed);
  attn->callback([&] {
    action = [&] {
      const auto samples = load_split(data, split);
      if (index >= samples.size()) throw Error("sample index out of range");
      const TransformerModel model(load_checkpoint(ckpt));
      for (const auto& p : export_attention_maps(model, samples[index], out_dir)) out << p.string() << "\n";
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the studio HTTP service");
  std::string host = "127.0.0.1", static_dir;
  int port = 8787;
  ServiceOptions sopt;
  serve->add_option("--ckpt", ckpt, "Checkpoint")->check(CLI::ExistingFile);
  serve->add_option("--oracle-data", oracle_data, "Serve the replay oracle built from this dataset");
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--static", static_dir, "Directory of UI assets")->check(CLI::ExistingDirectory);
  serve->add_option("--max-sessions", sopt.max_sessions)->check(CLI::PositiveNumber);
  serve->add_option("--seed", seed);
  serve->callback([&] {
    action = [&] {
      const auto model = open_model(ckpt, oracle_data);
      std::vector<std::string> class_list;
      if (auto tm = std::dynamic_pointer_cast<const TransformerModel>(model);
          tm && tm->checkpoint().dataset.contains("classes"))
        class_list = tm->checkpoint().dataset.at("classes").get<std::vector<std::string>>();
      else if (!oracle_data.empty())
        class_list = read_manifest(oracle_data).value("classes", std::vector<std::string>{});
      sopt.static_dir = static_dir;
      StudioService service(model, studio_meta(class_list), sopt);
      const int bound = service.bind(host, port);
      if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
      g_service = &service;
      std::signal(SIGINT, [](int) {
        if (auto* s = g_service.load()) s->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (auto* s = g_service.load()) s->stop();
      });
      out << "listening on http://" << host << ":" << bound << "\n" << std::flush;
      service.listen();
      g_service = nullptr;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace painter
