#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "painter/codec.hpp"
#include "painter/dataset.hpp"
#include "painter/error.hpp"

namespace painter {

Canvas Sample::prompt_canvas() const { return apply_strokes(blank_canvas(), prompt_strokes); }

Canvas Sample::start_canvas() const {
  return task == TaskKind::kReproduce ? blank_canvas() : prompt_canvas();
}

Canvas Sample::gt_canvas() const { return apply_strokes(start_canvas(), response_strokes); }

std::vector<Canvas> Sample::feedback_canvases() const {
  std::vector<Canvas> out;
  out.reserve(response_strokes.size());
  Canvas c = start_canvas();
  for (const auto& s : response_strokes) {
    draw_stroke_into(c, s);
    out.push_back(c);
  }
  return out;
}

namespace {

std::vector<Stroke> strokes_of(const Scene& scene, const std::vector<int>& order) {
  std::vector<Stroke> out;
  for (int i : order) {
    const auto& o = scene.objects[static_cast<std::size_t>(i)];
    out.insert(out.end(), o.strokes.begin(), o.strokes.end());
  }
  return out;
}

std::vector<int> scene_order(const Scene& scene) {
  std::vector<int> order(scene.objects.size());
  std::iota(order.begin(), order.end(), 0);
  return order;
}

std::vector<Stroke> erased(std::vector<Stroke> strokes) {
  for (auto& s : strokes) s = erase_stroke(s);
  return strokes;
}

}  // namespace

Sample derive_sample(const TaskPlan& plan, const Scene& scene, std::string command_text, Rng& rng) {
  Sample s;
  s.task = plan.task;
  s.command_text = std::move(command_text);
  for (const auto& o : scene.objects) s.objects.push_back({o.class_name, o.bbox});
  const auto all = scene_order(scene);
  auto shuffled = all;
  rng.shuffle(shuffled);
  switch (plan.task) {
    case TaskKind::kGenerateAll:
      s.response_strokes = strokes_of(scene, shuffled);
      break;
    case TaskKind::kGeneratePartial:
      if (scene.objects.size() == 1) {
        const auto& strokes = scene.objects[0].strokes;
        if (strokes.size() < 2) throw IncompatibleScene("completing a single object needs two strokes");
        const auto shown = (strokes.size() + 1) / 2;
        s.prompt_strokes.assign(strokes.begin(), strokes.begin() + static_cast<std::ptrdiff_t>(shown));
        s.response_strokes.assign(strokes.begin() + static_cast<std::ptrdiff_t>(shown), strokes.end());
      } else {
        std::vector<int> rest;
        for (int i : all)
          if (i != plan.target) rest.push_back(i);
        s.prompt_strokes = strokes_of(scene, rest);
        s.response_strokes = strokes_of(scene, {plan.target});
      }
      break;
    case TaskKind::kRemoveAll:
      s.prompt_strokes = strokes_of(scene, all);
      s.response_strokes = erased(strokes_of(scene, shuffled));
      break;
    case TaskKind::kRemovePartial:
      if (scene.objects.size() < 2 || plan.target < 0)
        throw IncompatibleScene("remove-partial needs a target in a multi-object scene");
      s.prompt_strokes = strokes_of(scene, all);
      s.response_strokes = erased(strokes_of(scene, {plan.target}));
      break;
    case TaskKind::kReproduce:
      s.prompt_strokes = strokes_of(scene, all);
      s.response_strokes = strokes_of(scene, shuffled);
      break;
    case TaskKind::kClassification:
      s.prompt_strokes = strokes_of(scene, all);
      s.response_text = plan.answer;
      break;
  }
  return s;
}

Sample derive_sample(TaskKind task, const Scene& scene, Rng& rng) {
  const auto plan = plan_task(task, scene, rng);
  return derive_sample(plan, scene, render_prompt(plan, 0), rng);
}

std::size_t sample_token_count(const Sample& s) {
  // <command> ... <image-placeholder> </command> <response> ... </response>
  std::size_t n = lex_words(s.command_text).size() + 5;
  for (const auto& st : s.response_strokes) n += lex_words(serialize_stroke(st)).size() + 1;
  n += lex_words(s.response_text).size();
  return n;
}

namespace {

nlohmann::json strokes_json(const std::vector<Stroke>& strokes) {
  auto arr = nlohmann::json::array();
  for (const auto& s : strokes) arr.push_back(serialize_stroke(s));
  return arr;
}

std::vector<Stroke> strokes_from(const nlohmann::json& arr) {
  std::vector<Stroke> out;
  for (const auto& s : arr) out.push_back(parse_stroke(s.get<std::string>()));
  return out;
}

}  // namespace

std::string sample_to_json_line(const Sample& s) {
  nlohmann::json j;
  j["task"] = std::string(task_name(s.task));
  j["command"] = s.command_text;
  j["response_text"] = s.response_text;
  j["prompt_strokes"] = strokes_json(s.prompt_strokes);
  j["response_strokes"] = strokes_json(s.response_strokes);
  auto objects = nlohmann::json::array();
  for (const auto& o : s.objects)
    objects.push_back({{"class", o.class_name}, {"bbox", {o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h}}});
  j["objects"] = objects;
  j["seed"] = s.seed;
  return j.dump();
}

Sample sample_from_json_line(std::string_view line, std::size_t line_no) {
  try {
    const auto j = nlohmann::json::parse(line);
    Sample s;
    s.task = parse_task(j.at("task").get<std::string>());
    s.command_text = j.at("command").get<std::string>();
    s.response_text = j.value("response_text", std::string{});
    s.prompt_strokes = strokes_from(j.at("prompt_strokes"));
    s.response_strokes = strokes_from(j.at("response_strokes"));
    for (const auto& o : j.value("objects", nlohmann::json::array())) {
      const auto& b = o.at("bbox");
      s.objects.push_back({o.at("class").get<std::string>(),
                           {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()}});
    }
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
  } catch (const std::exception& e) {
    throw ParseError("shard line " + std::to_string(line_no) + ": " + e.what());
  }
}

void write_shard(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : samples) out << sample_to_json_line(s) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Sample> read_shard(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(sample_from_json_line(line, line_no));
  }
  return out;
}

Dataset build_dataset(const DatasetConfig& cfg) {
  if (cfg.classes.empty()) throw Error("dataset: no classes configured");
  if (cfg.tasks.empty()) throw Error("dataset: no tasks configured");
  std::vector<ObjectSource> loaded;
  for (const auto& f : cfg.quickdraw_files) {
    auto objs = ingest_quickdraw(f);
    loaded.insert(loaded.end(), std::make_move_iterator(objs.begin()), std::make_move_iterator(objs.end()));
  }
  const ObjectPool pool(cfg.classes, std::move(loaded));
  for (const auto& c : cfg.classes)
    if (!pool.has(c)) throw MissingClass("no Quick-Draw or procedural source for class '" + c + "'");

  std::vector<RelationshipRecord> records;
  {
    std::vector<RelationshipRecord> all;
    if (cfg.relationships_csv) {
      std::ifstream in(*cfg.relationships_csv, std::ios::binary);
      if (!in) throw IoError("cannot open " + cfg.relationships_csv->string());
      std::stringstream ss;
      ss << in.rdbuf();
      all = parse_relationships_csv(ss.str());
    } else {
      all = bundled_relationships();
    }
    for (auto& r : all)
      if (pool.has(r.subject_class) && pool.has(r.object_class)) records.push_back(std::move(r));
  }

  Dataset ds;
  const std::size_t total = cfg.samples + cfg.eval_samples;
  for (std::size_t i = 0; i < total; ++i) {
    const auto seed = mix_seed(cfg.seed, i);
    Rng rng(seed);
    bool done = false;
    for (int attempt = 0; attempt < 200 && !done; ++attempt) {
      Scene scene;
      if (!records.empty() && cfg.relationship_fraction > 0 && rng.coin(cfg.relationship_fraction)) {
        scene = compose_relationship_scene(rng.pick(records), pool, rng, cfg.scene);
      } else {
        scene = compose_location_scene(pool, rng.uniform_int(1, std::clamp(cfg.max_objects, 1, 4)), rng,
                                       cfg.scene);
      }
      const auto task = rng.pick(cfg.tasks);
      try {
        const auto plan = plan_task(task, scene, rng, cfg.location_prompt_probability);
        auto command = paraphrase(plan, rng);
        Sample s = derive_sample(plan, scene, std::move(command), rng);
        if (sample_token_count(s) > cfg.max_tokens) continue;
        s.seed = seed;
        (i < cfg.samples ? ds.train : ds.eval).push_back(std::move(s));
        done = true;
      } catch (const IncompatibleScene&) {
      }
    }
    if (!done) throw Error("dataset: could not derive sample " + std::to_string(i) + " within budget");
  }
  return ds;
}

void write_dataset(const Dataset& ds, const DatasetConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["classes"] = cfg.classes;
  manifest["master_seed"] = cfg.seed;
  std::vector<std::string> tasks;
  for (auto t : cfg.tasks) tasks.emplace_back(task_name(t));
  manifest["tasks"] = tasks;
  auto shards = nlohmann::json::array();
  const std::size_t per = std::max<std::size_t>(1, cfg.shard_size);
  for (std::size_t start = 0, k = 0; start < ds.train.size() || k == 0; start += per, ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "shard-%05zu.jsonl", k);
    const auto end = std::min(ds.train.size(), start + per);
    write_shard({ds.train.begin() + static_cast<std::ptrdiff_t>(start),
                 ds.train.begin() + static_cast<std::ptrdiff_t>(end)},
                dir / name);
    shards.push_back(name);
    if (end >= ds.train.size()) break;
  }
  manifest["shards"] = shards;
  write_shard(ds.eval, dir / "eval.jsonl");
  manifest["eval_shard"] = "eval.jsonl";
  auto count_tasks = [](const std::vector<Sample>& v) {
    std::map<std::string, std::size_t> counts;
    for (auto t : all_tasks()) counts[std::string(task_name(t))] = 0;
    for (const auto& s : v) ++counts[std::string(task_name(s.task))];
    return counts;
  };
  manifest["counts"] = {{"train", ds.train.size()},
                        {"eval", ds.eval.size()},
                        {"train_by_task", count_tasks(ds.train)},
                        {"eval_by_task", count_tasks(ds.eval)}};
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

std::vector<Sample> load_samples(const std::filesystem::path& path_or_dir, bool eval_split) {
  if (!std::filesystem::is_directory(path_or_dir)) return read_shard(path_or_dir);
  std::ifstream in(path_or_dir / "manifest.json", std::ios::binary);
  if (!in) throw IoError("no manifest.json in " + path_or_dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (eval_split) return read_shard(path_or_dir / manifest.value("eval_shard", std::string("eval.jsonl")));
  std::vector<Sample> out;
  for (const auto& name : manifest.at("shards")) {
    auto part = read_shard(path_or_dir / name.get<std::string>());
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace painter
