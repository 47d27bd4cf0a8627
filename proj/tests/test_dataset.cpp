#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "painter/codec.hpp"
#include "painter/dataset.hpp"
#include "painter/error.hpp"

namespace painter {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("painter_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SceneObject object_at(const std::string& cls, BBox box, int strokes = 1) {
  SceneObject o{cls, article_for(cls), box, {}};
  for (int i = 0; i < strokes; ++i)
    o.strokes.push_back(draw_stroke({{box.x, box.y + i}, {box.x + box.w - 1, box.y + i}}));
  return o;
}

TEST(QuickDraw, DirectFieldMapping) {
  const auto objs = parse_quickdraw(R"({"word":"apple","drawing":[[[0,10],[0,10]]]})");
  ASSERT_EQ(objs.size(), 1u);
  EXPECT_EQ(objs[0].class_name, "apple");
  EXPECT_EQ(objs[0].article, "an");
  ASSERT_EQ(objs[0].strokes.size(), 1u);
  EXPECT_EQ(objs[0].strokes[0].points, (std::vector<Point>{{0, 0}, {10, 10}}));
}

TEST(QuickDraw, EmptyAndMalformed) {
  EXPECT_TRUE(parse_quickdraw("").empty());
  try {
    parse_quickdraw("{\"word\":\"cat\",\"drawing\":[[[1],[2]]]}\n{not json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(QuickDraw, FileIngest) {
  const auto dir = temp_dir("qd");
  {
    std::ofstream out(dir / "cat.ndjson");
    out << R"({"word":"cat","drawing":[[[1,2,300],[3,4,5]]]})" << "\n";
  }
  const auto objs = ingest_quickdraw(dir / "cat.ndjson");
  ASSERT_EQ(objs.size(), 1u);
  EXPECT_EQ(objs[0].strokes[0].points.back(), (Point{255, 5}));
}

TEST(Procedural, SquareIsClosedAxisAligned) {
  const auto sq = procedural_object("square", std::uint64_t{0});
  ASSERT_EQ(sq.strokes.size(), 1u);
  const auto& p = sq.strokes[0].points;
  ASSERT_EQ(p.size(), 5u);
  EXPECT_EQ(p.front(), p.back());
  EXPECT_EQ(p[0].y, p[1].y);
  EXPECT_EQ(p[1].x, p[2].x);
  EXPECT_EQ(p[2].y, p[3].y);
  EXPECT_EQ(p[3].x, p[0].x);
  EXPECT_EQ(p[1].x - p[0].x, p[2].y - p[1].y);
}

TEST(Procedural, TriangleAndDeterminism) {
  const auto tri = procedural_object("triangle", std::uint64_t{0});
  ASSERT_EQ(tri.strokes.size(), 1u);
  ASSERT_EQ(tri.strokes[0].points.size(), 4u);
  EXPECT_EQ(tri.strokes[0].points.front(), tri.strokes[0].points.back());
  for (const auto& cls : procedural_classes()) {
    const auto a = procedural_object(cls, std::uint64_t{42});
    const auto b = procedural_object(cls, std::uint64_t{42});
    ASSERT_EQ(a.strokes, b.strokes) << cls;
    for (const auto& s : a.strokes) ASSERT_TRUE(is_valid(s)) << cls;
  }
  EXPECT_THROW(procedural_object("dragon", std::uint64_t{0}), UnknownClass);
}

TEST(Rdp, Collinear) {
  const auto s = draw_stroke({{0, 0}, {5, 5}, {10, 10}});
  EXPECT_EQ(rdp_simplify(s, 2.0).points, (std::vector<Point>{{0, 0}, {10, 10}}));
  EXPECT_EQ(rdp_simplify(s, 0.0), s);
}

TEST(Rdp, DeviationBoundAgainstBruteForce) {
  Rng rng(20);
  for (int trial = 0; trial < 300; ++trial) {
    Stroke s = draw_stroke({});
    Point p{rng.uniform_int(0, 255), rng.uniform_int(0, 255)};
    const int n = rng.uniform_int(2, 40);
    for (int i = 0; i < n; ++i) {
      s.points.push_back(p);
      p = {std::clamp(p.x + rng.uniform_int(-12, 12), 0, 255), std::clamp(p.y + rng.uniform_int(-12, 12), 0, 255)};
    }
    const double eps = rng.uniform(0.5, 6.0);
    const auto out = rdp_simplify(s, eps);
    ASSERT_EQ(out.points.front(), s.points.front());
    ASSERT_EQ(out.points.back(), s.points.back());
    // Kept points appear in order; every dropped point lies within eps of its span.
    std::size_t k = 0;
    std::vector<std::size_t> kept_idx;
    for (std::size_t i = 0; i < s.points.size() && k < out.points.size(); ++i)
      if (s.points[i] == out.points[k]) {
        kept_idx.push_back(i);
        ++k;
      }
    ASSERT_EQ(kept_idx.size(), out.points.size());
    for (std::size_t seg = 0; seg + 1 < kept_idx.size(); ++seg) {
      const auto a = s.points[kept_idx[seg]];
      const auto b = s.points[kept_idx[seg + 1]];
      for (auto i = kept_idx[seg] + 1; i < kept_idx[seg + 1]; ++i) {
        const double vx = b.x - a.x, vy = b.y - a.y, wx = s.points[i].x - a.x, wy = s.points[i].y - a.y;
        const double l2 = vx * vx + vy * vy;
        const double t = l2 > 0 ? std::clamp((wx * vx + wy * vy) / l2, 0.0, 1.0) : 0.0;
        ASSERT_LE(std::hypot(wx - t * vx, wy - t * vy), eps + 1e-9);
      }
    }
  }
}

TEST(Relationships, BundledTableParses) {
  const auto& recs = bundled_relationships();
  EXPECT_GE(recs.size(), 50u);
  for (const auto& r : recs) {
    EXPECT_TRUE(ObjectPool(procedural_classes()).has(r.subject_class));
    EXPECT_TRUE(ObjectPool(procedural_classes()).has(r.object_class));
  }
  EXPECT_THROW(parse_relationships_csv("h\ncat,on,mat,1,2\n"), ParseError);
}

TEST(RelationshipScene, PureRescaleWithoutPerturbation) {
  const RelationshipRecord rec{"tree", "next to", "house", {0, 0, 100, 50}, {100, 50, 100, 50}, 200, 100};
  const ObjectPool pool(procedural_classes());
  Rng rng(1);
  const auto scene = compose_relationship_scene(rec, pool, rng, SceneOptions{0.0, 0.0});
  ASSERT_EQ(scene.objects.size(), 2u);
  EXPECT_EQ(scene.objects[0].bbox, (BBox{0, 0, 128, 128}));
  EXPECT_EQ(scene.objects[1].bbox, (BBox{128, 128, 128, 128}));
  ASSERT_TRUE(scene.relationship);
  EXPECT_EQ(relationship_phrase(scene), "a tree next to a house");
}

TEST(RelationshipScene, DeterministicAndClamped) {
  const ObjectPool pool(procedural_classes());
  const auto& recs = bundled_relationships();
  for (int i = 0; i < 1000; ++i) {
    Rng rng(static_cast<std::uint64_t>(i));
    const auto scene = compose_relationship_scene(recs[static_cast<std::size_t>(i) % recs.size()], pool, rng);
    for (const auto& o : scene.objects) {
      ASSERT_GE(o.bbox.x, 0);
      ASSERT_GE(o.bbox.y, 0);
      ASSERT_LE(o.bbox.x + o.bbox.w, 256);
      ASSERT_LE(o.bbox.y + o.bbox.h, 256);
      for (const auto& s : o.strokes)
        for (const auto& p : s.points) {
          ASSERT_GE(p.x, o.bbox.x - 1);
          ASSERT_LE(p.x, o.bbox.x + o.bbox.w);
        }
    }
  }
  Rng a(5), b(5);
  const auto sa = compose_relationship_scene(recs[0], pool, a);
  const auto sb = compose_relationship_scene(recs[0], pool, b);
  EXPECT_EQ(sa.objects[0].strokes, sb.objects[0].strokes);
  EXPECT_EQ(sa.objects[1].bbox, sb.objects[1].bbox);
  const ObjectPool small({"circle"});
  Rng c(1);
  EXPECT_THROW(compose_relationship_scene(recs[0], small, c), MissingClass);
}

TEST(LocationScene, SingleObjectOnCanvas) {
  const ObjectPool pool({"circle", "square", "triangle"});
  Rng rng(3);
  const auto scene = compose_location_scene(pool, 1, rng);
  ASSERT_EQ(scene.objects.size(), 1u);
  const auto& b = scene.objects[0].bbox;
  EXPECT_GE(b.w, 64);
  EXPECT_LE(b.w, 128);
  EXPECT_LE(b.x + b.w, 256);
  EXPECT_LE(b.y + b.h, 256);
}

TEST(LocationScene, FourObjectsMostlyDisjoint) {
  const ObjectPool pool({"circle", "square", "triangle"});
  int ok = 0;
  for (int i = 0; i < 500; ++i) {
    Rng rng(static_cast<std::uint64_t>(1000 + i));
    const auto scene = compose_location_scene(pool, 4, rng);
    double worst = 0;
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = a + 1; b < 4; ++b) worst = std::max(worst, iou(scene.objects[a].bbox, scene.objects[b].bbox));
    ok += worst < 0.1 ? 1 : 0;
  }
  EXPECT_GE(ok, 475);
}

TEST(LocationScene, Deterministic) {
  const ObjectPool pool({"circle", "square", "triangle"});
  Rng a(9), b(9);
  const auto sa = compose_location_scene(pool, 3, a);
  const auto sb = compose_location_scene(pool, 3, b);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(sa.objects[i].bbox, sb.objects[i].bbox);
    EXPECT_EQ(sa.objects[i].strokes, sb.objects[i].strokes);
  }
}

TEST(LocationTag, GridRule) {
  auto centered = [](int cx, int cy) { return BBox{cx, cy, 1, 1}; };
  EXPECT_EQ(location_tag(centered(128, 128)), "at the center of");
  EXPECT_EQ(location_tag(centered(230, 20)), "at the top right corner of");
  EXPECT_EQ(location_tag(centered(128, 20)), "at the top of");
  EXPECT_EQ(location_tag(centered(20, 230)), "at the bottom left corner of");
  EXPECT_EQ(location_tag(centered(20, 128)), "at the left side of");
  EXPECT_EQ(location_tag(centered(230, 128)), "at the right side of");
  EXPECT_EQ(location_tag(centered(84, 84)), "at the top left corner of");
  EXPECT_EQ(location_tag(centered(85, 171)), "at the bottom of");
  EXPECT_EQ(location_tags().size(), 9u);
}

Scene single(const std::string& cls) {
  Scene s;
  s.objects.push_back(object_at(cls, {100, 100, 64, 64}, 3));
  return s;
}

TEST(DefaultPrompt, TableTemplates) {
  Rng rng(0);
  // location_probability 0 forces the variants without location.
  TaskPlan p = plan_task(TaskKind::kGenerateAll, single("apple"), rng, 0.0);
  EXPECT_EQ(render_prompt(p, 0), "Draw a sketch of an apple");
  p = plan_task(TaskKind::kGenerateAll, single("tree"), rng, 1.0);
  EXPECT_EQ(render_prompt(p, 0), "Draw a tree at the center of this sketch");
  p = plan_task(TaskKind::kClassification, single("tree"), rng);
  EXPECT_EQ(render_prompt(p, 0), "What is the class of this sketch");
  EXPECT_EQ(p.answer, "a tree");
  Scene three;
  three.objects = {object_at("circle", {0, 0, 64, 64}), object_at("circle", {180, 0, 64, 64}),
                   object_at("square", {100, 180, 64, 64})};
  p = plan_task(TaskKind::kRemoveAll, three, rng);
  EXPECT_EQ(render_prompt(p, 0), "Remove all the objects from this sketch");
  p = plan_task(TaskKind::kGenerateAll, three, rng);
  EXPECT_EQ(render_prompt(p, 0), "Draw a sketch of 2 circles and 1 square");
  p = plan_task(TaskKind::kClassification, three, rng, 0.0);
  EXPECT_EQ(render_prompt(p, 0), "What are the objects in this sketch");
  EXPECT_EQ(p.answer, "2 circles and 1 square");
  p = plan_task(TaskKind::kRemovePartial, three, rng, 0.0);
  EXPECT_EQ(render_prompt(p, 0), "Remove a square from this sketch");
  EXPECT_EQ(p.target, 2);
  p = plan_task(TaskKind::kGeneratePartial, three, rng, 1.0);
  EXPECT_EQ(p.template_id, TemplateId::kAddLocation);
  EXPECT_EQ(render_prompt(p, 0).rfind("Add a ", 0), 0u);
  p = plan_task(TaskKind::kGeneratePartial, single("house"), rng);
  EXPECT_EQ(render_prompt(p, 0), "Complete this sketch as a house");
  p = plan_task(TaskKind::kRemoveAll, single("tree"), rng);
  EXPECT_EQ(render_prompt(p, 0), "Remove a tree from this sketch");
  p = plan_task(TaskKind::kReproduce, three, rng);
  EXPECT_EQ(render_prompt(p, 0), "Reproduce this sketch");
  EXPECT_THROW(plan_task(TaskKind::kRemovePartial, single("tree"), rng), IncompatibleScene);
  Scene one_stroke;
  one_stroke.objects.push_back(object_at("circle", {0, 0, 64, 64}, 1));
  EXPECT_THROW(plan_task(TaskKind::kGeneratePartial, one_stroke, rng), IncompatibleScene);
}

TEST(DefaultPrompt, LocationClassification) {
  Scene two;
  two.objects = {object_at("circle", {0, 0, 64, 64}), object_at("square", {180, 180, 64, 64})};
  Rng rng(0);
  const auto p = plan_task(TaskKind::kClassification, two, rng, 1.0);
  EXPECT_EQ(p.template_id, TemplateId::kClassifyLocation);
  const auto text = render_prompt(p, 0);
  if (p.target == 0) {
    EXPECT_EQ(text, "What is the object at the top left corner of this sketch");
    EXPECT_EQ(p.answer, "a circle");
  } else {
    EXPECT_EQ(text, "What is the object at the bottom right corner of this sketch");
    EXPECT_EQ(p.answer, "a square");
  }
}

TEST(Paraphrase, VariantsPreserveSlots) {
  Scene two;
  two.objects = {object_at("circle", {0, 0, 64, 64}), object_at("square", {180, 180, 64, 64})};
  Rng rng(0);
  for (const auto& t : prompt_templates()) {
    EXPECT_GE(t.variants.size(), 3u);
    TaskPlan plan{t.task, t.id, 1, {{"obj", "a square"}, {"loc", "at the bottom right corner of"},
                                    {"rel", "a square under a circle"}, {"list", "1 circle and 1 square"}}, {}};
    const auto base = render_prompt(plan, 0);
    for (std::size_t v = 1; v <= t.variants.size(); ++v) {
      const auto text = render_prompt(plan, v);
      for (const auto& key : {"obj", "loc", "rel", "list"}) {
        const std::string slot = std::string("{") + key + "}";
        if (std::string(t.text).find(slot) != std::string::npos)
          EXPECT_NE(text.find(plan.slots[key]), std::string::npos) << text;
      }
    }
    (void)base;
  }
  const auto plan = plan_task(TaskKind::kRemoveAll, two, rng);
  Rng a(77), b(77);
  EXPECT_EQ(paraphrase(plan, a), paraphrase(plan, b));
  std::set<std::string> seen;
  for (int i = 0; i < 200; ++i) seen.insert(paraphrase(plan, rng));
  EXPECT_TRUE(seen.count("Remove all the objects from this sketch"));
  EXPECT_EQ(seen.size(), variant_count(plan.template_id) + 1);
}

Scene random_scene(std::uint64_t seed, int n) {
  const ObjectPool pool({"circle", "square", "house"});
  Rng rng(seed);
  return compose_location_scene(pool, n, rng);
}

TEST(DeriveSample, GenerateAll) {
  const auto scene = random_scene(1, 1);
  Rng rng(2);
  const auto s = derive_sample(TaskKind::kGenerateAll, scene, rng);
  EXPECT_EQ(s.prompt_canvas(), blank_canvas());
  EXPECT_EQ(s.gt_canvas(), apply_strokes(blank_canvas(), scene.objects[0].strokes));
  EXPECT_EQ(s.feedback_canvases().size(), s.response_strokes.size());
}

TEST(DeriveSample, RemoveAllErasesToBlank) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto scene = random_scene(seed, 3);
    Rng rng(seed);
    const auto s = derive_sample(TaskKind::kRemoveAll, scene, rng);
    ASSERT_EQ(apply_strokes(s.prompt_canvas(), s.response_strokes), blank_canvas());
    for (const auto& st : s.response_strokes) {
      EXPECT_EQ(st.color, kWhite);
      EXPECT_EQ(st.width, 2);
    }
  }
}

TEST(DeriveSample, ClassificationAnswer) {
  Rng rng(0);
  const auto s = derive_sample(TaskKind::kClassification, single("tree"), rng);
  EXPECT_EQ(s.response_text, "a tree");
  EXPECT_TRUE(s.response_strokes.empty());
  EXPECT_EQ(s.gt_canvas(), s.prompt_canvas());
}

TEST(DeriveSample, PartialAndReproduce) {
  const auto scene = random_scene(4, 3);
  Rng rng(4);
  const auto rp = derive_sample(TaskKind::kRemovePartial, scene, rng);
  EXPECT_FALSE(rp.response_strokes.empty());
  const auto rep = derive_sample(TaskKind::kReproduce, scene, rng);
  EXPECT_EQ(rep.start_canvas(), blank_canvas());
  EXPECT_EQ(rep.gt_canvas(), rep.prompt_canvas());
  const auto gp = derive_sample(TaskKind::kGeneratePartial, scene, rng);
  EXPECT_EQ(gp.gt_canvas(), apply_strokes(blank_canvas(), [&] {
              std::vector<Stroke> all;
              for (const auto& o : scene.objects) all.insert(all.end(), o.strokes.begin(), o.strokes.end());
              return all;
            }()));
}

TEST(DeriveSample, ObjectsStayContiguous) {
  const auto scene = random_scene(8, 4);
  Rng rng(8);
  const auto s = derive_sample(TaskKind::kGenerateAll, scene, rng);
  std::size_t pos = 0;
  std::set<std::size_t> used;
  while (pos < s.response_strokes.size()) {
    bool matched = false;
    for (std::size_t k = 0; k < scene.objects.size() && !matched; ++k) {
      const auto& st = scene.objects[k].strokes;
      if (used.count(k) || pos + st.size() > s.response_strokes.size()) continue;
      if (std::equal(st.begin(), st.end(), s.response_strokes.begin() + static_cast<std::ptrdiff_t>(pos))) {
        used.insert(k);
        pos += st.size();
        matched = true;
      }
    }
    ASSERT_TRUE(matched);
  }
}

DatasetConfig small_config() {
  DatasetConfig cfg;
  cfg.classes = {"circle", "square", "house", "ladder"};
  cfg.samples = 120;
  cfg.eval_samples = 20;
  cfg.seed = 11;
  return cfg;
}

TEST(Dataset, InvariantsHold) {
  const auto ds = build_dataset(small_config());
  ASSERT_EQ(ds.train.size(), 120u);
  ASSERT_EQ(ds.eval.size(), 20u);
  std::set<TaskKind> tasks;
  for (const auto& s : ds.train) {
    tasks.insert(s.task);
    ASSERT_EQ(apply_strokes(s.start_canvas(), s.response_strokes), s.gt_canvas());
    ASSERT_LE(sample_token_count(s), 1024u);
    if (s.task == TaskKind::kClassification) ASSERT_FALSE(s.response_text.empty());
  }
  EXPECT_EQ(tasks.size(), 6u);
}

TEST(Dataset, StrokeInvariantsFuzz) {
  DatasetConfig cfg = small_config();
  cfg.classes = procedural_classes();
  cfg.samples = 10000;
  cfg.eval_samples = 0;
  cfg.relationship_fraction = 0.3;
  const auto ds = build_dataset(cfg);
  for (const auto& s : ds.train) {
    for (const auto& st : s.prompt_strokes) ASSERT_TRUE(is_valid(st));
    for (const auto& st : s.response_strokes) ASSERT_TRUE(is_valid(st));
  }
}

TEST(Dataset, TemplateFidelityWithoutParaphrase) {
  // Every default prompt instantiates one template exactly.
  const auto ds = build_dataset(small_config());
  Rng rng(0);
  for (const auto& s : ds.train) {
    bool matched = false;
    for (const auto& t : prompt_templates()) {
      std::vector<std::string_view> candidates = {t.text};
      candidates.insert(candidates.end(), t.variants.begin(), t.variants.end());
      for (auto text : candidates) {
        const auto prefix = text.substr(0, text.find('{'));
        if (s.command_text.rfind(std::string(prefix), 0) == 0) matched = true;
      }
    }
    ASSERT_TRUE(matched) << s.command_text;
  }
}

TEST(Dataset, DeterministicBuild) {
  const auto a = build_dataset(small_config());
  const auto b = build_dataset(small_config());
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.eval, b.eval);
}

TEST(Shard, RoundTrip) {
  const auto dir = temp_dir("shard");
  auto cfg = small_config();
  cfg.samples = 100;
  const auto ds = build_dataset(cfg);
  write_shard(ds.train, dir / "a.jsonl");
  EXPECT_EQ(read_shard(dir / "a.jsonl"), ds.train);
  write_shard({}, dir / "empty.jsonl");
  EXPECT_TRUE(read_shard(dir / "empty.jsonl").empty());
  {
    std::ofstream out(dir / "bad.jsonl");
    out << sample_to_json_line(ds.train[0]) << "\n{\"task\":\"nope\"}\n";
  }
  try {
    read_shard(dir / "bad.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Shard, DatasetDirectory) {
  const auto dir = temp_dir("dsdir");
  auto cfg = small_config();
  cfg.shard_size = 50;
  const auto ds = build_dataset(cfg);
  write_dataset(ds, cfg, dir);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "shard-00002.jsonl"));
  EXPECT_EQ(load_samples(dir), ds.train);
  EXPECT_EQ(load_samples(dir, true), ds.eval);
}

TEST(BaseCorpus, CoversByteLiteralsAndTags) {
  const auto corpus = base_corpus({"circle"});
  const auto v = build_vocab(corpus);
  EXPECT_TRUE(v.contains("255"));
  EXPECT_TRUE(v.contains("0"));
  EXPECT_TRUE(v.contains("<stroke>"));
  EXPECT_TRUE(v.contains("circles"));
  EXPECT_TRUE(v.contains("corner"));
  EXPECT_FALSE(v.contains("{obj}"));
}

}  // namespace
}  // namespace painter
