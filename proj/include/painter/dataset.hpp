#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "painter/canvas.hpp"
#include "painter/rng.hpp"
#include "painter/stroke.hpp"

namespace painter {

struct ObjectSource {
  std::string class_name;
  std::string article;
  std::vector<Stroke> strokes;
};

/// "a", "an" or "the" for a class name.
std::string article_for(std::string_view class_name);

/// One ObjectSource per NDJSON line ({"word":..., "drawing":[[xs,ys],...]}).
/// Throws ParseError naming the 1-based line number.
std::vector<ObjectSource> ingest_quickdraw(const std::filesystem::path& path);
std::vector<ObjectSource> parse_quickdraw(std::string_view ndjson);

/// circle, square, triangle, star, house, tree, cup, ladder.
const std::vector<std::string>& procedural_classes();
ObjectSource procedural_object(std::string_view class_name, Rng& rng);
ObjectSource procedural_object(std::string_view class_name, std::uint64_t seed);

/// Ramer-Douglas-Peucker; epsilon <= 0 returns the input unchanged.
Stroke rdp_simplify(const Stroke& s, double epsilon);
double point_segment_distance(Point p, Point a, Point b);

struct RelationshipRecord {
  std::string subject_class;
  std::string predicate;
  std::string object_class;
  BBox subject_box;
  BBox object_box;
  int source_w = 0;
  int source_h = 0;
};

/// CSV with header subject,predicate,object,sx,sy,sw,sh,ox,oy,ow,oh,W,H.
std::vector<RelationshipRecord> parse_relationships_csv(std::string_view csv);
const std::vector<RelationshipRecord>& bundled_relationships();

struct SceneObject {
  std::string class_name;
  std::string article;
  BBox bbox;
  std::vector<Stroke> strokes;
};

struct Relationship {
  int subject = 0;
  std::string predicate;
  int object = 1;
};

struct Scene {
  std::vector<SceneObject> objects;
  std::optional<Relationship> relationship;
};

/// Source drawings per class: loaded Quick-Draw objects where available,
/// procedural generation otherwise.
class ObjectPool {
 public:
  explicit ObjectPool(std::vector<std::string> classes, std::vector<ObjectSource> loaded = {});

  const std::vector<std::string>& classes() const { return classes_; }
  bool has(std::string_view class_name) const;
  ObjectSource draw(std::string_view class_name, Rng& rng) const;

 private:
  std::vector<std::string> classes_;
  std::map<std::string, std::vector<ObjectSource>, std::less<>> loaded_;
};

struct SceneOptions {
  /// Bounding-box jitter as a fraction of the canvas size.
  double perturbation = 0.05;
  double rdp_epsilon = 1.5;
};

Scene compose_relationship_scene(const RelationshipRecord& rec, const ObjectPool& pool, Rng& rng,
                                 const SceneOptions& opts = {});
Scene compose_location_scene(const ObjectPool& pool, int n, Rng& rng, const SceneOptions& opts = {});

/// The nine location phrases, in a fixed order.
const std::vector<std::string>& location_tags();
std::string location_tag(const BBox& b);

enum class TaskKind { kGenerateAll, kGeneratePartial, kRemoveAll, kRemovePartial, kReproduce, kClassification };

const std::vector<TaskKind>& all_tasks();
std::string_view task_name(TaskKind t);
TaskKind parse_task(std::string_view name);

/// Default prompt templates. Slots: {obj} = article + class name, {loc} =
/// location tag, {rel} = relationship phrase, {list} = counted objects.
enum class TemplateId {
  kGenerateSingle,
  kGenerateSingleLocation,
  kGenerateRelationship,
  kGenerateList,
  kCompleteSingle,
  kAddLocation,
  kAdd,
  kRemoveSingle,
  kRemoveAll,
  kRemoveLocation,
  kRemove,
  kReproduce,
  kClassifySingle,
  kClassifyLocation,
  kClassifyList,
};

struct PromptTemplate {
  TemplateId id;
  TaskKind task;
  std::string_view scenario;
  std::string_view text;
  /// Paraphrase variants; index 0 of the rendered choices is always `text`.
  std::vector<std::string_view> variants;
};

const std::vector<PromptTemplate>& prompt_templates();
const PromptTemplate& prompt_template(TemplateId id);

/// Task scenario chosen for a scene: which template, which object is the
/// target (-1 when the task addresses the whole scene), and slot values.
struct TaskPlan {
  TaskKind task;
  TemplateId template_id;
  int target = -1;
  std::map<std::string, std::string> slots;
  std::string answer;  // classification only
};

std::string objects_list(const Scene& scene);
std::string relationship_phrase(const Scene& scene);

/// Throws IncompatibleScene.
TaskPlan plan_task(TaskKind task, const Scene& scene, Rng& rng, double location_probability = 0.5);
std::string render_prompt(const TaskPlan& plan, std::size_t variant);
std::string default_prompt(TaskKind task, const Scene& scene, Rng& rng);
/// Identity with probability 1/(n+1), else one of the n bundled variants.
std::string paraphrase(const TaskPlan& plan, Rng& rng);
std::size_t variant_count(TemplateId id);

struct ObjectInfo {
  bool operator==(const ObjectInfo&) const = default;
  std::string class_name;
  BBox bbox;
};

/// One training record. Canvases are not stored; they are replayed from
/// strokes on demand.
struct Sample {
  TaskKind task = TaskKind::kGenerateAll;
  std::string command_text;
  std::string response_text;
  std::vector<Stroke> prompt_strokes;
  std::vector<Stroke> response_strokes;
  std::vector<ObjectInfo> objects;
  std::uint64_t seed = 0;

  Canvas prompt_canvas() const;
  /// Canvas generation starts from: blank for Reproduce, else the prompt.
  Canvas start_canvas() const;
  Canvas gt_canvas() const;
  /// Generation canvas after each response stroke.
  std::vector<Canvas> feedback_canvases() const;

  friend bool operator==(const Sample&, const Sample&) = default;
};

Sample derive_sample(const TaskPlan& plan, const Scene& scene, std::string command_text, Rng& rng);
Sample derive_sample(TaskKind task, const Scene& scene, Rng& rng);

/// Whitespace word count of the full training transcript (prompt image,
/// response strokes, one feedback placeholder per stroke).
std::size_t sample_token_count(const Sample& s);

void write_shard(const std::vector<Sample>& samples, const std::filesystem::path& path);
std::vector<Sample> read_shard(const std::filesystem::path& path);
std::string sample_to_json_line(const Sample& s);
Sample sample_from_json_line(std::string_view line, std::size_t line_no = 0);

struct DatasetConfig {
  std::vector<std::string> classes = {"circle", "square", "triangle"};
  std::size_t samples = 1000;
  std::size_t eval_samples = 0;
  std::uint64_t seed = 0;
  std::vector<TaskKind> tasks = all_tasks();
  int max_objects = 4;
  double relationship_fraction = 0.15;
  double location_prompt_probability = 0.5;
  SceneOptions scene;
  std::size_t max_tokens = 1024;
  std::size_t shard_size = 5000;
  std::vector<std::filesystem::path> quickdraw_files;
  std::optional<std::filesystem::path> relationships_csv;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> eval;
};

Dataset build_dataset(const DatasetConfig& cfg);

/// Writes shard-NNNNN.jsonl, eval.jsonl and manifest.json under `dir`.
void write_dataset(const Dataset& ds, const DatasetConfig& cfg, const std::filesystem::path& dir);

/// Samples from every shard listed in a manifest, or from a single .jsonl.
std::vector<Sample> load_samples(const std::filesystem::path& path_or_dir, bool eval_split = false);

/// Words the model must know regardless of data: tags, byte literals,
/// template and paraphrase words, class names and their plurals.
std::vector<std::string> base_corpus(const std::vector<std::string>& classes);

}  // namespace painter
