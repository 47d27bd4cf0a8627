#include <algorithm>
#include <map>

#include "painter/dataset.hpp"
#include "painter/error.hpp"

namespace painter {

const std::vector<TaskKind>& all_tasks() {
  static const std::vector<TaskKind> tasks = {
      TaskKind::kGenerateAll, TaskKind::kGeneratePartial, TaskKind::kRemoveAll,
      TaskKind::kRemovePartial, TaskKind::kReproduce,     TaskKind::kClassification};
  return tasks;
}

std::string_view task_name(TaskKind t) {
  switch (t) {
    case TaskKind::kGenerateAll: return "generate-all";
    case TaskKind::kGeneratePartial: return "generate-partial";
    case TaskKind::kRemoveAll: return "remove-all";
    case TaskKind::kRemovePartial: return "remove-partial";
    case TaskKind::kReproduce: return "reproduce";
    case TaskKind::kClassification: return "classification";
  }
  return "?";
}

TaskKind parse_task(std::string_view name) {
  for (auto t : all_tasks())
    if (task_name(t) == name) return t;
  throw ParseError("unknown task '" + std::string(name) + "'");
}

const std::vector<PromptTemplate>& prompt_templates() {
  using T = TaskKind;
  using I = TemplateId;
  static const std::vector<PromptTemplate> templates = {
      {I::kGenerateSingle, T::kGenerateAll, "single w/o location", "Draw a sketch of {obj}",
       {"Sketch {obj}", "Please draw {obj}", "Make a drawing of {obj}"}},
      {I::kGenerateSingleLocation, T::kGenerateAll, "single w/ location", "Draw {obj} {loc} this sketch",
       {"Sketch {obj} {loc} this sketch", "Please draw {obj} {loc} the canvas",
        "Put {obj} {loc} this drawing"}},
      {I::kGenerateRelationship, T::kGenerateAll, "multi w/ rel", "Draw a sketch of {rel}",
       {"Sketch {rel}", "Please draw {rel}", "Make a drawing of {rel}"}},
      {I::kGenerateList, T::kGenerateAll, "multi w/o rel", "Draw a sketch of {list}",
       {"Sketch {list}", "Please draw {list}", "Make a drawing of {list}"}},
      {I::kCompleteSingle, T::kGeneratePartial, "single", "Complete this sketch as {obj}",
       {"Finish this sketch as {obj}", "Finish drawing {obj}", "Complete the drawing of {obj}"}},
      {I::kAddLocation, T::kGeneratePartial, "multi w/ location", "Add {obj} {loc} this sketch",
       {"Insert {obj} {loc} this sketch", "Place {obj} {loc} this drawing",
        "Also draw {obj} {loc} this sketch"}},
      {I::kAdd, T::kGeneratePartial, "multi w/o location", "Add {obj} to this sketch",
       {"Insert {obj} into this sketch", "Also draw {obj} in this sketch", "Place {obj} in this drawing"}},
      {I::kRemoveSingle, T::kRemoveAll, "single", "Remove {obj} from this sketch",
       {"Erase {obj} from this sketch", "Wipe {obj} off this sketch", "Delete {obj} from the drawing"}},
      {I::kRemoveAll, T::kRemoveAll, "multi", "Remove all the objects from this sketch",
       {"Erase everything in this sketch", "Wipe all the objects off this sketch", "Clear this sketch"}},
      {I::kRemoveLocation, T::kRemovePartial, "multi w/ location", "Remove {obj} {loc} this sketch",
       {"Erase {obj} {loc} this sketch", "Wipe off {obj} {loc} this sketch",
        "Delete {obj} {loc} the drawing"}},
      {I::kRemove, T::kRemovePartial, "multi w/o location", "Remove {obj} from this sketch",
       {"Erase {obj} from this sketch", "Wipe {obj} off this sketch", "Delete {obj} from the drawing"}},
      {I::kReproduce, T::kReproduce, "all", "Reproduce this sketch",
       {"Redraw this sketch", "Copy this sketch stroke by stroke", "Draw this sketch again"}},
      {I::kClassifySingle, T::kClassification, "single", "What is the class of this sketch",
       {"What is drawn in this sketch", "Name the object in this sketch",
        "Which class does this sketch show"}},
      {I::kClassifyLocation, T::kClassification, "multi w/ location", "What is the object {loc} this sketch",
       {"Name the object {loc} this sketch", "Which object is {loc} this sketch",
        "What is drawn {loc} this drawing"}},
      {I::kClassifyList, T::kClassification, "multi w/o location", "What are the objects in this sketch",
       {"Which objects are in this sketch", "List the objects in this sketch",
        "Count and name the objects in this sketch"}},
  };
  return templates;
}

const PromptTemplate& prompt_template(TemplateId id) {
  for (const auto& t : prompt_templates())
    if (t.id == id) return t;
  throw Error("unknown template id");
}

std::size_t variant_count(TemplateId id) { return prompt_template(id).variants.size(); }

namespace {

std::string plural(const std::string& name) {
  auto ends = [&](std::string_view suf) { return name.ends_with(suf); };
  if (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh")) return name + "es";
  return name + "s";
}

std::string with_article(const SceneObject& o) {
  std::string name = o.class_name;
  if (o.article == "the" && (name.starts_with("the ") || name.starts_with("The "))) name = name.substr(4);
  return o.article + " " + name;
}

std::string fill(std::string_view text, const std::map<std::string, std::string>& slots) {
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '{') {
      const auto close = text.find('}', i);
      const std::string key(text.substr(i + 1, close - i - 1));
      const auto it = slots.find(key);
      if (it == slots.end()) throw Error("template slot '" + key + "' not bound");
      out += it->second;
      i = close + 1;
    } else {
      out += text[i++];
    }
  }
  return out;
}

// Objects that can be addressed unambiguously, by location tag or by class.
std::vector<int> referable(const Scene& scene, bool by_location) {
  std::map<std::string, int> counts;
  for (const auto& o : scene.objects)
    ++counts[by_location ? location_tag(o.bbox) : o.class_name];
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(scene.objects.size()); ++i) {
    const auto& o = scene.objects[static_cast<std::size_t>(i)];
    if (counts[by_location ? location_tag(o.bbox) : o.class_name] == 1) out.push_back(i);
  }
  return out;
}

// Picks a target and whether it is addressed by location; throws if none.
std::pair<int, bool> pick_target(const Scene& scene, Rng& rng, double location_probability) {
  const bool want_location = rng.coin(location_probability);
  for (bool by_location : {want_location, !want_location}) {
    const auto candidates = referable(scene, by_location);
    if (!candidates.empty()) return {rng.pick(candidates), by_location};
  }
  throw IncompatibleScene("no object can be addressed unambiguously");
}

}  // namespace

std::string objects_list(const Scene& scene) {
  std::map<std::string, int> counts;
  for (const auto& o : scene.objects) ++counts[o.class_name];
  std::string out;
  for (const auto& [name, n] : counts) {
    if (!out.empty()) out += " and ";
    out += std::to_string(n) + " " + (n == 1 ? name : plural(name));
  }
  return out;
}

std::string relationship_phrase(const Scene& scene) {
  if (!scene.relationship) throw IncompatibleScene("scene has no relationship");
  const auto& r = *scene.relationship;
  return with_article(scene.objects.at(static_cast<std::size_t>(r.subject))) + " " + r.predicate + " " +
         with_article(scene.objects.at(static_cast<std::size_t>(r.object)));
}

TaskPlan plan_task(TaskKind task, const Scene& scene, Rng& rng, double location_probability) {
  const int n = static_cast<int>(scene.objects.size());
  if (n < 1) throw IncompatibleScene("empty scene");
  TaskPlan plan{task, TemplateId::kReproduce, -1, {}, {}};
  auto bind_target = [&](int target, bool by_location) {
    const auto& o = scene.objects[static_cast<std::size_t>(target)];
    plan.target = target;
    plan.slots["obj"] = with_article(o);
    if (by_location) plan.slots["loc"] = location_tag(o.bbox);
  };
  switch (task) {
    case TaskKind::kGenerateAll:
      if (n == 1) {
        const bool loc = rng.coin(location_probability);
        plan.template_id = loc ? TemplateId::kGenerateSingleLocation : TemplateId::kGenerateSingle;
        bind_target(0, loc);
        plan.target = -1;
      } else if (scene.relationship) {
        plan.template_id = TemplateId::kGenerateRelationship;
        plan.slots["rel"] = relationship_phrase(scene);
      } else {
        plan.template_id = TemplateId::kGenerateList;
        plan.slots["list"] = objects_list(scene);
      }
      break;
    case TaskKind::kGeneratePartial:
      if (n == 1) {
        if (scene.objects[0].strokes.size() < 2)
          throw IncompatibleScene("completing a single object needs at least two strokes");
        plan.template_id = TemplateId::kCompleteSingle;
        bind_target(0, false);
      } else {
        const auto [target, by_location] = pick_target(scene, rng, location_probability);
        plan.template_id = by_location ? TemplateId::kAddLocation : TemplateId::kAdd;
        bind_target(target, by_location);
      }
      break;
    case TaskKind::kRemoveAll:
      if (n == 1) {
        plan.template_id = TemplateId::kRemoveSingle;
        bind_target(0, false);
        plan.target = -1;
      } else {
        plan.template_id = TemplateId::kRemoveAll;
      }
      break;
    case TaskKind::kRemovePartial: {
      if (n < 2) throw IncompatibleScene("remove-partial needs at least two objects");
      const auto [target, by_location] = pick_target(scene, rng, location_probability);
      plan.template_id = by_location ? TemplateId::kRemoveLocation : TemplateId::kRemove;
      bind_target(target, by_location);
      break;
    }
    case TaskKind::kReproduce:
      plan.template_id = TemplateId::kReproduce;
      break;
    case TaskKind::kClassification:
      if (n == 1) {
        plan.template_id = TemplateId::kClassifySingle;
        plan.answer = with_article(scene.objects[0]);
        break;
      }
      if (rng.coin(location_probability)) {
        const auto candidates = referable(scene, true);
        if (!candidates.empty()) {
          const int target = rng.pick(candidates);
          plan.template_id = TemplateId::kClassifyLocation;
          bind_target(target, true);
          plan.answer = plan.slots["obj"];
          plan.slots.erase("obj");
          break;
        }
      }
      plan.template_id = TemplateId::kClassifyList;
      plan.answer = scene.relationship ? relationship_phrase(scene) : objects_list(scene);
      break;
  }
  return plan;
}

std::string render_prompt(const TaskPlan& plan, std::size_t variant) {
  const auto& t = prompt_template(plan.template_id);
  if (variant == 0) return fill(t.text, plan.slots);
  return fill(t.variants.at(variant - 1), plan.slots);
}

std::string default_prompt(TaskKind task, const Scene& scene, Rng& rng) {
  return render_prompt(plan_task(task, scene, rng), 0);
}

std::string paraphrase(const TaskPlan& plan, Rng& rng) {
  const auto n = variant_count(plan.template_id);
  return render_prompt(plan, static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n))));
}

std::vector<std::string> base_corpus(const std::vector<std::string>& classes) {
  std::vector<std::string> corpus;
  corpus.emplace_back("<command> </command> <response> </response> <stroke> </stroke> color width points ,");
  for (int i = 0; i < 256; ++i) corpus.push_back(std::to_string(i));
  for (const auto& t : prompt_templates()) {
    corpus.emplace_back(t.text);
    for (auto v : t.variants) corpus.emplace_back(v);
  }
  for (const auto& tag : location_tags()) corpus.push_back(tag);
  corpus.emplace_back("a an the and");
  for (const auto& c : classes) {
    corpus.push_back(c);
    corpus.push_back(plural(c));
  }
  for (const auto& r : bundled_relationships()) corpus.push_back(r.predicate);
  // Slot markers are not words; strip them so they never reach the vocabulary.
  for (auto& line : corpus) {
    std::string cleaned;
    for (std::size_t i = 0; i < line.size();) {
      if (line[i] == '{') {
        i = line.find('}', i) + 1;
        cleaned += ' ';
      } else {
        cleaned += line[i++];
      }
    }
    line = cleaned;
  }
  return corpus;
}

}  // namespace painter
