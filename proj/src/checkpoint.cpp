#include "painter/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace painter {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  template <class U>
  U get() {
    U v;
    std::memcpy(&v, take(sizeof(U)).data(), sizeof(U));
    return v;
  }

  std::string_view take(std::size_t n) {
    if (b_.size() - pos_ < n) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

void write_tensors(std::string& out, const nn::Weights<float>& w) {
  w.visit([&](const std::string&, const nn::Mat<float>& m, bool) {
    out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(float));
  });
}

void read_tensors(Reader& r, nn::Weights<float>& w) {
  w.visit([&](const std::string&, nn::Mat<float>& m, bool) {
    const auto n = static_cast<std::size_t>(m.size()) * sizeof(float);
    std::memcpy(m.data(), r.take(n).data(), n);
  });
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  json header;
  header["config"] = c.config;
  header["vocab"] = std::vector<std::string>(c.vocab.words().begin(), c.vocab.words().end());
  json manifest = json::array();
  c.weights.visit([&](const std::string& name, const nn::Mat<float>& m, bool) {
    manifest.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  header["tensors"] = manifest;
  header["step"] = c.step;
  header["adam_step"] = c.adam ? json(c.adam->step) : json(nullptr);
  header["train"] = c.train;
  header["dataset"] = c.dataset;
  const std::string text = header.dump();

  std::string out(kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  write_tensors(out, c.weights);
  if (c.adam) {
    write_tensors(out, c.adam->m);
    write_tensors(out, c.adam->v);
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes, const nn::ModelConfig* expected) {
  Reader r(bytes);
  if (r.take(kCheckpointMagic.size()) != kCheckpointMagic) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  const auto len = r.get<std::uint64_t>();
  json header;
  try {
    header = json::parse(r.take(static_cast<std::size_t>(len)));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }

  Checkpoint c;
  try {
    c.config = header.at("config").get<nn::ModelConfig>();
    c.vocab = vocab_from_words(header.at("vocab").get<std::vector<std::string>>());
    c.step = header.at("step").get<std::int64_t>();
    c.train = header.value("train", json());
    c.dataset = header.value("dataset", json());
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
  if (expected && !(*expected == c.config)) throw ShapeMismatch("checkpoint config differs from the requested config");
  if (c.vocab.size() != c.config.vocab) throw ShapeMismatch("vocabulary size differs from config");

  c.weights = nn::zero_weights<float>(c.config);
  const auto& manifest = header.at("tensors");
  std::size_t i = 0;
  c.weights.visit([&](const std::string& name, const nn::Mat<float>& m, bool) {
    if (i >= manifest.size()) throw ShapeMismatch("manifest is missing tensor " + name);
    const auto& e = manifest[i++];
    if (e.at("name") != name || e.at("rows") != m.rows() || e.at("cols") != m.cols())
      throw ShapeMismatch("tensor " + name + " does not match the config");
  });
  if (i != manifest.size()) throw ShapeMismatch("manifest has extra tensors");
  read_tensors(r, c.weights);
  if (!header.at("adam_step").is_null()) {
    c.adam = nn::adam_init<float>(c.config);
    c.adam->step = header.at("adam_step").get<std::int64_t>();
    read_tensors(r, c.adam->m);
    read_tensors(r, c.adam->v);
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint data");
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  write_file(tmp, serialize_checkpoint(c));
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const nn::ModelConfig* expected) {
  return deserialize_checkpoint(read_file(path), expected);
}

}  // namespace painter
