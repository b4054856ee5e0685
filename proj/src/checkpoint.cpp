#include "reft/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace reft {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'T', 'C'};
constexpr uint32_t kVersion = 1;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_i64(std::ostream& os, int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

int64_t read_i64(std::istream& is) {
  int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const AdamW* optimizer, const std::string& rng_state,
                     int64_t step) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<uint32_t>(model.cfg.vocab_size));
  write_u32(f, static_cast<uint32_t>(model.cfg.d_model));
  write_u32(f, static_cast<uint32_t>(model.cfg.n_layers));
  write_u32(f, static_cast<uint32_t>(model.cfg.n_heads));
  write_u32(f, static_cast<uint32_t>(model.cfg.max_seq));
  write_i64(f, static_cast<int64_t>(model.cfg.init_seed));
  write_i64(f, step);
  for (const Mat* m : model.p.all())
    f.write(reinterpret_cast<const char*>(m->a.data()),
            static_cast<std::streamsize>(m->size() * sizeof(double)));
  write_u32(f, optimizer != nullptr ? 1u : 0u);
  if (optimizer != nullptr) optimizer->write(f);
  write_string(f, rng_state);
  if (!f) throw IoError("failed writing checkpoint: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("not a checkpoint file: " + path);
  const uint32_t version = read_u32(f);
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  ModelConfig cfg;
  cfg.vocab_size = static_cast<int>(read_u32(f));
  cfg.d_model = static_cast<int>(read_u32(f));
  cfg.n_layers = static_cast<int>(read_u32(f));
  cfg.n_heads = static_cast<int>(read_u32(f));
  cfg.max_seq = static_cast<int>(read_u32(f));
  cfg.init_seed = static_cast<uint64_t>(read_i64(f));

  CheckpointData data;
  data.step = read_i64(f);
  data.model = Model(cfg);
  for (Mat* m : data.model.p.all())
    f.read(reinterpret_cast<char*>(m->a.data()),
           static_cast<std::streamsize>(m->size() * sizeof(double)));
  const bool has_opt = read_u32(f) != 0;
  if (has_opt) {
    AdamW opt;
    opt.read(f);
    data.optimizer = std::move(opt);
  }
  data.rng_state = read_string(f);
  if (!f) throw IoError("truncated checkpoint: " + path);
  return data;
}

}  // namespace reft
