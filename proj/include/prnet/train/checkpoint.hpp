#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "prnet/model/params.hpp"
#include "prnet/train/adam.hpp"

namespace prnet {

// PRNC envelope:
//   "PRNC" | version u32 | config-hash u64 | epoch u32 | tensor count u32 |
//   per tensor: name len u16, name bytes, rank u8, dims u32 x rank,
//   payload f32 little-endian | trailing CRC32 of everything after the magic.
// Model parameters, Adam moments and config metadata all travel as named
// tensors inside the one envelope.
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

struct ByteWriter {
  std::vector<uint8_t> buf;
  void raw(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
};

struct ByteReader {
  const std::vector<uint8_t>& buf;
  size_t at = 0;
  std::string origin;

  void need(size_t n, const char* what) {
    if (at + n > buf.size())
      throw FormatError(origin + ": truncated " + what + " at byte " + std::to_string(at));
  }
  void raw(void* p, size_t n, const char* what) {
    need(n, what);
    std::memcpy(p, buf.data() + at, n);
    at += n;
  }
  uint16_t u16(const char* what) {
    uint16_t v;
    raw(&v, 2, what);
    return v;
  }
  uint32_t u32(const char* what) {
    uint32_t v;
    raw(&v, 4, what);
    return v;
  }
  uint64_t u64(const char* what) {
    uint64_t v;
    raw(&v, 8, what);
    return v;
  }
};

inline void write_named_tensor(ByteWriter& w, const std::string& name,
                               const Tensor<float>& t) {
  if (name.size() > 0xffff) throw ContractError("checkpoint: tensor name too long");
  w.u16(uint16_t(name.size()));
  w.raw(name.data(), name.size());
  w.buf.push_back(4);  // rank
  const Shape& s = t.shape();
  w.u32(uint32_t(s.n));
  w.u32(uint32_t(s.c));
  w.u32(uint32_t(s.h));
  w.u32(uint32_t(s.w));
  w.raw(t.data(), size_t(t.size()) * sizeof(float));
}

inline std::pair<std::string, Tensor<float>> read_named_tensor(ByteReader& r) {
  const uint16_t len = r.u16("tensor name length");
  std::string name(len, '\0');
  r.raw(name.data(), len, "tensor name");
  r.need(1, "tensor rank");
  const uint8_t rank = r.buf[r.at++];
  if (rank != 4)
    throw FormatError(r.origin + ": unsupported tensor rank " + std::to_string(rank) +
                      " at byte " + std::to_string(r.at - 1));
  int64_t dims[4];
  for (auto& d : dims) d = int64_t(r.u32("tensor dims"));
  const Shape s(dims[0], dims[1], dims[2], dims[3]);
  Tensor<float> t(s);
  r.raw(t.data(), size_t(s.numel()) * sizeof(float), "tensor payload");
  return {std::move(name), std::move(t)};
}

}  // namespace detail

struct Checkpoint {
  ModelConfig cfg;
  ModelParams<float> params;
  AdamState adam;
  uint32_t epoch = 0;      // next epoch to run on resume
  uint64_t config_hash = 0;
};

inline void save_checkpoint(const std::string& path, ModelParams<float>& params,
                            const AdamState& adam, uint32_t epoch) {
  detail::ByteWriter w;
  w.raw("PRNC", 4);
  w.u32(kCheckpointVersion);
  w.u64(params.cfg.hash());
  w.u32(epoch);

  std::vector<std::pair<std::string, Tensor<float>>> entries;
  size_t idx = 0;
  params.visit([&](const std::string& name, Tensor<float>& t) {
    entries.emplace_back(name, t);
    ++idx;
  });
  if (adam.m.size() != idx || adam.v.size() != idx)
    throw ContractError("save_checkpoint: optimizer state out of sync with model");
  idx = 0;
  params.visit([&](const std::string& name, Tensor<float>&) {
    entries.emplace_back("adam.m." + name, adam.m[idx]);
    entries.emplace_back("adam.v." + name, adam.v[idx]);
    ++idx;
  });
  entries.emplace_back("adam.step", Tensor<float>::scalar(float(adam.step)));

  const ModelConfig& c = params.cfg;
  auto meta = [&](const char* key, double v) {
    entries.emplace_back(std::string("meta.cfg.") + key, Tensor<float>::scalar(float(v)));
  };
  meta("stem", c.stem);
  meta("layer1", c.layer1);
  meta("layer2", c.layer2);
  meta("layer3", c.layer3);
  meta("reint_s", c.reint_s);
  meta("reint_l", c.reint_l);
  meta("tail_mid", c.tail_mid);
  meta("train_iterations", c.train_iterations);
  meta("shared_update", c.shared_update ? 1 : 0);
  meta("residual_output", c.residual_output ? 1 : 0);
  meta("use_reintegration", c.use_reintegration ? 1 : 0);
  meta("use_update", c.use_update ? 1 : 0);

  w.u32(uint32_t(entries.size()));
  for (auto& [name, t] : entries) detail::write_named_tensor(w, name, t);

  const uint32_t crc = uint32_t(::crc32(0, w.buf.data() + 4, uInt(w.buf.size() - 4)));
  w.u32(crc);

  // atomic: write to a temp file, then rename over the target
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save_checkpoint: cannot open " + tmp);
    f.write(reinterpret_cast<const char*>(w.buf.data()), std::streamsize(w.buf.size()));
    if (!f) throw IoError("save_checkpoint: short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("save_checkpoint: cannot rename " + tmp + " to " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_checkpoint: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  detail::ByteReader r{bytes, 0, path};

  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::memcmp(magic, "PRNC", 4) != 0)
    throw FormatError(path + ": bad magic at byte 0");
  if (bytes.size() < 8) throw FormatError(path + ": truncated trailer at byte 4");
  const uint32_t stored_crc = [&] {
    uint32_t v;
    std::memcpy(&v, bytes.data() + bytes.size() - 4, 4);
    return v;
  }();
  const uint32_t crc = uint32_t(::crc32(0, bytes.data() + 4, uInt(bytes.size() - 8)));
  if (crc != stored_crc)
    throw FormatError(path + ": CRC mismatch at byte " + std::to_string(bytes.size() - 4));

  const uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw FormatError(path + ": unsupported version " + std::to_string(version) +
                      " at byte 4");
  Checkpoint ck;
  ck.config_hash = r.u64("config hash");
  ck.epoch = r.u32("epoch");
  const uint32_t count = r.u32("tensor count");

  std::map<std::string, Tensor<float>> table;
  for (uint32_t i = 0; i < count; ++i) {
    auto [name, t] = detail::read_named_tensor(r);
    table.emplace(std::move(name), std::move(t));
  }
  if (r.at != bytes.size() - 4)
    throw FormatError(path + ": trailing garbage at byte " + std::to_string(r.at));

  auto meta = [&](const char* key) {
    const auto it = table.find(std::string("meta.cfg.") + key);
    if (it == table.end())
      throw FormatError(path + ": missing metadata meta.cfg." + std::string(key));
    return double(it->second.item());
  };
  ModelConfig cfg;
  cfg.stem = int(meta("stem"));
  cfg.layer1 = int(meta("layer1"));
  cfg.layer2 = int(meta("layer2"));
  cfg.layer3 = int(meta("layer3"));
  cfg.reint_s = int(meta("reint_s"));
  cfg.reint_l = int(meta("reint_l"));
  cfg.tail_mid = int(meta("tail_mid"));
  cfg.train_iterations = int(meta("train_iterations"));
  cfg.shared_update = meta("shared_update") != 0;
  cfg.residual_output = meta("residual_output") != 0;
  cfg.use_reintegration = meta("use_reintegration") != 0;
  cfg.use_update = meta("use_update") != 0;
  if (cfg.hash() != ck.config_hash)
    throw FormatError(path + ": config hash does not match the stored configuration");
  ck.cfg = cfg;

  ck.params = init_model<float>(cfg, 0);
  ck.adam.m.clear();
  ck.adam.v.clear();
  auto fetch = [&](const std::string& name) -> Tensor<float>& {
    const auto it = table.find(name);
    if (it == table.end()) throw FormatError(path + ": missing tensor " + name);
    return it->second;
  };
  ck.params.visit([&](const std::string& name, Tensor<float>& t) {
    Tensor<float>& src = fetch(name);
    if (!(src.shape() == t.shape()))
      throw FormatError(path + ": tensor " + name + " has shape " + src.shape().str() +
                        ", expected " + t.shape().str());
    std::memcpy(t.data(), src.data(), size_t(t.size()) * sizeof(float));
    Tensor<float>& m = fetch("adam.m." + name);
    Tensor<float>& v = fetch("adam.v." + name);
    if (!(m.shape() == t.shape()) || !(v.shape() == t.shape()))
      throw FormatError(path + ": optimizer moments for " + name + " have wrong shape");
    ck.adam.m.push_back(m.clone());
    ck.adam.v.push_back(v.clone());
  });
  ck.adam.step = int64_t(fetch("adam.step").item());
  return ck;
}

/// Guard for resuming: the checkpoint must carry the same structure.
inline void require_config(const Checkpoint& ck, const ModelConfig& expected) {
  if (ck.config_hash != expected.hash())
    throw ConfigError("checkpoint config-hash mismatch: stored " + ck.cfg.canonical() +
                      ", expected " + expected.canonical());
}

}  // namespace prnet
