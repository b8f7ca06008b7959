#include "adapitch/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "adapitch/error.hpp"

namespace adapitch {

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

void append_u32(std::string& buf, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf.append(b, 4);
}

void append_u64(std::string& buf, uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buf.append(b, 8);
}

void append_blob(std::string& buf, const std::string& name, const std::string& payload) {
  append_u32(buf, static_cast<uint32_t>(name.size()));
  buf.append(name);
  append_u64(buf, payload.size());
  buf.append(payload);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  explicit Reader(const std::string& b) : buf(b) {}
  void need(size_t n) const {
    if (pos + n > buf.size()) throw ContractViolation("checkpoint: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

std::string encode_param(const Checkpoint::Param& p) {
  std::string payload;
  payload.push_back(p.frozen ? 1 : 0);
  append_u32(payload, static_cast<uint32_t>(p.shape.size()));
  for (int d : p.shape) append_u32(payload, static_cast<uint32_t>(d));
  const size_t bytes = p.values.size() * sizeof(float);
  payload.append(reinterpret_cast<const char*>(p.values.data()), bytes);
  return payload;
}

Checkpoint::Param decode_param(const std::string& payload, const std::string& name) {
  Reader r(payload);
  Checkpoint::Param p;
  r.need(1);
  p.frozen = payload[r.pos++] != 0;
  const uint32_t rank = r.u32();
  check(rank <= 8, "checkpoint: implausible rank for parameter " + name);
  int64_t count = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    const int d = static_cast<int>(r.u32());
    p.shape.push_back(d);
    count *= d;
  }
  const std::string data = r.bytes(static_cast<size_t>(count) * sizeof(float));
  p.values.resize(static_cast<size_t>(count));
  std::memcpy(p.values.data(), data.data(), data.size());
  return p;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string buf;
  buf.append("ADPT");
  append_u32(buf, Checkpoint::kVersion);
  append_u32(buf, static_cast<uint32_t>(ckpt.params.size() + 1));

  // meta blob first, then parameters in sorted (map) order
  std::string meta;
  append_u32(meta, static_cast<uint32_t>(ckpt.stage.size()));
  meta.append(ckpt.stage);
  append_u64(meta, static_cast<uint64_t>(ckpt.step));
  append_u64(meta, ckpt.seed);
  append_u64(meta, ckpt.config_json.size());
  meta.append(ckpt.config_json);
  append_blob(buf, "__meta__", meta);
  for (const auto& [name, param] : ckpt.params) append_blob(buf, name, encode_param(param));

  append_u64(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  check(buf.size() >= 20, "checkpoint: file too small: " + path);
  check(buf.compare(0, 4, "ADPT") == 0, "checkpoint: bad magic in " + path);
  uint64_t stored_sum;
  std::memcpy(&stored_sum, buf.data() + buf.size() - 8, 8);
  const uint64_t computed = fnv1a64(buf.data(), buf.size() - 8);
  check(stored_sum == computed, "checkpoint: checksum mismatch in " + path);

  Reader r(buf);
  r.pos = 4;
  const uint32_t version = r.u32();
  check(version == Checkpoint::kVersion,
        "checkpoint: version " + std::to_string(version) + " is not supported");
  const uint32_t blob_count = r.u32();

  Checkpoint ckpt;
  for (uint32_t i = 0; i < blob_count; ++i) {
    const uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    const uint64_t payload_len = r.u64();
    const std::string payload = r.bytes(payload_len);
    if (name == "__meta__") {
      Reader m(payload);
      const uint32_t stage_len = m.u32();
      ckpt.stage = m.bytes(stage_len);
      ckpt.step = static_cast<int64_t>(m.u64());
      ckpt.seed = m.u64();
      const uint64_t cfg_len = m.u64();
      ckpt.config_json = m.bytes(cfg_len);
    } else {
      ckpt.params[name] = decode_param(payload, name);
    }
  }
  return ckpt;
}

void collect_params(const ParameterSet& ps, Checkpoint& ckpt) {
  for (const auto& name : ps.names()) {
    Tensor t = ps.get(name);
    Checkpoint::Param p;
    p.shape = t.shape();
    p.values.assign(t.values().begin(), t.values().end());
    p.frozen = ps.frozen(name);
    ckpt.params[name] = std::move(p);
  }
}

void install_params(const Checkpoint& ckpt, ParameterSet& ps, bool force_frozen) {
  for (const auto& [name, param] : ckpt.params) {
    Tensor t = Tensor::from(param.shape, param.values);
    ps.put(name, std::move(t), force_frozen || param.frozen);
  }
}

uint64_t params_digest(const ParameterSet& ps, const std::string& prefix) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& name : ps.names_with_prefix(prefix)) {
    h = fnv1a64(name.data(), name.size(), h);
    Tensor t = ps.get(name);
    h = fnv1a64(t.values().data(), t.values().size() * sizeof(float), h);
  }
  return h;
}

}  // namespace adapitch
