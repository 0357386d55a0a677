#include "admgs/checkpoint.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <cstring>

#include "admgs/io.hpp"
#include "admgs/registry.hpp"

using json = nlohmann::json;

namespace admgs {

namespace {

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}
void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}
std::uint32_t read_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint64_t read_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

void append_f32(std::vector<std::uint8_t>& out, const float* data,
                std::size_t n) {
  std::uint32_t bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(&bits, &data[i], 4);
    append_u32(out, bits);
  }
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", (unsigned long long)v);
  return buf;
}
std::uint64_t from_hex64(const std::string& s) {
  return std::strtoull(s.c_str(), nullptr, 16);
}

struct TensorDirEntry {
  std::string name;
  std::size_t rows = 0, cols = 0, offset = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, SceneGraph<float>& scene,
                     FieldSet<float>& fields, const AdamState<float>* adam,
                     const CheckpointState& state) {
  auto reg = collect_params(scene, fields);

  json header;
  header["iteration"] = state.iteration;
  header["adam_step"] = state.adam_step;
  header["rng"] = {hex64(state.rng_state[0]), hex64(state.rng_state[1]),
                   hex64(state.rng_state[2]), hex64(state.rng_state[3])};
  header["cursor"] = {{"traversal", state.cursor_traversal},
                      {"frames", state.cursor_frames}};
  header["config"] =
      state.config_json.empty() ? json::object() : json::parse(state.config_json);
  header["fields"] = {{"d_geo", fields.config.d_geo},
                      {"d_emb", fields.config.d_emb},
                      {"d_obj", fields.config.d_obj},
                      {"light_geo_inputs", fields.config.light_geo_inputs}};
  header["scene"] = {{"n_static", scene.static_node.prims.count()},
                     {"n_sky", scene.sky_node.prims.count()},
                     {"sky_radius", double(scene.sky_node.radius)},
                     {"n_traversals", scene.traversals.count()}};
  header["objects"] = json::array();
  for (const auto& obj : scene.objects) {
    json jo;
    jo["count"] = obj.prims.count();
    jo["trajectory"] = json::array();
    for (const auto& k : obj.trajectory) {
      jo["trajectory"].push_back(
          {{"time", k.timestamp},
           {"q", {k.rotation.w, k.rotation.x, k.rotation.y, k.rotation.z}},
           {"t", {k.translation.x, k.translation.y, k.translation.z}}});
    }
    header["objects"].push_back(std::move(jo));
  }
  header["has_optimizer"] = adam != nullptr;

  // Tensor directory: parameters, then optimizer moments.
  json jtensors = json::array();
  std::size_t offset = 0;
  auto add_dir = [&](const std::string& name, std::size_t rows,
                     std::size_t cols) {
    jtensors.push_back({{"name", name}, {"rows", rows}, {"cols", cols},
                        {"offset", offset}});
    offset += rows * cols * 4;
  };
  for (const auto& e : reg.entries) {
    add_dir(e.name, e.tensor->rows, e.tensor->cols);
  }
  if (adam) {
    for (std::size_t i = 0; i < reg.entries.size(); ++i) {
      const auto& e = reg.entries[i];
      add_dir("adam.m." + e.name, e.tensor->rows, e.tensor->cols);
      add_dir("adam.v." + e.name, e.tensor->rows, e.tensor->cols);
    }
  }
  header["tensors"] = std::move(jtensors);

  const std::string header_text = header.dump();
  std::vector<std::uint8_t> bytes;
  bytes.reserve(header_text.size() + offset + 64);
  bytes.push_back('A');
  bytes.push_back('D');
  bytes.push_back('M');
  bytes.push_back('G');
  append_u32(bytes, kCheckpointVersion);
  append_u64(bytes, header_text.size());
  bytes.insert(bytes.end(), header_text.begin(), header_text.end());
  for (const auto& e : reg.entries) {
    append_f32(bytes, e.tensor->v.data(), e.tensor->size());
  }
  if (adam) {
    if (adam->slots.size() != reg.entries.size()) {
      throw ContractViolation("save_checkpoint: optimizer/registry mismatch");
    }
    for (std::size_t i = 0; i < reg.entries.size(); ++i) {
      append_f32(bytes, adam->slots[i].m.data(), adam->slots[i].m.size());
      append_f32(bytes, adam->slots[i].v.data(), adam->slots[i].v.size());
    }
  }
  const std::uint32_t crc = std::uint32_t(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            uInt(bytes.size())));
  append_u32(bytes, crc);
  write_binary_file(path, bytes);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_binary_file(path);
  if (bytes.size() < 20) throw TruncatedFile("checkpoint: file too small");
  if (std::memcmp(bytes.data(), "ADMG", 4) != 0) {
    throw VersionMismatch("checkpoint: bad magic bytes");
  }
  const std::uint32_t version = read_u32(bytes.data() + 4);
  if (version != kCheckpointVersion) {
    throw VersionMismatch("checkpoint: unsupported version " +
                          std::to_string(version));
  }
  const std::uint64_t header_len = read_u64(bytes.data() + 8);
  if (16 + header_len + 4 > bytes.size()) {
    throw TruncatedFile("checkpoint: header extends past end of file");
  }
  const std::uint32_t stored_crc = read_u32(bytes.data() + bytes.size() - 4);
  const std::uint32_t crc = std::uint32_t(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            uInt(bytes.size() - 4)));
  if (crc != stored_crc) {
    throw ChecksumFailure("checkpoint: CRC32 mismatch");
  }

  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + long(header_len));
  } catch (const json::exception& e) {
    throw TruncatedFile(std::string("checkpoint: bad header JSON: ") + e.what());
  }

  LoadedCheckpoint out;
  out.state.iteration = header.at("iteration").get<long long>();
  out.state.adam_step = header.at("adam_step").get<long long>();
  for (int i = 0; i < 4; ++i) {
    out.state.rng_state[std::size_t(i)] =
        from_hex64(header.at("rng")[std::size_t(i)].get<std::string>());
  }
  out.state.cursor_traversal = header.at("cursor").at("traversal").get<int>();
  out.state.cursor_frames =
      header.at("cursor").at("frames").get<std::vector<long long>>();
  out.state.config_json = header.at("config").dump();
  out.has_optimizer = header.at("has_optimizer").get<bool>();

  FieldConfig fc;
  fc.d_geo = header.at("fields").at("d_geo").get<int>();
  fc.d_emb = header.at("fields").at("d_emb").get<int>();
  fc.d_obj = header.at("fields").at("d_obj").get<int>();
  fc.light_geo_inputs = header.at("fields").at("light_geo_inputs").get<bool>();
  Rng dummy(0);
  out.fields = FieldSet<float>::make(fc, dummy);

  const auto& js = header.at("scene");
  out.scene.static_node.prims.resize(js.at("n_static").get<std::size_t>(),
                                     std::size_t(fc.d_geo));
  out.scene.sky_node.prims.resize(js.at("n_sky").get<std::size_t>(),
                                  std::size_t(fc.d_geo));
  out.scene.sky_node.radius = float(js.at("sky_radius").get<double>());
  out.scene.traversals.resize(js.at("n_traversals").get<std::size_t>(),
                              std::size_t(fc.d_emb));
  for (const auto& jo : header.at("objects")) {
    ObjectNode<float> obj;
    obj.prims.resize(jo.at("count").get<std::size_t>(), std::size_t(fc.d_geo));
    obj.feature.resize(1, std::size_t(fc.d_obj));
    for (const auto& jk : jo.at("trajectory")) {
      TrajectoryKeyframe k;
      k.timestamp = jk.at("time").get<double>();
      k.rotation = {jk.at("q")[0].get<double>(), jk.at("q")[1].get<double>(),
                    jk.at("q")[2].get<double>(), jk.at("q")[3].get<double>()};
      k.translation = {jk.at("t")[0].get<double>(), jk.at("t")[1].get<double>(),
                       jk.at("t")[2].get<double>()};
      obj.trajectory.push_back(k);
    }
    out.scene.objects.push_back(std::move(obj));
  }

  auto reg = collect_params(out.scene, out.fields);
  const std::uint8_t* payload = bytes.data() + 16 + header_len;
  const std::size_t payload_size = bytes.size() - 20 - header_len;

  auto read_tensor = [&](const json& jt, float* dst, std::size_t expect_rows,
                         std::size_t expect_cols) {
    const std::size_t rows = jt.at("rows").get<std::size_t>();
    const std::size_t cols = jt.at("cols").get<std::size_t>();
    const std::size_t off = jt.at("offset").get<std::size_t>();
    if (rows != expect_rows || cols != expect_cols) {
      throw VersionMismatch("checkpoint: tensor shape mismatch for " +
                            jt.at("name").get<std::string>());
    }
    const std::size_t nbytes = rows * cols * 4;
    if (off + nbytes > payload_size) {
      throw TruncatedFile("checkpoint: tensor payload out of bounds");
    }
    std::memcpy(dst, payload + off, nbytes);
  };

  if (out.has_optimizer) out.adam.init(reg);
  for (const auto& jt : header.at("tensors")) {
    const std::string name = jt.at("name").get<std::string>();
    if (name.rfind("adam.m.", 0) == 0 || name.rfind("adam.v.", 0) == 0) {
      if (!out.has_optimizer) continue;
      const bool is_m = name[5] == 'm';
      const std::string base = name.substr(7);
      for (std::size_t i = 0; i < reg.entries.size(); ++i) {
        if (reg.entries[i].name == base) {
          auto& slot = out.adam.slots[i];
          read_tensor(jt, is_m ? slot.m.data() : slot.v.data(),
                      reg.entries[i].tensor->rows, reg.entries[i].tensor->cols);
          break;
        }
      }
      continue;
    }
    const TensorRef<float>* e = reg.find(name);
    if (!e) throw VersionMismatch("checkpoint: unknown tensor '" + name + "'");
    read_tensor(jt, e->tensor->v.data(), e->tensor->rows, e->tensor->cols);
  }
  out.adam.step = out.state.adam_step;
  return out;
}

}  // namespace admgs
