#include "rtfs/weights_io.h"

#include <cstring>
#include <fstream>
#include <set>
#include <vector>

namespace rtfs {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

struct Reader {
  const std::uint8_t* p;
  std::size_t n;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t k, const char* what) {
    if (pos + k > n) {
      throw format_error("weights: '" + path + "' truncated while reading " + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = static_cast<std::uint32_t>(p[pos]) | (static_cast<std::uint32_t>(p[pos + 1]) << 8) |
                      (static_cast<std::uint32_t>(p[pos + 2]) << 16) |
                      (static_cast<std::uint32_t>(p[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(p[pos] | (p[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return p[pos++];
  }
};

}  // namespace

void save_container(const std::map<std::string, Tensor>& tensors, const std::string& path,
                    const std::string& config_json) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'R', 'T', 'F', 'S'});
  put_u32(out, 1);
  const std::uint32_t count =
      static_cast<std::uint32_t>(tensors.size() + (config_json.empty() ? 0 : 1));
  put_u32(out, count);

  auto put_header = [&out](const std::string& name, std::uint8_t dtype,
                           const std::vector<std::int64_t>& dims) {
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(dtype);
    out.push_back(static_cast<std::uint8_t>(dims.size()));
    for (std::int64_t d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  };

  // "__config__" sorts before every lowercase tensor name, matching map order
  if (!config_json.empty()) {
    put_header(kConfigTensorName, 1, {static_cast<std::int64_t>(config_json.size())});
    out.insert(out.end(), config_json.begin(), config_json.end());
  }
  for (const auto& [name, t] : tensors) {
    if (name == kConfigTensorName) {
      throw format_error("weights: tensor name '__config__' is reserved");
    }
    put_header(name, 0, t.dims);
    const std::size_t base = out.size();
    out.resize(base + t.data.size() * 4);
    std::memcpy(out.data() + base, t.data.data(), t.data.size() * 4);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("weights: cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw io_error("weights: short write to '" + path + "'");
}

RawContainer load_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("weights: cannot open '" + path + "'");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  Reader r{buf.data(), buf.size(), 0, path};
  r.need(4, "magic");
  if (std::memcmp(buf.data(), "RTFS", 4) != 0) {
    throw format_error("weights: '" + path + "' has no RTFS magic");
  }
  r.pos = 4;
  const std::uint32_t version = r.u32("version");
  if (version != 1) {
    throw format_error("weights: '" + path + "' has unsupported version " +
                       std::to_string(version));
  }
  const std::uint32_t count = r.u32("tensor count");

  RawContainer raw;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16("name length");
    r.need(name_len, "name");
    std::string name(reinterpret_cast<const char*>(buf.data() + r.pos), name_len);
    r.pos += name_len;
    const std::uint8_t dtype = r.u8("dtype");
    const std::uint8_t rank = r.u8("rank");
    std::vector<std::int64_t> dims(rank);
    std::int64_t numel = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      dims[k] = r.u32("dims");
      numel *= dims[k];
    }
    if (dtype == 1) {
      r.need(static_cast<std::size_t>(numel), "blob payload");
      std::string blob(reinterpret_cast<const char*>(buf.data() + r.pos),
                       static_cast<std::size_t>(numel));
      r.pos += static_cast<std::size_t>(numel);
      if (name == kConfigTensorName) {
        raw.config_json = std::move(blob);
      } else {
        throw format_error("weights: '" + path + "' has unexpected blob tensor '" + name + "'");
      }
    } else if (dtype == 0) {
      r.need(static_cast<std::size_t>(numel) * 4, "tensor payload");
      Tensor t(dims);
      std::memcpy(t.data.data(), buf.data() + r.pos, static_cast<std::size_t>(numel) * 4);
      r.pos += static_cast<std::size_t>(numel) * 4;
      if (!raw.tensors.emplace(name, std::move(t)).second) {
        throw format_error("weights: '" + path + "' defines tensor '" + name + "' twice");
      }
    } else {
      throw format_error("weights: '" + path + "' tensor '" + name + "' has unknown dtype " +
                         std::to_string(dtype));
    }
  }
  if (r.pos != r.n) {
    throw format_error("weights: '" + path + "' has trailing bytes after the last tensor");
  }
  return raw;
}

void save_weights(const WeightStore& store, const std::string& path) {
  save_container(store.tensors, path, config_to_json(store.config));
}

WeightStore load_weights(const std::string& path, bool allow_extra) {
  RawContainer raw = load_container(path);
  if (raw.config_json.empty()) {
    throw format_error("weights: '" + path + "' has no embedded __config__");
  }
  WeightStore store;
  store.config = config_from_json(raw.config_json);
  store.tensors = std::move(raw.tensors);

  std::set<std::string> expected;
  for (const TensorReq& req : required_tensors(store.config)) {
    expected.insert(req.name);
    auto it = store.tensors.find(req.name);
    if (it == store.tensors.end()) {
      throw format_error("weights: '" + path + "' is missing tensor '" + req.name + "'");
    }
    if (it->second.dims != req.dims) {
      throw format_error("weights: tensor '" + req.name + "' has shape " +
                         dims_to_string(it->second.dims) + ", expected " +
                         dims_to_string(req.dims));
    }
  }
  if (!allow_extra) {
    for (const auto& [name, t] : store.tensors) {
      if (expected.count(name) == 0) {
        throw format_error("weights: '" + path + "' holds unknown tensor '" + name + "'");
      }
    }
  }
  return store;
}

}  // namespace rtfs
