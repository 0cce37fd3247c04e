#include "rtfs/model.h"

#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

namespace rtfs {

namespace {

using nlohmann::json;

const char* kConfigKeys[] = {"window",      "hop",       "c_a",      "d",         "q",
                             "h_a",         "sru_layers", "unfold_kernel", "attn_heads",
                             "attn_qk",     "caf_heads", "c_v",      "vp_hidden", "vp_q",
                             "vp_heads",    "vp_ffn",    "r"};

std::int64_t* field_of(ModelConfig& c, const std::string& key) {
  if (key == "window") return &c.window;
  if (key == "hop") return &c.hop;
  if (key == "c_a") return &c.c_a;
  if (key == "d") return &c.d;
  if (key == "q") return &c.q;
  if (key == "h_a") return &c.h_a;
  if (key == "sru_layers") return &c.sru_layers;
  if (key == "unfold_kernel") return &c.unfold_kernel;
  if (key == "attn_heads") return &c.attn_heads;
  if (key == "attn_qk") return &c.attn_qk;
  if (key == "caf_heads") return &c.caf_heads;
  if (key == "c_v") return &c.c_v;
  if (key == "vp_hidden") return &c.vp_hidden;
  if (key == "vp_q") return &c.vp_q;
  if (key == "vp_heads") return &c.vp_heads;
  if (key == "vp_ffn") return &c.vp_ffn;
  if (key == "r") return &c.r;
  return nullptr;
}

}  // namespace

void ModelConfig::validate() const {
  ModelConfig tmp = *this;
  for (const char* key : kConfigKeys) {
    if (*field_of(tmp, key) <= 0) {
      throw format_error(std::string("config: '") + key + "' must be positive");
    }
  }
  if (c_a % 2 != 0) throw format_error("config: c_a must be even");
  if (c_v % c_a != 0) throw format_error("config: c_v must be divisible by c_a");
  if ((window & (window - 1)) != 0) throw format_error("config: window must be a power of two");
  if (hop > window) throw format_error("config: hop must not exceed window");
  if (d % attn_heads != 0) throw format_error("config: d must be divisible by attn_heads");
  if (vp_hidden % vp_heads != 0) {
    throw format_error("config: vp_hidden must be divisible by vp_heads");
  }
}

ModelConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw format_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw format_error("config: top level must be a JSON object");
  ModelConfig cfg;
  for (const auto& [key, value] : j.items()) {
    std::int64_t* field = field_of(cfg, key);
    if (field == nullptr) throw format_error("config: unknown key '" + key + "'");
    if (!value.is_number_integer()) {
      throw format_error("config: key '" + key + "' must be an integer");
    }
    *field = value.get<std::int64_t>();
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ModelConfig& cfg) {
  ModelConfig tmp = cfg;
  nlohmann::ordered_json j;
  for (const char* key : kConfigKeys) j[key] = *field_of(tmp, key);
  return j.dump(2);
}

void config_set(ModelConfig& cfg, const std::string& key_value) {
  const std::size_t eq = key_value.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= key_value.size()) {
    throw format_error("--set expects key=value, got '" + key_value + "'");
  }
  const std::string key = key_value.substr(0, eq);
  const std::string value = key_value.substr(eq + 1);
  std::int64_t* field = field_of(cfg, key);
  if (field == nullptr) throw format_error("config: unknown key '" + key + "'");
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    *field = v;
  } catch (const std::exception&) {
    throw format_error("config: value for '" + key + "' is not an integer: '" + value + "'");
  }
}

const Tensor& WeightStore::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw format_error("weight store: missing tensor '" + name + "'");
  return it->second;
}

Tensor& WeightStore::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw format_error("weight store: missing tensor '" + name + "'");
  return it->second;
}

namespace {

float fan_bound(std::int64_t fan) { return 1.0f / std::sqrt(static_cast<float>(fan)); }

struct ReqBuilder {
  std::vector<TensorReq> reqs;

  void uniform(const std::string& name, std::vector<std::int64_t> dims, std::int64_t fan) {
    reqs.push_back({name, std::move(dims), true, TensorReq::Init::uniform, fan_bound(fan)});
  }
  void constant(const std::string& name, std::vector<std::int64_t> dims, float value,
                bool trainable) {
    reqs.push_back({name, std::move(dims), trainable, TensorReq::Init::constant, value});
  }

  // forward conv: w [cout, cin/g, ...k], fan = cin/g * prod(k)
  void conv(const std::string& prefix, std::int64_t cin, std::int64_t cout, std::int64_t g,
            std::vector<std::int64_t> kernel) {
    std::int64_t kprod = 1;
    for (auto k : kernel) kprod *= k;
    std::vector<std::int64_t> wd{cout, cin / g};
    wd.insert(wd.end(), kernel.begin(), kernel.end());
    uniform(prefix + ".w", std::move(wd), (cin / g) * kprod);
    uniform(prefix + ".b", {cout}, (cin / g) * kprod);
  }
  // transposed conv: w [cin, cout/g, ...k]
  void tconv(const std::string& prefix, std::int64_t cin, std::int64_t cout, std::int64_t g,
             std::vector<std::int64_t> kernel) {
    std::int64_t kprod = 1;
    for (auto k : kernel) kprod *= k;
    std::vector<std::int64_t> wd{cin, cout / g};
    wd.insert(wd.end(), kernel.begin(), kernel.end());
    uniform(prefix + ".w", std::move(wd), (cin / g) * kprod);
    uniform(prefix + ".b", {cout}, (cin / g) * kprod);
  }
  void ln(const std::string& prefix, std::int64_t c) {
    constant(prefix + ".g", {c}, 1.0f, true);
    constant(prefix + ".b", {c}, 0.0f, true);
  }
  void bn(const std::string& prefix, std::int64_t c) {
    constant(prefix + ".g", {c}, 1.0f, true);
    constant(prefix + ".b", {c}, 0.0f, true);
    constant(prefix + ".m", {c}, 0.0f, false);  // running stats, not trainable
    constant(prefix + ".v", {c}, 1.0f, false);
  }
  void prelu_slope(const std::string& name, std::int64_t c) {
    constant(name, {c}, 0.25f, true);
  }
  void sru(const std::string& prefix, std::int64_t layers, std::int64_t h, std::int64_t d0) {
    for (std::int64_t l = 0; l < layers; ++l) {
      const std::int64_t din = l == 0 ? d0 : 2 * h;
      for (const char* dir : {"f", "b"}) {
        const std::string p = prefix + ".l" + std::to_string(l) + "." + dir;
        uniform(p + ".w", {3 * h, din}, din);
        uniform(p + ".vf", {h}, h);
        uniform(p + ".vr", {h}, h);
        uniform(p + ".bf", {h}, h);
        uniform(p + ".br", {h}, h);
        if (din != h) uniform(p + ".hw", {h, din}, din);
      }
    }
  }
};

}  // namespace

std::vector<TensorReq> required_tensors(const ModelConfig& cfg) {
  cfg.validate();
  ReqBuilder b;
  const std::int64_t ca = cfg.c_a, d = cfg.d, cv = cfg.c_v, hh = cfg.vp_hidden;
  const std::int64_t kd = cfg.unfold_kernel * d;

  b.conv("enc", 2, ca, 1, {3, 3});

  b.conv("vp.proj", cv, hh, 1, {1});
  b.bn("vp.proj.bn", hh);
  for (std::int64_t i = 0; i < cfg.vp_q; ++i) {
    const std::string p = "vp.down" + std::to_string(i);
    b.conv(p, hh, hh, hh, {4});
    b.bn(p + ".bn", hh);
  }
  b.bn("vp.attn.norm", hh);
  for (const char* n : {"q", "k", "v", "out"}) {
    b.conv(std::string("vp.attn.") + n, hh, hh, 1, {1});
  }
  b.bn("vp.ffn.norm", hh);
  b.conv("vp.ffn.c1", hh, cfg.vp_ffn, 1, {1});
  b.bn("vp.ffn.c1.bn", cfg.vp_ffn);
  b.conv("vp.ffn.dw", cfg.vp_ffn, cfg.vp_ffn, cfg.vp_ffn, {5});
  b.bn("vp.ffn.dw.bn", cfg.vp_ffn);
  b.conv("vp.ffn.c2", cfg.vp_ffn, hh, 1, {1});
  for (std::int64_t u = 0; u < 2 * cfg.vp_q + 1; ++u) {
    const std::string p = "vp.tfar" + std::to_string(u);
    for (const char* wn : {"w1", "w2", "w3"}) {
      b.conv(p + "." + wn, hh, hh, hh, {4});
      b.bn(p + "." + wn + ".bn", hh);
    }
  }
  b.conv("vp.restore", hh, cv, 1, {1});

  b.conv("caf.p1", ca, ca, ca, {1, 1});
  b.ln("caf.p1.ln", ca);
  b.conv("caf.p2", ca, ca, ca, {1, 1});
  b.ln("caf.p2.ln", ca);
  b.conv("caf.f1", cv, ca * cfg.caf_heads, ca, {1});
  b.ln("caf.f1.ln", ca * cfg.caf_heads);
  b.conv("caf.f2", cv, ca, ca, {1});
  b.ln("caf.f2.ln", ca);

  b.conv("rtfs.reduce", ca, d, 1, {1, 1});
  for (std::int64_t i = 0; i < cfg.q - 1; ++i) {
    b.conv("rtfs.down" + std::to_string(i), d, d, d, {4, 4});
  }
  for (const char* path : {"freq", "time"}) {
    const std::string p = std::string("rtfs.") + path;
    b.ln(p + ".ln", kd);
    b.sru(p + ".sru", cfg.sru_layers, cfg.h_a, kd);
    b.tconv(p + ".deconv", 2 * cfg.h_a, d, 1, {cfg.unfold_kernel});
  }
  const std::int64_t dv = d / cfg.attn_heads;
  for (std::int64_t j = 0; j < cfg.attn_heads; ++j) {
    const std::string p = "rtfs.attn.h" + std::to_string(j);
    b.conv(p + ".q", d, cfg.attn_qk, 1, {1, 1});
    b.prelu_slope(p + ".q.p", cfg.attn_qk);
    b.ln(p + ".q.ln", cfg.attn_qk);
    b.conv(p + ".k", d, cfg.attn_qk, 1, {1, 1});
    b.prelu_slope(p + ".k.p", cfg.attn_qk);
    b.ln(p + ".k.ln", cfg.attn_qk);
    b.conv(p + ".v", d, dv, 1, {1, 1});
    b.prelu_slope(p + ".v.p", dv);
    b.ln(p + ".v.ln", dv);
  }
  b.conv("rtfs.attn.out", d, d, 1, {1, 1});
  b.prelu_slope("rtfs.attn.out.p", d);
  b.ln("rtfs.attn.out.ln", d);
  for (std::int64_t u = 0; u < 2 * cfg.q - 1; ++u) {
    const std::string p = "rtfs.tfar" + std::to_string(u);
    for (const char* wn : {"w1", "w2", "w3"}) {
      b.conv(p + "." + wn, d, d, d, {4, 4});
      b.ln(p + "." + wn + ".ln", d);
    }
  }
  b.conv("rtfs.restore", d, ca, 1, {1, 1});

  b.prelu_slope("mask.p", ca);
  b.conv("mask", ca, ca, 1, {1, 1});

  b.tconv("dec", ca, 2, 1, {3, 3});

  return b.reqs;
}

WeightStore init_random(const ModelConfig& cfg, std::uint64_t seed) {
  WeightStore store;
  store.config = cfg;
  Rng rng(seed);
  for (const TensorReq& req : required_tensors(cfg)) {
    Tensor t(req.dims);
    if (req.init == TensorReq::Init::uniform) {
      for (auto& v : t.data) v = rng.uniform_pm(req.init_param);
    } else {
      for (auto& v : t.data) v = req.init_param;
    }
    store.tensors.emplace(req.name, std::move(t));
  }
  return store;
}

namespace {

ConvLayer bind_conv(const WeightStore& s, const std::string& prefix, ConvSpec spec) {
  ConvLayer l;
  l.spec = spec;
  l.w = &s.at(prefix + ".w");
  l.b = spec.has_bias ? &s.at(prefix + ".b") : nullptr;
  return l;
}

NormLayer bind_ln(const WeightStore& s, const std::string& prefix, NormLayer::Kind kind) {
  NormLayer n;
  n.kind = kind;
  n.gamma = &s.at(prefix + ".g");
  n.beta = &s.at(prefix + ".b");
  return n;
}

NormLayer bind_bn(const WeightStore& s, const std::string& prefix) {
  NormLayer n;
  n.kind = NormLayer::Kind::bn;
  n.gamma = &s.at(prefix + ".g");
  n.beta = &s.at(prefix + ".b");
  n.mean = &s.at(prefix + ".m");
  n.var = &s.at(prefix + ".v");
  return n;
}

PreluLayer bind_prelu(const WeightStore& s, const std::string& name) {
  return PreluLayer{&s.at(name)};
}

SruStack bind_sru(const WeightStore& s, const std::string& prefix, const ModelConfig& cfg,
                  std::int64_t d0) {
  SruStack stack;
  stack.input_dim = d0;
  stack.hidden = cfg.h_a;
  stack.bidirectional = true;
  for (std::int64_t l = 0; l < cfg.sru_layers; ++l) {
    const std::int64_t din = l == 0 ? d0 : 2 * cfg.h_a;
    SruLayer layer;
    for (int dir = 0; dir < 2; ++dir) {
      const std::string p =
          prefix + ".l" + std::to_string(l) + "." + (dir == 0 ? "f" : "b");
      SruLayerWeights& lw = dir == 0 ? layer.fwd : layer.bwd;
      lw.w = &s.at(p + ".w");
      lw.vf = &s.at(p + ".vf");
      lw.vr = &s.at(p + ".vr");
      lw.bf = &s.at(p + ".bf");
      lw.br = &s.at(p + ".br");
      lw.hw = din != cfg.h_a ? &s.at(p + ".hw") : nullptr;
      lw.reverse = dir == 1;
    }
    stack.layers.push_back(layer);
  }
  return stack;
}

// The visual block is the only 1D client and the only batch-norm client, so
// one flag picks both the conv rank and the norm binding.
TfArUnit bind_tfar(const WeightStore& s, const std::string& prefix, std::int64_t c,
                   bool use_bn) {
  TfArUnit u;
  ConvSpec cs = use_bn ? ConvSpec::conv1d(c, c, 4, 1, 1, c) : ConvSpec::conv2d(c, c, 4, 4, 1, 1, c);
  u.w1 = ConvLayer{cs, &s.at(prefix + ".w1.w"), &s.at(prefix + ".w1.b")};
  u.w2 = ConvLayer{cs, &s.at(prefix + ".w2.w"), &s.at(prefix + ".w2.b")};
  u.w3 = ConvLayer{cs, &s.at(prefix + ".w3.w"), &s.at(prefix + ".w3.b")};
  if (use_bn) {
    u.n1 = bind_bn(s, prefix + ".w1.bn");
    u.n2 = bind_bn(s, prefix + ".w2.bn");
    u.n3 = bind_bn(s, prefix + ".w3.bn");
  } else {
    u.n1 = bind_ln(s, prefix + ".w1.ln", NormLayer::Kind::gln);
    u.n2 = bind_ln(s, prefix + ".w2.ln", NormLayer::Kind::gln);
    u.n3 = bind_ln(s, prefix + ".w3.ln", NormLayer::Kind::gln);
  }
  return u;
}

}  // namespace

ModelGraph build(const ModelConfig& cfg, std::shared_ptr<WeightStore> store) {
  cfg.validate();
  if (!store) throw format_error("build: null weight store");

  const auto reqs = required_tensors(cfg);
  std::set<std::string> expected;
  for (const TensorReq& req : reqs) {
    expected.insert(req.name);
    auto it = store->tensors.find(req.name);
    if (it == store->tensors.end()) {
      throw format_error("build: store is missing tensor '" + req.name + "'");
    }
    if (it->second.dims != req.dims) {
      throw format_error("build: tensor '" + req.name + "' has shape " +
                         dims_to_string(it->second.dims) + ", expected " +
                         dims_to_string(req.dims));
    }
  }
  for (const auto& [name, t] : store->tensors) {
    if (expected.count(name) == 0) {
      throw format_error("build: store holds unexpected tensor '" + name + "'");
    }
  }

  ModelGraph g;
  g.config = cfg;
  g.store = std::move(store);
  const WeightStore& s = *g.store;
  const std::int64_t ca = cfg.c_a, d = cfg.d, cv = cfg.c_v, hh = cfg.vp_hidden;
  const std::int64_t kd = cfg.unfold_kernel * d;

  g.encoder = bind_conv(s, "enc", ConvSpec::conv2d(2, ca, 3, 3, 1, 1));

  g.vp.q = cfg.vp_q;
  g.vp.proj = bind_conv(s, "vp.proj", ConvSpec::conv1d(cv, hh, 1));
  g.vp.projn = bind_bn(s, "vp.proj.bn");
  for (std::int64_t i = 0; i < cfg.vp_q; ++i) {
    const std::string p = "vp.down" + std::to_string(i);
    g.vp.down.push_back(bind_conv(s, p, ConvSpec::conv1d(hh, hh, 4, 2, 1, hh)));
    g.vp.downn.push_back(bind_bn(s, p + ".bn"));
  }
  g.vp.attn_norm = bind_bn(s, "vp.attn.norm");
  g.vp.attn.heads = cfg.vp_heads;
  g.vp.attn.q = bind_conv(s, "vp.attn.q", ConvSpec::conv1d(hh, hh, 1));
  g.vp.attn.k = bind_conv(s, "vp.attn.k", ConvSpec::conv1d(hh, hh, 1));
  g.vp.attn.v = bind_conv(s, "vp.attn.v", ConvSpec::conv1d(hh, hh, 1));
  g.vp.attn.out = bind_conv(s, "vp.attn.out", ConvSpec::conv1d(hh, hh, 1));
  g.vp.ffn_norm = bind_bn(s, "vp.ffn.norm");
  g.vp.ffn.c1 = bind_conv(s, "vp.ffn.c1", ConvSpec::conv1d(hh, cfg.vp_ffn, 1));
  g.vp.ffn.c1n = bind_bn(s, "vp.ffn.c1.bn");
  g.vp.ffn.dw = bind_conv(s, "vp.ffn.dw", ConvSpec::conv1d(cfg.vp_ffn, cfg.vp_ffn, 5, 1, 2, cfg.vp_ffn));
  g.vp.ffn.dwn = bind_bn(s, "vp.ffn.dw.bn");
  g.vp.ffn.c2 = bind_conv(s, "vp.ffn.c2", ConvSpec::conv1d(cfg.vp_ffn, hh, 1));
  for (std::int64_t u = 0; u < 2 * cfg.vp_q + 1; ++u) {
    g.vp.tfar.push_back(bind_tfar(s, "vp.tfar" + std::to_string(u), hh, /*use_bn=*/true));
  }
  g.vp.restore = bind_conv(s, "vp.restore", ConvSpec::conv1d(hh, cv, 1));

  g.caf.heads = cfg.caf_heads;
  g.caf.p1 = bind_conv(s, "caf.p1", ConvSpec::conv2d(ca, ca, 1, 1, 1, 0, ca));
  g.caf.p1n = bind_ln(s, "caf.p1.ln", NormLayer::Kind::gln);
  g.caf.p2 = bind_conv(s, "caf.p2", ConvSpec::conv2d(ca, ca, 1, 1, 1, 0, ca));
  g.caf.p2n = bind_ln(s, "caf.p2.ln", NormLayer::Kind::gln);
  g.caf.f1 = bind_conv(s, "caf.f1", ConvSpec::conv1d(cv, ca * cfg.caf_heads, 1, 1, 0, ca));
  g.caf.f1n = bind_ln(s, "caf.f1.ln", NormLayer::Kind::gln);
  g.caf.f2 = bind_conv(s, "caf.f2", ConvSpec::conv1d(cv, ca, 1, 1, 0, ca));
  g.caf.f2n = bind_ln(s, "caf.f2.ln", NormLayer::Kind::gln);

  g.rtfs.q = cfg.q;
  g.rtfs.unfold_kernel = cfg.unfold_kernel;
  g.rtfs.reduce = bind_conv(s, "rtfs.reduce", ConvSpec::conv2d(ca, d, 1, 1));
  for (std::int64_t i = 0; i < cfg.q - 1; ++i) {
    g.rtfs.down.push_back(
        bind_conv(s, "rtfs.down" + std::to_string(i), ConvSpec::conv2d(d, d, 4, 4, 2, 1, d)));
  }
  for (int path = 0; path < 2; ++path) {
    const std::string p = path == 0 ? "rtfs.freq" : "rtfs.time";
    DualPathWeights& pw = path == 0 ? g.rtfs.freq : g.rtfs.time;
    pw.ln = bind_ln(s, p + ".ln", NormLayer::Kind::cln);
    pw.sru = bind_sru(s, p + ".sru", cfg, kd);
    ConvSpec dc = ConvSpec::conv1d(2 * cfg.h_a, d, cfg.unfold_kernel);
    dc.transposed = true;
    pw.deconv = bind_conv(s, p + ".deconv", dc);
  }
  g.rtfs.attn.qk_channels = cfg.attn_qk;
  const std::int64_t dv = d / cfg.attn_heads;
  for (std::int64_t j = 0; j < cfg.attn_heads; ++j) {
    const std::string p = "rtfs.attn.h" + std::to_string(j);
    AttnHead head;
    head.q = bind_conv(s, p + ".q", ConvSpec::conv2d(d, cfg.attn_qk, 1, 1));
    head.qp = bind_prelu(s, p + ".q.p");
    head.qn = bind_ln(s, p + ".q.ln", NormLayer::Kind::cln);
    head.k = bind_conv(s, p + ".k", ConvSpec::conv2d(d, cfg.attn_qk, 1, 1));
    head.kp = bind_prelu(s, p + ".k.p");
    head.kn = bind_ln(s, p + ".k.ln", NormLayer::Kind::cln);
    head.v = bind_conv(s, p + ".v", ConvSpec::conv2d(d, dv, 1, 1));
    head.vp = bind_prelu(s, p + ".v.p");
    head.vn = bind_ln(s, p + ".v.ln", NormLayer::Kind::cln);
    g.rtfs.attn.heads.push_back(head);
  }
  g.rtfs.attn.out = bind_conv(s, "rtfs.attn.out", ConvSpec::conv2d(d, d, 1, 1));
  g.rtfs.attn.outp = bind_prelu(s, "rtfs.attn.out.p");
  g.rtfs.attn.outn = bind_ln(s, "rtfs.attn.out.ln", NormLayer::Kind::cln);
  for (std::int64_t u = 0; u < 2 * cfg.q - 1; ++u) {
    g.rtfs.tfar.push_back(bind_tfar(s, "rtfs.tfar" + std::to_string(u), d, /*use_bn=*/false));
  }
  g.rtfs.restore = bind_conv(s, "rtfs.restore", ConvSpec::conv2d(d, ca, 1, 1));

  g.mask.prelu = bind_prelu(s, "mask.p");
  g.mask.conv = bind_conv(s, "mask", ConvSpec::conv2d(ca, ca, 1, 1));

  ConvSpec dec = ConvSpec::conv2d(ca, 2, 3, 3, 1, 1);
  dec.transposed = true;
  g.decoder = bind_conv(s, "dec", dec);
  return g;
}

namespace {

template <class WT>
struct Flavor;
template <>
struct Flavor<Waveform> {
  using TensorT = Tensor;
  static Tensor lift_visual(const Tensor& v0) { return v0; }
};
template <>
struct Flavor<DualWaveform> {
  using TensorT = DualTensor;
  static DualTensor lift_visual(const Tensor& v0) { return lift(v0); }
};

std::int64_t wave_len(const Waveform& x) { return x.length(); }
std::int64_t wave_len(const DualWaveform& x) { return x.v.length(); }
int wave_rate(const Waveform& x) { return x.sample_rate; }
int wave_rate(const DualWaveform& x) { return x.v.sample_rate; }

template <class WT>
WT forward_t(const ModelGraph& g, const WT& x, const Tensor& v0) {
  using TT = typename Flavor<WT>::TensorT;
  if (wave_rate(x) != kSampleRate) {
    throw format_error("forward: sample rate " + std::to_string(wave_rate(x)) +
                       " Hz; the model runs at 16000 Hz");
  }
  const std::int64_t len = wave_len(x);
  if (len < 1) throw shape_error("forward: empty waveform");
  if (v0.rank() != 2 || v0.dim(0) != g.config.c_v) {
    throw shape_error("forward: visual features must be C_v x T_v with C_v = " +
                      std::to_string(g.config.c_v) + ", got " + dims_to_string(v0.dims));
  }

  auto spec = stft(x, g.config.window, g.config.hop);
  TT a0 = encode_audio(spec, *g.encoder.w, g.encoder.b);
  TT a = rtfs_forward(a0, g.rtfs);  // AP block
  TT v1 = vp_forward(Flavor<WT>::lift_visual(v0), g.vp);
  TT cur = caf_forward(a, v1, g.caf);
  for (std::int64_t j = 2; j <= g.config.r; ++j) {
    cur = rtfs_forward(add(cur, a0), g.rtfs);
  }
  TT m = make_mask(cur, g.mask);
  TT z = s3_apply(m, a0);
  return decode_audio(z, *g.decoder.w, g.decoder.b, g.config.window, g.config.hop, len);
}

}  // namespace

Waveform forward(const ModelGraph& g, const Waveform& x, const Tensor& v0) {
  return forward_t<Waveform>(g, x, v0);
}

DualWaveform forward(const ModelGraph& g, const DualWaveform& x, const Tensor& v0) {
  return forward_t<DualWaveform>(g, x, v0);
}

}  // namespace rtfs
