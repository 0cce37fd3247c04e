#include "rtfs/cost.h"

#include <sstream>

#include <json.hpp>

#include "rtfs/ops.h"

namespace rtfs {

namespace {

// conv MACs = output elements x (C_in/groups) x kernel taps
std::int64_t conv_macs(std::int64_t out_elems, std::int64_t cin_per_group, std::int64_t ktaps) {
  return out_elems * cin_per_group * ktaps;
}

std::int64_t halved(std::int64_t len) { return (len + 2 - 4) / 2 + 1; }  // k4 s2 p1

std::int64_t vp_macs(const ModelConfig& cfg, std::int64_t t_v) {
  const std::int64_t hh = cfg.vp_hidden, ffn = cfg.vp_ffn;
  std::int64_t macs = 0;
  macs += conv_macs(hh * t_v, cfg.c_v, 1);  // proj

  std::vector<std::int64_t> lens{t_v};
  for (std::int64_t i = 0; i < cfg.vp_q; ++i) {
    lens.push_back(halved(lens.back()));
    macs += conv_macs(hh * lens.back(), 1, 4);  // depth-wise downsample
  }
  const std::int64_t n = lens.back();

  // transformer: per-head width cancels, matmul cost sums to n^2 * hidden
  macs += 4 * conv_macs(hh * n, hh, 1);  // q, k, v, out projections
  macs += n * n * hh;                    // Q^T K over all heads
  macs += n * n * hh;                    // scores x V
  macs += conv_macs(ffn * n, hh, 1);     // ffn in
  macs += conv_macs(ffn * n, 1, 5);      // ffn depth-wise
  macs += conv_macs(hh * n, ffn, 1);     // ffn out

  // TF-AR units: fuse each scale with the refined summary, then walk up
  for (std::size_t i = 0; i < lens.size(); ++i) {
    macs += conv_macs(hh * lens[i], 1, 4) + 2 * conv_macs(hh * n, 1, 4);
  }
  for (std::size_t j = lens.size() - 1; j-- > 0;) {
    macs += conv_macs(hh * lens[j], 1, 4) + 2 * conv_macs(hh * lens[j + 1], 1, 4);
  }
  macs += conv_macs(cfg.c_v * t_v, hh, 1);  // restore
  return macs;
}

std::int64_t sru_macs_per_position(const ModelConfig& cfg, std::int64_t d0) {
  std::int64_t macs = 0;
  for (std::int64_t l = 0; l < cfg.sru_layers; ++l) {
    const std::int64_t din = l == 0 ? d0 : 2 * cfg.h_a;
    std::int64_t per_dir = 3 * cfg.h_a * din;
    if (din != cfg.h_a) per_dir += cfg.h_a * din;  // highway projection
    macs += 2 * per_dir;                           // bidirectional
  }
  return macs;
}

std::int64_t rtfs_macs_per_application(const ModelConfig& cfg, std::int64_t t_a,
                                       std::int64_t f) {
  const std::int64_t d = cfg.d, k = cfg.unfold_kernel;
  std::int64_t macs = 0;
  macs += conv_macs(d * t_a * f, cfg.c_a, 1);  // channel reduce

  std::vector<std::int64_t> ts{t_a}, fs{f};
  for (std::int64_t i = 0; i < cfg.q - 1; ++i) {
    ts.push_back(halved(ts.back()));
    fs.push_back(halved(fs.back()));
    macs += conv_macs(d * ts.back() * fs.back(), 1, 16);  // depth-wise downsample
  }
  const std::int64_t tc = ts.back(), fc = fs.back();

  // frequency path then time path: SRU over every slice plus the
  // transposed conv that restores the unfolded axis
  const std::int64_t per_pos = sru_macs_per_position(cfg, k * d);
  const std::int64_t f_positions = unfold_out_len(fc, k, 1);
  macs += tc * f_positions * per_pos;
  macs += (2 * cfg.h_a) * tc * f_positions * d * k;
  const std::int64_t t_positions = unfold_out_len(tc, k, 1);
  macs += fc * t_positions * per_pos;
  macs += (2 * cfg.h_a) * fc * t_positions * d * k;

  // TF attention
  const std::int64_t dv = d / cfg.attn_heads;
  macs += cfg.attn_heads * (2 * conv_macs(cfg.attn_qk * tc * fc, d, 1) +
                            conv_macs(dv * tc * fc, d, 1));
  macs += cfg.attn_heads * tc * tc * (cfg.attn_qk * fc);  // Q^T K
  macs += cfg.attn_heads * tc * tc * (dv * fc);           // scores x V
  macs += conv_macs(d * tc * fc, d, 1);                   // head merge

  // TF-AR units
  for (std::size_t i = 0; i < ts.size(); ++i) {
    macs += conv_macs(d * ts[i] * fs[i], 1, 16) + 2 * conv_macs(d * tc * fc, 1, 16);
  }
  for (std::size_t j = ts.size() - 1; j-- > 0;) {
    macs += conv_macs(d * ts[j] * fs[j], 1, 16) +
            2 * conv_macs(d * ts[j + 1] * fs[j + 1], 1, 16);
  }

  macs += conv_macs(cfg.c_a * t_a * f, d, 1);  // channel restore
  return macs;
}

}  // namespace

CostReport count_costs(const ModelConfig& cfg, std::int64_t input_samples) {
  cfg.validate();
  if (input_samples < 1) throw shape_error("count_costs: input length must be positive");

  const std::int64_t t_a = input_samples / cfg.hop + 1;
  const std::int64_t f = cfg.window / 2 + 1;
  const std::int64_t t_v = input_samples * 25 / kSampleRate;  // 25 fps video

  CostReport rep;
  rep.input_samples = input_samples;

  // params per module from the tensor inventory (non-trainable entries,
  // i.e. batch-norm running stats, are excluded)
  std::int64_t p_enc = 0, p_vp = 0, p_caf = 0, p_rtfs = 0, p_mask = 0, p_dec = 0;
  for (const TensorReq& req : required_tensors(cfg)) {
    if (!req.trainable) continue;
    const std::int64_t n = numel_of(req.dims);
    if (req.name.rfind("enc.", 0) == 0) p_enc += n;
    else if (req.name.rfind("vp.", 0) == 0) p_vp += n;
    else if (req.name.rfind("caf.", 0) == 0) p_caf += n;
    else if (req.name.rfind("rtfs.", 0) == 0) p_rtfs += n;
    else if (req.name.rfind("mask", 0) == 0) p_mask += n;
    else if (req.name.rfind("dec.", 0) == 0) p_dec += n;
    else throw format_error("count_costs: unmapped tensor '" + req.name + "'");
  }

  const std::int64_t m_enc = conv_macs(cfg.c_a * t_a * f, 2, 9);
  const std::int64_t m_rtfs = cfg.r * rtfs_macs_per_application(cfg, t_a, f);
  const std::int64_t m_vp = t_v >= 1 ? vp_macs(cfg, t_v) : 0;
  const std::int64_t m_caf = 2 * conv_macs(cfg.c_a * t_a * f, 1, 1) +
                             conv_macs(cfg.c_a * cfg.caf_heads * t_v, cfg.c_v / cfg.c_a, 1) +
                             conv_macs(cfg.c_a * t_v, cfg.c_v / cfg.c_a, 1);
  const std::int64_t m_mask = conv_macs(cfg.c_a * t_a * f, cfg.c_a, 1);
  const std::int64_t m_dec = cfg.c_a * t_a * f * 2 * 9;  // transposed, input-based

  rep.rows = {
      {"encoder", p_enc, m_enc},  {"rtfs", p_rtfs, m_rtfs}, {"vp", p_vp, m_vp},
      {"caf", p_caf, m_caf},      {"s3", p_mask, m_mask},   {"decoder", p_dec, m_dec},
  };
  for (const CostRow& row : rep.rows) {
    rep.total_params += row.params;
    rep.total_macs += row.macs;
  }
  return rep;
}

CostReport count_params(const ModelGraph& g) {
  CostReport rep = count_costs(g.config, 2 * kSampleRate);
  for (auto& row : rep.rows) row.macs = 0;
  rep.total_macs = 0;
  return rep;
}

CostReport count_macs(const ModelGraph& g, std::int64_t input_samples) {
  return count_costs(g.config, input_samples);
}

namespace {
std::string human_m(std::int64_t v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << static_cast<double>(v) / 1e6 << " M";
  return os.str();
}
std::string human_g(std::int64_t v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << static_cast<double>(v) / 1e9 << " G";
  return os.str();
}
}  // namespace

std::string report_text(const CostReport& r) {
  std::ostringstream os;
  os << "input: " << r.input_samples << " samples @ " << r.sample_rate << " Hz ("
     << static_cast<double>(r.input_samples) / r.sample_rate << " s)\n";
  os << "module      params            MACs\n";
  for (const CostRow& row : r.rows) {
    os << row.module;
    for (std::size_t i = row.module.size(); i < 12; ++i) os << ' ';
    os << row.params << " (" << human_m(row.params) << ")  " << row.macs << " ("
       << human_g(row.macs) << ")\n";
  }
  os << "total       " << r.total_params << " (" << human_m(r.total_params) << ")  "
     << r.total_macs << " (" << human_g(r.total_macs) << ")\n";
  return os.str();
}

std::string report_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["input"] = {{"samples", r.input_samples}, {"sample_rate", r.sample_rate}};
  j["rows"] = nlohmann::ordered_json::array();
  for (const CostRow& row : r.rows) {
    j["rows"].push_back({{"module", row.module}, {"params", row.params}, {"macs", row.macs}});
  }
  j["totals"] = {{"params", r.total_params}, {"macs", r.total_macs}};
  return j.dump(2);
}

std::string report_csv(const CostReport& r) {
  std::ostringstream os;
  os << "module,params,macs\n";
  for (const CostRow& row : r.rows) {
    os << row.module << ',' << row.params << ',' << row.macs << '\n';
  }
  os << "total," << r.total_params << ',' << r.total_macs << '\n';
  return os.str();
}

CostReport report_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw format_error(std::string("report: invalid JSON: ") + e.what());
  }
  CostReport r;
  r.input_samples = j.at("input").at("samples").get<std::int64_t>();
  r.sample_rate = j.at("input").at("sample_rate").get<int>();
  for (const auto& row : j.at("rows")) {
    r.rows.push_back({row.at("module").get<std::string>(), row.at("params").get<std::int64_t>(),
                      row.at("macs").get<std::int64_t>()});
  }
  r.total_params = j.at("totals").at("params").get<std::int64_t>();
  r.total_macs = j.at("totals").at("macs").get<std::int64_t>();
  return r;
}

}  // namespace rtfs
