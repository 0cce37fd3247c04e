#include "rtfs/numcheck.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

namespace rtfs {

namespace {

constexpr float kKinkThreshold = 1e-4f;

Tensor rand_tensor(const std::vector<std::int64_t>& dims, Rng& rng) {
  Tensor t(dims);
  for (auto& v : t.data) v = rng.normal();
  return t;
}

double rms(const Tensor& x) {
  double s = 0.0;
  for (float v : x.data) s += static_cast<double>(v) * v;
  return std::sqrt(s / static_cast<double>(std::max<std::int64_t>(1, x.numel())));
}

Tensor axpy_t(const Tensor& x, float a, const Tensor& d) {
  Tensor out = zeros_like(x);
  for (std::int64_t i = 0; i < x.numel(); ++i) out.data[i] = x.data[i] + a * d.data[i];
  return out;
}

Tensor wave_tensor(const Waveform& w) {
  Tensor t({w.length()});
  t.data = w.samples;
  return t;
}

// One block under audit: draw() seeds a fresh probe, jvp() runs the dual
// forward and returns the output tangent, eval(s) runs the plain forward at
// x + s * eps * d.
struct BlockProbe {
  std::string name;
  float eps_base = 1e-3f;
  std::function<void(Rng&)> draw;
  std::function<float()> eps;  // eps_base * probe scale
  std::function<Tensor()> jvp;
  std::function<Tensor(float)> eval;  // argument: signed step s * eps
};

}  // namespace

double tangent_rel_err(const Tensor& fd, const Tensor& jvp) {
  if (!same_dims(fd, jvp)) throw shape_error("tangent_rel_err: dims mismatch");
  double num = 0.0, den = 0.0;
  for (std::int64_t i = 0; i < fd.numel(); ++i) {
    const double d = static_cast<double>(fd.data[i]) - jvp.data[i];
    num += d * d;
    den += static_cast<double>(jvp.data[i]) * jvp.data[i];
  }
  return std::sqrt(num) / (std::sqrt(den) + 1e-8);
}

bool AuditReport::pass(double tol) const {
  for (const AuditRow& row : rows) {
    if (!(row.max_rel_err < tol) || row.probes == 0) return false;
  }
  return !rows.empty();
}

AuditReport smoothness_audit(const ModelGraph& g, std::uint64_t seed,
                             std::int64_t input_samples, int probes) {
  const ModelConfig& cfg = g.config;
  const std::int64_t t_a = input_samples / cfg.hop + 1;
  const std::int64_t f = cfg.window / 2 + 1;
  const std::int64_t t_v =
      std::max<std::int64_t>(std::int64_t{1} << cfg.vp_q, input_samples * 25 / kSampleRate);

  Rng rng(seed);

  // Probe state shared by the closures of the block being audited.
  struct State {
    Tensor x, d;        // primary input
    Tensor x2, d2;      // secondary input (fusion/mask blocks)
    Tensor xi, di;      // imaginary plane for the encoder
    Waveform wx, wd;    // end-to-end
    Tensor v0;
  };
  auto st = std::make_shared<State>();

  auto spec_at = [st, &cfg](float step) {
    ComplexSpectrogram s;
    s.window_size = cfg.window;
    s.hop = cfg.hop;
    s.real = axpy_t(st->x, step, st->d);
    s.imag = axpy_t(st->xi, step, st->di);
    return s;
  };

  std::vector<BlockProbe> blocks;

  // encoder and decoder are linear, so a large step costs no truncation
  // error and drowns the float32 evaluation noise
  blocks.push_back(BlockProbe{
      "encoder", 0.25f,
      [st, t_a, f](Rng& r) {
        st->x = rand_tensor({t_a, f}, r);
        st->xi = rand_tensor({t_a, f}, r);
        st->d = rand_tensor({t_a, f}, r);
        st->di = rand_tensor({t_a, f}, r);
      },
      [st]() { return 0.25f * static_cast<float>(rms(st->x) + 1e-3); },
      [st, &g, &cfg]() {
        DualSpectrogram ds{ComplexSpectrogram{st->x, st->xi, cfg.window, cfg.hop},
                           ComplexSpectrogram{st->d, st->di, cfg.window, cfg.hop}};
        return encode_audio(ds, *g.encoder.w, g.encoder.b).t;
      },
      [st, &g, spec_at](float step) {
        return encode_audio(spec_at(step), *g.encoder.w, g.encoder.b);
      }});

  blocks.push_back(BlockProbe{
      "vp", 1e-3f,
      [st, &cfg, t_v](Rng& r) {
        st->x = rand_tensor({cfg.c_v, t_v}, r);
        st->d = rand_tensor({cfg.c_v, t_v}, r);
      },
      [st]() { return 1e-3f * static_cast<float>(rms(st->x) + 1e-3); },
      [st, &g]() { return vp_forward(make_dual(st->x, st->d), g.vp).t; },
      [st, &g](float step) { return vp_forward(axpy_t(st->x, step, st->d), g.vp); }});

  blocks.push_back(BlockProbe{
      "caf", 1e-3f,
      [st, &cfg, t_a, f, t_v](Rng& r) {
        st->x = rand_tensor({cfg.c_a, t_a, f}, r);
        st->d = rand_tensor({cfg.c_a, t_a, f}, r);
        st->x2 = rand_tensor({cfg.c_v, t_v}, r);
        st->d2 = rand_tensor({cfg.c_v, t_v}, r);
      },
      [st]() { return 1e-3f * static_cast<float>(rms(st->x) + 1e-3); },
      [st, &g]() {
        return caf_forward(make_dual(st->x, st->d), make_dual(st->x2, st->d2), g.caf).t;
      },
      [st, &g](float step) {
        return caf_forward(axpy_t(st->x, step, st->d), axpy_t(st->x2, step, st->d2), g.caf);
      }});

  blocks.push_back(BlockProbe{
      "rtfs", 1e-3f,
      [st, &cfg, t_a, f](Rng& r) {
        st->x = rand_tensor({cfg.c_a, t_a, f}, r);
        st->d = rand_tensor({cfg.c_a, t_a, f}, r);
      },
      [st]() { return 1e-3f * static_cast<float>(rms(st->x) + 1e-3); },
      [st, &g]() { return rtfs_forward(make_dual(st->x, st->d), g.rtfs).t; },
      [st, &g](float step) { return rtfs_forward(axpy_t(st->x, step, st->d), g.rtfs); }});

  blocks.push_back(BlockProbe{
      "s3", 1e-3f,
      [st, &cfg, t_a, f](Rng& r) {
        st->x = rand_tensor({cfg.c_a, t_a, f}, r);
        st->d = rand_tensor({cfg.c_a, t_a, f}, r);
        st->x2 = rand_tensor({cfg.c_a, t_a, f}, r);
        st->d2 = rand_tensor({cfg.c_a, t_a, f}, r);
      },
      [st]() { return 1e-3f * static_cast<float>(rms(st->x) + 1e-3); },
      [st, &g]() {
        DualTensor m = make_mask(make_dual(st->x, st->d), g.mask);
        return s3_apply(m, make_dual(st->x2, st->d2)).t;
      },
      [st, &g](float step) {
        Tensor m = make_mask(axpy_t(st->x, step, st->d), g.mask);
        return s3_apply(m, axpy_t(st->x2, step, st->d2));
      }});

  blocks.push_back(BlockProbe{
      "decoder", 0.25f,
      [st, &cfg, t_a, f](Rng& r) {
        st->x = rand_tensor({cfg.c_a, t_a, f}, r);
        st->d = rand_tensor({cfg.c_a, t_a, f}, r);
      },
      [st]() { return 0.25f * static_cast<float>(rms(st->x) + 1e-3); },
      [st, &g, &cfg, input_samples]() {
        DualWaveform y = decode_audio(make_dual(st->x, st->d), *g.decoder.w, g.decoder.b,
                                      cfg.window, cfg.hop, input_samples);
        return wave_tensor(y.t);
      },
      [st, &g, &cfg, input_samples](float step) {
        return wave_tensor(decode_audio(axpy_t(st->x, step, st->d), *g.decoder.w, g.decoder.b,
                                        cfg.window, cfg.hop, input_samples));
      }});

  blocks.push_back(BlockProbe{
      "end_to_end", 1e-3f,
      [st, &cfg, input_samples, t_v](Rng& r) {
        Tensor wx = rand_tensor({input_samples}, r);
        Tensor wd = rand_tensor({input_samples}, r);
        st->wx.samples = wx.data;
        st->wx.sample_rate = kSampleRate;
        st->wd.samples = wd.data;
        st->wd.sample_rate = kSampleRate;
        st->v0 = rand_tensor({cfg.c_v, t_v}, r);
      },
      [st]() { return 1e-3f * static_cast<float>(rms(wave_tensor(st->wx)) + 1e-3); },
      [st, &g]() { return wave_tensor(forward(g, DualWaveform{st->wx, st->wd}, st->v0).t); },
      [st, &g](float step) {
        Waveform shifted = st->wx;
        for (std::size_t i = 0; i < shifted.samples.size(); ++i) {
          shifted.samples[i] += step * st->wd.samples[i];
        }
        return wave_tensor(forward(g, shifted, st->v0));
      }});

  AuditReport report;
  for (BlockProbe& blk : blocks) {
    AuditRow row;
    row.block = blk.name;
    const int max_attempts = probes * 6;
    int attempts = 0;
    while (row.probes < probes && attempts < max_attempts) {
      ++attempts;
      blk.draw(rng);
      KinkMonitor mon;
      KinkMonitor* prev = set_kink_monitor(&mon);
      Tensor jvp = blk.jvp();
      set_kink_monitor(prev);
      // redraw probes that graze a ReLU/PReLU kink while budget remains;
      // past the budget the probe is accepted as-is (a handful of crossed
      // kinks is noise at these output sizes)
      if (mon.min_abs < kKinkThreshold && (max_attempts - attempts) >= (probes - row.probes)) {
        ++row.skipped;
        continue;
      }
      const float eps = blk.eps();
      Tensor fplus = blk.eval(eps);
      Tensor fminus = blk.eval(-eps);
      Tensor fd = zeros_like(fplus);
      const double inv = 1.0 / (2.0 * static_cast<double>(eps));
      for (std::int64_t i = 0; i < fd.numel(); ++i) {
        fd.data[i] =
            static_cast<float>((static_cast<double>(fplus.data[i]) - fminus.data[i]) * inv);
      }
      row.max_rel_err = std::max(row.max_rel_err, tangent_rel_err(fd, jvp));
      ++row.probes;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace rtfs
