// Command-line front end: separate / analyze / metrics / selftest /
// init-weights. Exit codes: 0 success, 2 usage error, 3 I/O or format
// error, 4 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtfs/cost.h"
#include "rtfs/metrics.h"
#include "rtfs/model.h"
#include "rtfs/numcheck.h"
#include "rtfs/s3.h"
#include "rtfs/wav_io.h"
#include "rtfs/weights_io.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw rtfs::io_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

rtfs::ModelConfig make_config(const std::string& config_path,
                              const std::vector<std::string>& overrides) {
  rtfs::ModelConfig cfg;
  if (!config_path.empty()) cfg = rtfs::config_from_json(read_text_file(config_path));
  for (const std::string& kv : overrides) rtfs::config_set(cfg, kv);
  cfg.validate();
  return cfg;
}

int run_separate(const std::string& mix_path, const std::string& visual_path,
                 const std::string& weights_path, const std::string& out_path,
                 const std::string& config_path, const std::vector<std::string>& overrides) {
  rtfs::WeightStore store = rtfs::load_weights(weights_path);
  rtfs::ModelConfig cfg = store.config;
  if (!config_path.empty()) cfg = rtfs::config_from_json(read_text_file(config_path));
  for (const std::string& kv : overrides) rtfs::config_set(cfg, kv);
  cfg.validate();

  rtfs::RawContainer visual = rtfs::load_container(visual_path);
  auto it = visual.tensors.find("v0");
  if (it == visual.tensors.end()) {
    throw rtfs::format_error("visual container '" + visual_path + "' is missing tensor 'v0'");
  }

  rtfs::Waveform mix = rtfs::read_wav(mix_path);
  auto graph = rtfs::build(cfg, std::make_shared<rtfs::WeightStore>(std::move(store)));
  rtfs::Waveform out = rtfs::forward(graph, mix, it->second);
  rtfs::write_wav(out_path, out);
  std::cout << "wrote " << out.samples.size() << " samples to " << out_path << "\n";
  return kExitOk;
}

int run_analyze(const std::string& config_path, const std::vector<std::string>& overrides,
                double seconds, const std::string& format) {
  rtfs::ModelConfig cfg = make_config(config_path, overrides);
  const auto samples = static_cast<std::int64_t>(seconds * rtfs::kSampleRate);
  rtfs::CostReport rep = rtfs::count_costs(cfg, samples);
  if (format == "text") {
    std::cout << rtfs::report_text(rep);
  } else if (format == "json") {
    std::cout << rtfs::report_json(rep) << "\n";
  } else if (format == "csv") {
    std::cout << rtfs::report_csv(rep);
  } else {
    throw CLI::ValidationError("--format must be text, json or csv");
  }
  return kExitOk;
}

int run_metrics(const std::string& mix_path, const std::string& ref_path,
                const std::string& est_path) {
  rtfs::Waveform mix = rtfs::read_wav(mix_path);
  rtfs::Waveform ref = rtfs::read_wav(ref_path);
  rtfs::Waveform est = rtfs::read_wav(est_path);
  rtfs::MetricResult m = rtfs::improvements(mix.samples, ref.samples, est.samples);
  std::cout << rtfs::metrics_to_json(m) << "\n";
  return kExitOk;
}

int run_init_weights(const std::string& config_path, const std::vector<std::string>& overrides,
                     std::uint64_t seed, const std::string& out_path,
                     const std::string& visual_out, std::int64_t visual_frames) {
  rtfs::ModelConfig cfg = make_config(config_path, overrides);
  rtfs::WeightStore store = rtfs::init_random(cfg, seed);
  rtfs::save_weights(store, out_path);
  std::cout << "wrote " << store.tensors.size() << " tensors to " << out_path << "\n";
  if (!visual_out.empty()) {
    rtfs::Rng rng(seed + 1);
    rtfs::Tensor v0({cfg.c_v, visual_frames});
    for (auto& v : v0.data) v = rng.normal();
    std::map<std::string, rtfs::Tensor> tensors;
    tensors.emplace("v0", std::move(v0));
    rtfs::save_container(tensors, visual_out);
    std::cout << "wrote v0 [" << cfg.c_v << " x " << visual_frames << "] to " << visual_out
              << "\n";
  }
  return kExitOk;
}

bool report_check(const char* name, bool ok) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
  return ok;
}

int run_selftest(std::uint64_t seed) {
  using rtfs::Tensor;
  bool all = true;

  {  // STFT round trip on seeded noise
    rtfs::Rng rng(seed);
    rtfs::Waveform x;
    x.samples.resize(2 * rtfs::kSampleRate);
    for (auto& v : x.samples) v = rng.uniform_pm(1.0f);
    rtfs::Waveform y = rtfs::istft(rtfs::stft(x), x.length());
    double err = 0.0;
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
      const double d = static_cast<double>(x.samples[i]) - y.samples[i];
      err += d * d;
    }
    err = std::sqrt(err / static_cast<double>(x.samples.size()));
    all &= report_check("stft round trip (rms < 1e-6)", err < 1e-6);
  }

  {  // S3 complex-multiplication oracle
    rtfs::Rng rng(seed + 1);
    Tensor m({4, 3, 5}), a({4, 3, 5});
    for (auto& v : m.data) v = rng.normal();
    for (auto& v : a.data) v = rng.normal();
    Tensor z = rtfs::s3_apply(m, a);
    double max_diff = 0.0;
    const std::int64_t half = 2, plane = 15;
    for (std::int64_t c = 0; c < half; ++c) {
      for (std::int64_t i = 0; i < plane; ++i) {
        const float mr = m.data[c * plane + i], mi = m.data[(c + half) * plane + i];
        const float er = a.data[c * plane + i], ei = a.data[(c + half) * plane + i];
        max_diff = std::max(max_diff,
                            std::abs(static_cast<double>(z.data[c * plane + i]) - (mr * er - mi * ei)));
        max_diff = std::max(max_diff, std::abs(static_cast<double>(z.data[(c + half) * plane + i]) -
                                               (mr * ei + mi * er)));
      }
    }
    all &= report_check("s3 complex oracle (<= 1e-6)", max_diff <= 1e-6);
  }

  rtfs::ModelConfig cfg;  // defaults
  auto graph = rtfs::build(cfg, std::make_shared<rtfs::WeightStore>(rtfs::init_random(cfg, seed)));

  {  // shapes + determinism on a short input
    rtfs::Rng rng(seed + 2);
    rtfs::Waveform x;
    x.samples.resize(8000);
    for (auto& v : x.samples) v = rng.uniform_pm(0.5f);
    Tensor v0({cfg.c_v, 16});
    for (auto& v : v0.data) v = rng.normal();
    rtfs::Waveform y1 = rtfs::forward(graph, x, v0);
    rtfs::Waveform y2 = rtfs::forward(graph, x, v0);
    all &= report_check("forward output length == input length", y1.length() == x.length());
    all &= report_check("forward determinism (bit identical)", y1.samples == y2.samples);
  }

  {  // smoothness audit (one probe per block at this entry point)
    rtfs::AuditReport rep = rtfs::smoothness_audit(graph, seed, 8000, 1);
    for (const rtfs::AuditRow& row : rep.rows) {
      std::ostringstream os;
      os << "jvp vs finite differences: " << row.block << " (rel err " << row.max_rel_err
         << ")";
      all &= report_check(os.str().c_str(), row.max_rel_err < rep.threshold && row.probes > 0);
    }
  }

  if (!all) throw rtfs::numeric_error("selftest failed");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RTFS-Net inference engine, cost analyzer and toolchain"};
  app.require_subcommand(1);

  std::string mix, visual, weights, out, config, ref, est, format = "text", visual_out;
  std::vector<std::string> overrides;
  double seconds = 2.0;
  std::uint64_t seed = 0;
  std::int64_t visual_frames = 50;

  CLI::App* sep = app.add_subcommand("separate", "extract the target speaker from a mixture");
  sep->add_option("--mix", mix, "mixture WAV (16 kHz mono)")->required();
  sep->add_option("--visual", visual, "visual feature container holding tensor 'v0'")->required();
  sep->add_option("--weights", weights, "weight container")->required();
  sep->add_option("--out", out, "output WAV path")->required();
  sep->add_option("--config", config, "JSON config overriding the embedded one");
  sep->add_option("--set", overrides, "config override key=value (repeatable)");

  CLI::App* ana = app.add_subcommand("analyze", "parameter and MAC ledger for a config");
  ana->add_option("--config", config, "JSON config (defaults when omitted)");
  ana->add_option("--set", overrides, "config override key=value (repeatable)");
  ana->add_option("--seconds", seconds, "input duration in seconds")->default_val(2.0);
  ana->add_option("--format", format, "text | json | csv")->default_val("text");

  CLI::App* met = app.add_subcommand("metrics", "SI-SNR(i)/SDR(i) of an estimate");
  met->add_option("--mix", mix, "mixture WAV")->required();
  met->add_option("--ref", ref, "reference WAV")->required();
  met->add_option("--est", est, "estimate WAV")->required();

  CLI::App* self = app.add_subcommand("selftest", "run the built-in invariant suite");
  self->add_option("--seed", seed, "probe seed")->default_val(0);

  CLI::App* init = app.add_subcommand("init-weights", "write a seeded random weight container");
  init->add_option("--config", config, "JSON config (defaults when omitted)");
  init->add_option("--set", overrides, "config override key=value (repeatable)");
  init->add_option("--seed", seed, "init seed")->default_val(0);
  init->add_option("--out", out, "output container path")->required();
  init->add_option("--visual-out", visual_out, "also write a random visual container here");
  init->add_option("--visual-frames", visual_frames, "frames in the visual container")
      ->default_val(50);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sep->parsed()) return run_separate(mix, visual, weights, out, config, overrides);
    if (ana->parsed()) return run_analyze(config, overrides, seconds, format);
    if (met->parsed()) return run_metrics(mix, ref, est);
    if (self->parsed()) return run_selftest(seed);
    if (init->parsed()) {
      return run_init_weights(config, overrides, seed, out, visual_out, visual_frames);
    }
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rtfs::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const rtfs::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const rtfs::format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const rtfs::shape_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
