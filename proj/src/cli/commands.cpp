#include "commands.hpp"

#include "fdsnn/bootstrap.hpp"
#include "fdsnn/dataset.hpp"
#include "fdsnn/errors.hpp"
#include "fdsnn/network.hpp"
#include "fdsnn/oracle.hpp"
#include "fdsnn/params.hpp"
#include "fdsnn/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace fdsnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int default_workers() {
  if (const char* env = std::getenv("FDSNN_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw ParameterError(std::string("FDSNN_WORKERS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

Rng make_rng(const std::optional<std::uint64_t>& seed) { return seed ? Rng(*seed) : Rng::from_entropy(); }

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << text << "\n";
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Checks that every listed file still carries the manifest's params digest and content digest.
void verify_manifest(const std::string& path, const std::string& params_digest) {
  json m;
  try {
    m = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError("manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != "fdsnn-manifest/1") throw FormatError("manifest: unknown format");
  if (m.value("params_digest", "") != params_digest)
    throw FormatError("manifest params digest " + m.value("params_digest", "") + " does not match " + params_digest);
  const fs::path dir = fs::path(path).parent_path();
  for (const auto& [name, entry] : m.at("files").items()) {
    const std::string file = (dir / name).string();
    if (read_header(file).digest != params_digest) throw FormatError(file + ": params digest differs from manifest");
    if (file_digest(file) != entry.value("sha", "")) throw FormatError(file + ": content digest differs from manifest");
  }
}

std::vector<double> layer_max_from(const LayerStats& s) { return s.layer_max; }

double cli_boot_noise(const FheParams& params) {
  // 6-sigma bound.
  return 6.0 * std::max(params.sigma, predicted_bootstrap_sigma(params));
}

void add_keygen(CLI::App& app) {
  struct Opt {
    std::string preset = "DESK", out;
    std::uint64_t p = 0;
    std::optional<std::uint64_t> seed;
  };
  auto o = std::make_shared<Opt>();
  auto* c = app.add_subcommand("keygen", "Generate a secret key, a bootstrap key and a manifest");
  c->add_option("--preset", o->preset, "TOY, DESK or LARGE")->capture_default_str();
  c->add_option("--p", o->p, "Override the preset message modulus");
  c->add_option("--seed", o->seed, "Deterministic key generation");
  c->add_option("--out", o->out, "Output directory")->required();
  c->callback([o] {
    FheParams params = preset(o->preset);
    if (o->p) params = params.with_p(o->p);
    Rng rng = make_rng(o->seed);
    const SecretKeySet sk = gen_secret_keys(params, rng);
    const BootstrapKey bk = gen_bootstrap_key(sk, rng);
    fs::create_directories(o->out);
    const fs::path dir(o->out);
    save_secret_keys((dir / "secret.key").string(), sk);
    save_bootstrap_key((dir / "bootstrap.key").string(), bk);
    json m = {{"format", "fdsnn-manifest/1"},
              {"created", utc_now()},
              {"preset", params.preset_name},
              {"params_digest", params.digest()},
              {"params", json::parse(params.to_json())}};
    for (const char* f : {"secret.key", "bootstrap.key"})
      m["files"][f] = {{"kind", kind_name(read_header((dir / f).string()).kind)},
                       {"sha", file_digest((dir / f).string())}};
    write_text((dir / "manifest.json").string(), m.dump(2));
    std::cout << json{{"params_digest", params.digest()}, {"out", o->out}}.dump() << "\n";
  });
}

void add_encrypt(CLI::App& app) {
  struct Opt {
    std::string image, dataset, split = "test", key, out;
    std::size_t index = 0;
    int L = 1;
    std::optional<std::uint64_t> seed;
  };
  auto o = std::make_shared<Opt>();
  auto* c = app.add_subcommand("encrypt", "Encrypt an image pixel by pixel");
  auto* img = c->add_option("--image", o->image, "PGM image");
  auto* ds = c->add_option("--dataset", o->dataset, "Dataset directory (with --index)");
  img->excludes(ds);
  c->add_option("--split", o->split)->capture_default_str();
  c->add_option("--index", o->index, "Sample index in the dataset")->capture_default_str();
  c->add_option("--key", o->key, "Secret key file")->required();
  c->add_option("--L", o->L, "Pixel quantization levels")->capture_default_str();
  c->add_option("--seed", o->seed);
  c->add_option("--out", o->out)->required();
  c->callback([o] {
    if (o->image.empty() && o->dataset.empty()) throw ParameterError("encrypt needs --image or --dataset");
    const SecretKeySet sk = load_secret_keys(o->key);
    std::vector<double> px;
    Shape shape;
    int label = -1;
    if (!o->image.empty()) {
      px = load_pgm(o->image, &shape);
    } else {
      const Dataset d = load_dataset(o->dataset, o->split, o->index + 1);
      if (o->index >= d.size()) throw ParameterError("dataset index out of range");
      px = d.images[o->index];
      shape = d.shape;
      label = d.labels[o->index];
    }
    Rng rng = make_rng(o->seed);
    save_ciphertexts(o->out, encrypt_image(px, shape, o->L, sk, rng), sk.params);
    std::cout << json{{"out", o->out}, {"cells", shape.size()}, {"label", label}}.dump() << "\n";
  });
}

void add_infer(CLI::App& app) {
  struct Opt {
    std::string model, ct, bskey, out, stats, manifest;
    std::int64_t theta = 40;
    int T = 0, workers = 0;
    double margin = 2.0, safety = 1.0;
    bool force = false, serial = false;
  };
  auto o = std::make_shared<Opt>();
  auto* c = app.add_subcommand("infer", "Run the network on an encrypted image");
  c->add_option("--model", o->model)->required();
  c->add_option("--theta", o->theta)->capture_default_str();
  c->add_option("--ct", o->ct, "Encrypted image")->required();
  c->add_option("--bskey", o->bskey, "Bootstrap key file")->required();
  c->add_option("--T", o->T, "Timesteps (default: the model's T)");
  c->add_option("--workers", o->workers, "Worker threads (default: $FDSNN_WORKERS or 1)");
  c->add_option("--out", o->out, "Encrypted scores")->required();
  c->add_option("--stats", o->stats, "Layer statistics from scan-stats");
  c->add_option("--margin", o->margin, "Required noise-budget margin")->capture_default_str();
  c->add_option("--safety", o->safety, "Multiplier on the statistics maxima")->capture_default_str();
  c->add_option("--manifest", o->manifest, "Verify key files against a manifest");
  c->add_flag("--force", o->force, "Run even when the configuration check fails");
  c->add_flag("--serial", o->serial, "Use the serial reference kernels");
  c->callback([o] {
    const BootstrapKey bk = load_bootstrap_key(o->bskey);
    const FheParams& params = bk.params();
    if (!o->manifest.empty()) verify_manifest(o->manifest, params.digest());
    const CiphertextTensor x = load_ciphertexts(o->ct, nullptr, params.digest());
    const CsnnModel model = load_model(o->model);
    const DiscretizedNetwork net = discretize(model, o->theta);
    const int T = o->T > 0 ? o->T : model.T;

    json check;
    bool safe = false;
    if (o->stats.empty()) {
      check = {{"pass", false}, {"reasons", {"no --stats given; the message range cannot be verified"}}};
    } else {
      const LayerStats st = LayerStats::from_json(read_text(o->stats));
      const SafetyReport r =
          check_configuration(params, net, layer_max_from(st), cli_boot_noise(params), o->safety, o->margin);
      check = json::parse(r.to_json());
      safe = r.pass;
    }
    if (!safe && !o->force) {
      std::ostringstream os;
      os << "unsafe configuration: " << check["reasons"].dump() << " (use --force to override)";
      throw Refusal(os.str());
    }

    ExecOptions opt;
    opt.mode = o->serial ? ExecMode::Serial : ExecMode::Parallel;
    opt.workers = o->workers > 0 ? o->workers : default_workers();
    bk.reset_calls();
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<LweCiphertext> scores = infer(x, net, bk, T, opt);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    CiphertextTensor out{{static_cast<int>(scores.size()), 1, 1}, scores};
    save_ciphertexts(o->out, out, params, BlobKind::Scores);
    const json side = {{"bootstraps", bk.calls()},
                       {"expected_bootstraps", bootstrap_count(net, T)},
                       {"wall_seconds", wall},
                       {"workers", opt.workers},
                       {"mode", o->serial ? "serial" : "parallel"},
                       {"T", T},
                       {"theta", o->theta},
                       {"p", params.p},
                       {"params_digest", params.digest()},
                       {"forced", !safe},
                       {"check", check},
                       {"warnings", net.warnings}};
    write_text(o->out + ".stats.json", side.dump(2));
    std::cout << json{{"out", o->out}, {"bootstraps", bk.calls()}, {"wall_seconds", wall}}.dump() << "\n";
  });
}

void add_decrypt(CLI::App& app) {
  struct Opt {
    std::string scores, key, manifest;
  };
  auto o = std::make_shared<Opt>();
  auto* c = app.add_subcommand("decrypt", "Decrypt class scores");
  c->add_option("--scores", o->scores)->required();
  c->add_option("--key", o->key, "Secret key file")->required();
  c->add_option("--manifest", o->manifest);
  c->callback([o] {
    const SecretKeySet sk = load_secret_keys(o->key);
    if (!o->manifest.empty()) verify_manifest(o->manifest, sk.params.digest());
    const CiphertextTensor t = load_ciphertexts(o->scores, nullptr, sk.params.digest(), BlobKind::Scores);
    std::vector<std::int64_t> v;
    for (const LweCiphertext& ct : t.cells) v.push_back(lwe_decrypt(ct, sk.lwe, sk.params));
    std::cout << json{{"class", argmax_lowest(v)}, {"scores", v}}.dump() << "\n";
  });
}

void add_eval_plain(CLI::App& app) {
  struct Opt {
    std::string model, dataset, split = "test";
    std::int64_t theta = 40;
    std::size_t limit = 0;
    int workers = 0;
    bool use_float = false;
  };
  auto o = std::make_shared<Opt>();
  auto* c = app.add_subcommand("eval-plain", "Plaintext accuracy of the discretized (or float) network");
  c->add_option("--model", o->model)->required();
  c->add_option("--theta", o->theta)->capture_default_str();
  c->add_option("--dataset", o->dataset)->required();
  c->add_option("--split", o->split)->capture_default_str();
  c->add_option("--limit", o->limit, "Use the first N samples");
  c->add_option("--workers", o->workers);
  c->add_flag("--float", o->use_float, "Evaluate the float network instead");
  c->callback([o] {
    const CsnnModel model = load_model(o->model);
    const Dataset d = load_dataset(o->dataset, o->split, o->limit);
    const int w = o->workers > 0 ? o->workers : default_workers();
    json j = {{"mode", o->use_float ? "float" : "discretized"}, {"samples", d.size()}};
    AccuracyReport r;
    if (o->use_float) {
      r = accuracy_eval(model, d, w);
    } else {
      const DiscretizedNetwork net = discretize(model, o->theta);
      r = accuracy_eval(net, d, w);
      j["theta"] = o->theta;
      j["warnings"] = net.warnings;
    }
    j["correct"] = r.correct;
    j["accuracy"] = r.accuracy();
    std::cout << j.dump() << "\n";
  });
}

void add_scan_stats(CLI::App& app) {
  struct Opt {
    std::string model, dataset, split = "train", out;
    std::size_t limit = 0;
    std::int64_t theta = 0;
    int workers = 0;
  };
  auto o = std::make_shared<Opt>();
  auto* c = app.add_subcommand("scan-stats", "Per-layer input maxima and weight norms over a dataset");
  c->add_option("--model", o->model)->required();
  c->add_option("--dataset", o->dataset)->required();
  c->add_option("--split", o->split)->capture_default_str();
  c->add_option("--limit", o->limit);
  c->add_option("--theta", o->theta, "Also scan the discretized network at this theta");
  c->add_option("--workers", o->workers);
  c->add_option("--out", o->out)->required();
  c->callback([o] {
    const CsnnModel model = load_model(o->model);
    const Dataset d = load_dataset(o->dataset, o->split, o->limit);
    const int w = o->workers > 0 ? o->workers : default_workers();
    LayerStats s = scan_layer_max(model, d, w);
    s.source = o->dataset + ":" + o->split;
    if (o->theta > 0) scan_layer_max(discretize(model, o->theta), d, s, w);
    write_text(o->out, s.to_json());
    std::cout << s.to_json() << "\n";
  });
}

void add_estimate_params(CLI::App& app) {
  struct Opt {
    std::string stats, preset = "DESK";
    double theta = 40, safety = 1.0, margin = 2.0, boot_noise = -1;
  };
  auto o = std::make_shared<Opt>();
  auto* c = app.add_subcommand("estimate-params", "Recommend p and report noise-budget margins");
  c->add_option("--theta", o->theta)->capture_default_str();
  c->add_option("--stats", o->stats)->required();
  c->add_option("--preset", o->preset)->capture_default_str();
  c->add_option("--safety", o->safety)->capture_default_str();
  c->add_option("--margin", o->margin)->capture_default_str();
  c->add_option("--boot-noise", o->boot_noise, "Noise bound in q units (default: 6 sigma estimate)");
  c->callback([o] {
    const LayerStats s = LayerStats::from_json(read_text(o->stats));
    const FheParams base = preset(o->preset);
    const std::uint64_t p = select_p(o->theta, s.layer_max, o->safety, 2 * base.N);
    const FheParams params = base.with_p(p);
    double wl1 = 0;
    std::string basis;
    if (s.theta == static_cast<std::int64_t>(o->theta) && !s.weight_l1_hat.empty()) {
      for (double x : s.weight_l1_hat) wl1 = std::max(wl1, x / o->theta);
      basis = "discretized max sum|w_hat| / theta";
    } else {
      for (double x : s.weight_l1) wl1 = std::max(wl1, x);
      basis = "float max sum|w|";
    }
    const double noise = o->boot_noise >= 0 ? o->boot_noise : cli_boot_noise(params);
    const BudgetReport b = noise_budget_check(params, o->theta, wl1, noise, 0.0, o->margin);
    std::cout << json{{"preset", params.preset_name},
                      {"p", p},
                      {"required_half", std::ceil(o->theta * *std::max_element(s.layer_max.begin(), s.layer_max.end()) *
                                                  o->safety - 1e-9)},
                      {"weight_l1", wl1},
                      {"weight_l1_basis", basis},
                      {"boot_noise", noise},
                      {"budget", json::parse(b.to_json())}}
                     .dump(2)
              << "\n";
  });
}

void add_bench(CLI::App& app) {
  struct Opt {
    std::string preset = "DESK";
    int count = 16;
    std::vector<int> workers{1, 2, 4};
    std::uint64_t seed = 1;
  };
  auto o = std::make_shared<Opt>();
  auto* c = app.add_subcommand("bench", "Bootstrap latency and throughput against worker count");
  c->add_option("--preset", o->preset)->capture_default_str();
  c->add_option("--count", o->count, "Bootstraps per measurement")->capture_default_str();
  c->add_option("--workers", o->workers, "Worker counts to try")->delimiter(',');
  c->add_option("--seed", o->seed)->capture_default_str();
  c->callback([o] {
    const FheParams params = preset(o->preset);
    Rng rng(o->seed);
    const SecretKeySet sk = gen_secret_keys(params, rng);
    const BootstrapKey bk = gen_bootstrap_key(sk, rng);
    const ProgramFunction g = g_fire(params.p);
    std::vector<LweCiphertext> in;
    for (int i = 0; i < o->count; ++i) in.push_back(lwe_encrypt(i % 3 - 1, sk.lwe, params, rng));
    std::vector<LweCiphertext> out(in.size());
    bootstrap(g, in[0], bk);  // warm-up: FFT plans and scratch buffers
    json rows = json::array();
    for (int w : o->workers) {
      const auto t0 = std::chrono::steady_clock::now();
      const long long n = static_cast<long long>(in.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, w))
      for (long long i = 0; i < n; ++i) out[i] = bootstrap(g, in[i], bk);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back({{"workers", w}, {"seconds", s}, {"ms_per_bootstrap", 1e3 * s / n}, {"throughput_per_s", n / s}});
    }
    std::cout << json{{"preset", params.preset_name}, {"count", o->count}, {"runs", rows}}.dump(2) << "\n";
  });
}

}  // namespace

void register_commands(CLI::App& app) {
  add_keygen(app);
  add_encrypt(app);
  add_infer(app);
  add_decrypt(app);
  add_eval_plain(app);
  add_scan_stats(app);
  add_estimate_params(app);
  add_bench(app);
}

}  // namespace fdsnn::cli
