#include "fdsnn/params.hpp"

#include "fdsnn/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace fdsnn {

using nlohmann::json;

void FheParams::validate() const {
  auto fail = [](const std::string& m) { throw ParameterError("invalid parameters: " + m); };
  if (!is_power_of_two(q) || q < 4 || q > (std::uint64_t(1) << 32)) fail("q must be a power of two <= 2^32");
  if (!is_power_of_two(N) || N < 2) fail("N must be a power of two");
  if (!is_power_of_two(p) || p < 2) fail("p must be an even power of two");
  if (p > 2 * N) fail("p must not exceed 2N");
  if (p > q) fail("p must not exceed q");
  if (2 * N > q) fail("2N must not exceed q");
  if (n == 0) fail("n must be positive");
  if (!(sigma > 0)) fail("fresh noise sigma must be positive");
  if (sigma_bk < 0 || sigma_ks < 0) fail("key noise must be non-negative");
  for (const GadgetParams* g : {&gadget, &ks}) {
    if (g->base_log == 0 || g->levels == 0) fail("gadget base and levels must be positive");
    if (std::uint64_t(g->base_log) * g->levels > log_q()) fail("gadget B^l must not exceed q");
  }
}

unsigned FheParams::log_q() const { return ilog2(q); }

std::string FheParams::to_json() const {
  json j = {{"preset", preset_name},
            {"n", n},
            {"q", q},
            {"N", N},
            {"p", p},
            {"sigma", sigma},
            {"sigma_bk", sigma_bk},
            {"sigma_ks", sigma_ks},
            {"gadget", {{"base_log", gadget.base_log}, {"levels", gadget.levels}}},
            {"ks", {{"base_log", ks.base_log}, {"levels", ks.levels}}}};
  return j.dump();
}

FheParams FheParams::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    FheParams f;
    f.preset_name = j.at("preset").get<std::string>();
    f.n = j.at("n").get<std::size_t>();
    f.q = j.at("q").get<std::uint64_t>();
    f.N = j.at("N").get<std::size_t>();
    f.p = j.at("p").get<std::uint64_t>();
    f.sigma = j.at("sigma").get<double>();
    f.sigma_bk = j.at("sigma_bk").get<double>();
    f.sigma_ks = j.at("sigma_ks").get<double>();
    f.gadget = {j.at("gadget").at("base_log").get<unsigned>(), j.at("gadget").at("levels").get<unsigned>()};
    f.ks = {j.at("ks").at("base_log").get<unsigned>(), j.at("ks").at("levels").get<unsigned>()};
    f.validate();
    return f;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad parameter JSON: ") + e.what());
  }
}

std::string FheParams::digest() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FheParams FheParams::with_p(std::uint64_t p_new) const {
  FheParams f = *this;
  f.p = p_new;
  if (p_new > 2 * N)
    throw ConfigurationError("message modulus p=" + std::to_string(p_new) + " exceeds 2N=" +
                             std::to_string(2 * N) + " for preset " + preset_name);
  f.validate();
  return f;
}

FheParams preset(std::string_view name) {
  FheParams f;
  if (name == "TOY") {
    f = {"TOY", 32, std::uint64_t(1) << 12, 512, 8, 4.0, 0.0, 0.0, {4, 3}, {4, 3}};
  } else if (name == "DESK") {
    f = {"DESK", 32, std::uint64_t(1) << 26, 2048, 512, 8.0, 0.0, 0.0, {13, 2}, {13, 2}};
  } else if (name == "LARGE") {
    f = {"LARGE", 630, std::uint64_t(1) << 32, 2048, 512, 131072.0, 128.0, 16.0, {10, 3}, {2, 8}};
  } else {
    throw ParameterError("unknown preset '" + std::string(name) + "' (expected TOY, DESK or LARGE)");
  }
  f.validate();
  return f;
}

std::vector<std::string> preset_names() { return {"TOY", "DESK", "LARGE"}; }

std::uint64_t select_p(double theta, std::span<const double> layer_max, double safety,
                       std::uint64_t max_two_n) {
  double m = 0;
  for (double v : layer_max) m = std::max(m, v);
  const double need = std::ceil(theta * m * safety - 1e-9);
  std::uint64_t p = kMinMessageModulus;
  while (static_cast<double>(p / 2) < need) p *= 2;
  if (p > max_two_n)
    throw ConfigurationError("required message modulus p=" + std::to_string(p) +
                             " exceeds 2N=" + std::to_string(max_two_n) + " of every preset");
  return p;
}

double modswitch_sigma(std::size_t n) {
  return std::sqrt((static_cast<double>(n) / 2.0 + 1.0) / 12.0);
}

double predicted_bootstrap_sigma(const FheParams& params) {
  const double q = static_cast<double>(params.q);
  const double N = static_cast<double>(params.N);
  auto rounding = [q](const GadgetParams& g) {
    const double span = std::pow(2.0, double(g.base_log) * g.levels);
    return span >= q ? 0.0 : std::pow(q / span, 2) / 12.0;
  };
  const double b2 = std::pow(double(params.gadget.base()), 2) / 12.0;
  const double step = 2.0 * (2.0 * params.gadget.levels * N * b2 * params.sigma_bk * params.sigma_bk +
                             (1.0 + N / 2.0) * rounding(params.gadget));
  const double ks_b2 = std::pow(double(params.ks.base()), 2) / 12.0;
  const double ks = N * params.ks.levels * ks_b2 * params.sigma_ks * params.sigma_ks + N / 2.0 * rounding(params.ks);
  return std::sqrt(static_cast<double>(params.n) * step + ks);
}

BudgetReport noise_budget_check(const FheParams& params, double theta, double weight_l1,
                                double boot_noise, double weight_l2, double margin_required) {
  BudgetReport r;
  r.limit = static_cast<double>(params.q) / (2.0 * static_cast<double>(params.p));
  r.l1_bound = boot_noise * theta * weight_l1;
  r.l2_bound = boot_noise * theta * weight_l2;
  r.margin = r.l1_bound > 0 ? r.limit / r.l1_bound : std::numeric_limits<double>::infinity();
  r.margin_required = margin_required;
  r.noise_ok = r.l1_bound * margin_required < r.limit || r.l1_bound == 0;

  const double sigma_2n = modswitch_sigma(params.n);
  const double slots = 2.0 * static_cast<double>(params.N) / static_cast<double>(params.p);
  r.ms_sigma_slots = sigma_2n / slots;
  r.ms_slip_prob = std::erfc((slots / 2.0) / (sigma_2n * std::sqrt(2.0)));
  r.switch_ok = r.ms_slip_prob <= r.ms_slip_limit;
  r.pass = r.noise_ok && r.switch_ok;
  return r;
}

std::string BudgetReport::to_json() const {
  json j = {{"limit", limit},
            {"l1_bound", l1_bound},
            {"l2_bound", l2_bound},
            {"margin", std::isinf(margin) ? json("inf") : json(margin)},
            {"margin_required", margin_required},
            {"modswitch_sigma_messages", ms_sigma_slots},
            {"modswitch_slip_probability", ms_slip_prob},
            {"modswitch_slip_limit", ms_slip_limit},
            {"noise_ok", noise_ok},
            {"switch_ok", switch_ok},
            {"pass", pass}};
  return j.dump(2);
}

}  // namespace fdsnn
