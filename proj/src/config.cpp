#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "featsim/error.hpp"
#include "featsim/harness.hpp"

namespace featsim {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<double> reals(const toml::node_view<const toml::node>& node,
                          const std::string& what) {
  std::vector<double> out;
  if (!node) return out;
  if (const auto* arr = node.as_array()) {
    for (const auto& e : *arr) {
      const auto v = e.value<double>();
      if (!v) throw ConfigError(what + " must contain numbers");
      out.push_back(*v);
    }
    return out;
  }
  if (const auto v = node.value<double>()) return {*v};
  throw ConfigError(what + " must be a number or an array of numbers");
}

std::vector<std::string> strings(const toml::node_view<const toml::node>& node,
                                 const std::string& what) {
  std::vector<std::string> out;
  if (!node) return out;
  if (const auto* arr = node.as_array()) {
    for (const auto& e : *arr) {
      const auto v = e.value<std::string>();
      if (!v) throw ConfigError(what + " must contain strings");
      out.push_back(*v);
    }
    return out;
  }
  if (const auto v = node.value<std::string>()) return {*v};
  throw ConfigError(what + " must be a string or an array of strings");
}

template <typename T>
T get_or(const toml::node_view<const toml::node>& node, T fallback,
         const std::string& what) {
  if (!node) return fallback;
  const auto v = node.value<T>();
  if (!v) throw ConfigError(what + " has the wrong type");
  return *v;
}

std::array<double, 3> three(const toml::node_view<const toml::node>& node,
                            const std::array<double, 3>& fallback,
                            const std::string& what) {
  if (!node) return fallback;
  const auto v = reals(node, what);
  if (v.size() != 3) throw ConfigError(what + " needs exactly 3 values");
  return {v[0], v[1], v[2]};
}

std::vector<ChannelPoint> parse_channel(
    const toml::node_view<const toml::node>& ch,
    const std::filesystem::path& base) {
  const std::string model = get_or<std::string>(
      ch["model"], "gilbert-elliott", "channel.model");
  std::vector<ChannelPoint> points;
  if (model == "perfect") {
    points.push_back({PerfectChannel{}, 0.0, 0.0});
  } else if (model == "iid") {
    const auto ps = reals(ch["p"], "channel.p");
    if (ps.empty()) throw ConfigError("iid channel needs channel.p");
    for (double p : ps) {
      if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("iid loss probability must lie in [0, 1]");
      points.push_back({IidChannel{p}, p, 0.0});
    }
  } else if (model == "gilbert-elliott" || model == "ge") {
    std::vector<std::pair<double, double>> pairs;
    if (const auto* arr = ch["points"].as_array()) {
      for (const auto& e : *arr) {
        const auto* pair = e.as_array();
        if (!pair || pair->size() != 2)
          throw ConfigError("channel.points entries must be [P_B, L_B]");
        const auto pb = (*pair)[0].value<double>();
        const auto lb = (*pair)[1].value<double>();
        if (!pb || !lb) throw ConfigError("channel.points must be numeric");
        pairs.emplace_back(*pb, *lb);
      }
    } else {
      const auto pbs = reals(ch["pb"], "channel.pb");
      const auto lbs = reals(ch["lb"], "channel.lb");
      if (pbs.empty() || lbs.empty())
        throw ConfigError("Gilbert-Elliott channel needs pb and lb (or points)");
      for (double pb : pbs)
        for (double lb : lbs) pairs.emplace_back(pb, lb);
    }
    for (const auto& [pb, lb] : pairs) {
      try {
        points.push_back({GilbertElliottChannel{ge_from_pb_lb(pb, lb)}, pb, lb});
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
    }
  } else if (model == "trace") {
    const auto files = strings(ch["files"], "channel.files");
    if (files.empty()) throw ConfigError("trace channel needs channel.files");
    for (std::size_t k = 0; k < files.size(); ++k)
      points.push_back({TraceChannel{resolve(base, files[k])},
                        -static_cast<double>(k + 1), 0.0});
  } else {
    throw ConfigError("unknown channel model '" + model + "'");
  }
  return points;
}

MethodConfig parse_method_table(Method method,
                                const toml::node_view<const toml::node>& t,
                                const std::filesystem::path& base) {
  MethodConfig mc;
  mc.method = method;
  const std::string p = "methods." + to_string(method);
  auto& cc = mc.completion;
  cc.iterations = get_or<int>(t["iterations"], cc.iterations, p + ".iterations");
  cc.alphas = three(t["alphas"], cc.alphas, p + ".alphas");
  const double tau = get_or<double>(t["tau"], 1.0, p + ".tau");
  for (int i = 0; i < 3; ++i) cc.silrtc_taus[i] = cc.alphas[i] * tau;
  cc.silrtc_taus = three(t["taus"], cc.silrtc_taus, p + ".taus");
  cc.halrtc_rho = get_or<double>(t["rho"], cc.halrtc_rho, p + ".rho");
  cc.tolerance = get_or<double>(t["tolerance"], cc.tolerance, p + ".tolerance");

  auto& ip = mc.inpaint;
  ip.dt = get_or<double>(t["dt"], ip.dt, p + ".dt");
  ip.sweeps = get_or<int>(t["sweeps"], ip.sweeps, p + ".sweeps");
  ip.diffusion_every =
      get_or<int>(t["diffusion_every"], ip.diffusion_every, p + ".diffusion_every");
  ip.diffusion_steps =
      get_or<int>(t["diffusion_steps"], ip.diffusion_steps, p + ".diffusion_steps");

  auto& hp = mc.harmonic;
  hp.max_iterations =
      get_or<int>(t["max_iterations"], hp.max_iterations, p + ".max_iterations");
  if (method == Method::kHarmonic)
    hp.tolerance = get_or<double>(t["tolerance"], hp.tolerance, p + ".tolerance");

  if (const auto w = t["weights"].value<std::string>())
    mc.altec_weights = resolve(base, *w);
  if (const auto d = t["train_dir"].value<std::string>())
    mc.altec_train_dir = resolve(base, *d);

  if (method == Method::kSilrtc || method == Method::kHalrtc) {
    try {
      cc.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(p + ": " + e.what());
    }
  }
  return mc;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (realizations < 1) throw ConfigError("run.realizations must be >= 1");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (points.empty()) throw ConfigError("no channel points configured");
  if (packets.rows_per_packet == 0)
    throw ConfigError("packetization.rows_per_packet must be >= 1");
  if (n_bits < 0 || n_bits > 16)
    throw ConfigError("quantization.bits must be 0 (off) or in [1, 16]");
  if (threads < 1) throw ConfigError("run.threads must be >= 1");
}

ExperimentConfig parse_config(const std::string& toml_text,
                              const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error: " << e.description() << " at line "
       << e.source().begin.line;
    throw ConfigError(os.str());
  }
  const toml::node_view<const toml::node> r{root};

  ExperimentConfig cfg;
  cfg.tensor_dir = resolve(
      base_dir, get_or<std::string>(r["tensors"]["dir"], ".", "tensors.dir"));
  if (const auto m = r["tensors"]["manifest"].value<std::string>())
    cfg.manifest = resolve(cfg.tensor_dir, *m);

  const auto rp = get_or<std::int64_t>(r["packetization"]["rows_per_packet"], 8,
                                       "packetization.rows_per_packet");
  if (rp < 1) throw ConfigError("packetization.rows_per_packet must be >= 1");
  cfg.packets.rows_per_packet = static_cast<std::size_t>(rp);
  try {
    cfg.packets.order = parse_packet_order(get_or<std::string>(
        r["packetization"]["order"], "channel-major", "packetization.order"));
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  cfg.n_bits = get_or<int>(r["quantization"]["bits"], 8, "quantization.bits");

  cfg.points = parse_channel(r["channel"], base_dir);

  if (const auto* methods = root["methods"].as_table()) {
    std::vector<MethodConfig> parsed;
    for (const auto& [name, node] : *methods) {
      Method m;
      try {
        m = parse_method(std::string(name.str()));
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
      parsed.push_back(parse_method_table(
          m, toml::node_view<const toml::node>{node}, base_dir));
    }
    std::sort(parsed.begin(), parsed.end(), [](const auto& a, const auto& b) {
      return static_cast<int>(a.method) < static_cast<int>(b.method);
    });
    cfg.methods = std::move(parsed);
  }

  const std::string mode =
      get_or<std::string>(r["run"]["mode"], "monte_carlo", "run.mode");
  if (mode == "monte_carlo" || mode == "monte-carlo") {
    cfg.mode = RunMode::kMonteCarlo;
  } else if (mode == "single_shot" || mode == "single-shot") {
    cfg.mode = RunMode::kSingleShot;
  } else {
    throw ConfigError("unknown run.mode '" + mode + "'");
  }
  cfg.realizations = get_or<int>(r["run"]["realizations"], 20, "run.realizations");
  const auto seed = get_or<std::int64_t>(r["run"]["seed"], 0, "run.seed");
  if (seed < 0) throw ConfigError("run.seed must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  if (const char* env = std::getenv("SIM_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(env, &used, 0);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("SIM_SEED is not an unsigned integer: ") +
                        env);
    }
  }
  cfg.output_dir = resolve(
      base_dir, get_or<std::string>(r["run"]["output"], "out", "run.output"));
  cfg.threads = get_or<int>(r["run"]["threads"], 1, "run.threads");
  cfg.record_timing = get_or<bool>(r["run"]["timing"], true, "run.timing");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace featsim
