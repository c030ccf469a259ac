/* Copyright 2026 The clexkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "clex/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "clex/checkpoint.hpp"
#include "clex/errors.hpp"
#include "clex/pe_scaling.hpp"
#include "clex/report.hpp"

namespace clex::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kResolvedConfig = "config.resolved.json";
constexpr const char* kCheckpointFile = "model.ckpt";
constexpr const char* kSidecarFile = "model_config.json";

const char* const kModelKeys[] = {"vocab",     "n_layers",  "n_heads",   "d_model",
                                  "train_len", "method",    "t_train",   "t_fixed",
                                  "rope_base", "ode_lambda", "xi_form",  "steps_per_unit",
                                  "precision"};

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

// Checks that v can stand in for a key whose default is def.
bool type_compatible(const ordered_json& def, const json& v) {
  if (def.is_number_float()) return v.is_number();
  if (def.is_number_integer()) return v.is_number_integer() && v.get<long long>() >= 0;
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    for (const auto& e : v) {
      if (!(e.is_number() || e.is_string())) return false;
    }
    return true;
  }
  return false;
}

template <typename T>
T get(const ordered_json& values, const char* key) {
  return values.at(key).get<T>();
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

fs::path make_run_dir(const std::string& out_flag, const RunConfig& cfg,
                      const std::string& label) {
  fs::path dir;
  if (!out_flag.empty()) {
    dir = out_flag;
  } else {
    fs::path root = get<std::string>(cfg.values(), "output_dir");
    if (root.empty()) {
      const char* env = std::getenv(kOutputRootEnv);
      root = env && *env ? env : "runs";
    }
    const fs::path stem = root / (label + "-" + timestamp());
    dir = stem;
    for (int k = 1; fs::exists(dir); ++k) {
      dir = stem.string() + "-" + std::to_string(k);
    }
  }
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc | std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  os << text;
}

ordered_json run_meta(const RunConfig& cfg, const std::string& command) {
  ordered_json m;
  m["command"] = command;
  m["seed"] = cfg.values().at("seed");
  m["commit"] = std::string(build_commit());
  m["config_hash"] = cfg.config_hash();
  m["model_hash"] = cfg.model_hash();
  m["xi_form"] = cfg.values().at("xi_form");
  m["precision"] = cfg.values().at("precision");
  return m;
}

template <typename T>
void save_trained(const fs::path& dir, const TrainedModel<T>& model,
                  const RunConfig& cfg) {
  save_checkpoint<T>(dir / kCheckpointFile, model.named());
  ordered_json side;
  side["model"] = cfg.model_fields();
  side["model_hash"] = cfg.model_hash();
  write_text(dir / kSidecarFile, side.dump(2) + "\n");
}

void write_loss_csv(const fs::path& path, const std::vector<LossRecord>& trace) {
  std::ostringstream os;
  os << "step,t_prime,loss\n";
  char buf[96];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.8f\n", r.step, r.t_prime, r.loss);
    os << buf;
  }
  write_text(path, os.str());
}

void write_report(const fs::path& dir, const EvalReport& report,
                  const ordered_json& meta) {
  std::ostringstream csv;
  write_report_csv(report, csv);
  write_text(dir / "report.csv", csv.str());
  write_text(dir / "report.json", report_json(report, meta).dump(2) + "\n");
}

std::string breakpoint_summary(const EvalReport& report) {
  std::ostringstream os;
  std::size_t max_len = 0;
  for (const auto& r : report.rows) max_len = std::max(max_len, r.eval_len);
  os << "extrapolation breakpoint (ppl > 2x train-length ppl):\n";
  for (const auto& [method, len] : extrapolation_breakpoints(report)) {
    os << "  " << method << ": ";
    if (len) {
      os << "eval_len " << *len << '\n';
    } else {
      os << "none up to " << max_len << '\n';
    }
  }
  return os.str();
}

fs::path resolve_checkpoint(const fs::path& p) {
  if (fs::is_directory(p)) return p / kCheckpointFile;
  return p;
}

// Fails with CompatibilityError when the checkpoint's sidecar was written for
// a different model layout than cfg describes.
void check_compatible(const fs::path& ckpt, const RunConfig& cfg) {
  const fs::path side_path = ckpt.parent_path() / kSidecarFile;
  std::ifstream is(side_path);
  if (!is) throw InputError("checkpoint sidecar not found: " + side_path.string());
  json side;
  try {
    side = json::parse(is);
  } catch (const json::exception& e) {
    throw InputError("malformed checkpoint sidecar: " + std::string(e.what()));
  }
  if (side.value("model_hash", "") == cfg.model_hash()) return;
  std::string diff;
  const auto mine = cfg.model_fields();
  const auto theirs = side.value("model", json::object());
  for (const auto& [key, val] : mine.items()) {
    if (!theirs.contains(key) || json(theirs.at(key)) != json(val)) {
      diff += " " + key + " (config " + val.dump() + ", checkpoint " +
              (theirs.contains(key) ? theirs.at(key).dump() : "missing") + ")";
    }
  }
  throw CompatibilityError("config does not match checkpoint:" +
                           (diff.empty() ? std::string(" hash differs") : diff));
}

template <typename T>
TrainedModel<T> load_trained(const fs::path& ckpt, const RunConfig& cfg) {
  auto model = init_model<T>(cfg.train_options());
  auto named = model.named();
  const auto entries = load_checkpoint(ckpt);
  if (entries.size() != named.size()) {
    throw CompatibilityError("checkpoint holds " + std::to_string(entries.size()) +
                             " arrays, model expects " + std::to_string(named.size()));
  }
  for (std::size_t k = 0; k < named.size(); ++k) {
    if (entries[k].name != named[k].first) {
      throw CompatibilityError("checkpoint array " + entries[k].name +
                               " where " + named[k].first + " was expected");
    }
    assign_entry(entries[k], named[k].second);
  }
  return model;
}

template <typename T>
int do_train(const RunConfig& cfg, const std::string& out_flag, std::ostream& out,
             std::ostream& err) {
  const auto opts = cfg.train_options();
  const auto corpus = load_corpus(get<std::string>(cfg.values(), "corpus"),
                                  get<double>(cfg.values(), "split"));
  const fs::path dir =
      make_run_dir(out_flag, cfg, "train-" + get<std::string>(cfg.values(), "method"));
  write_text(dir / kResolvedConfig, cfg.values().dump(2) + "\n");
  const std::size_t every = get<std::size_t>(cfg.values(), "log_every");
  auto result = train<T>(opts, corpus, [&](const LossRecord& r) {
    if (every && r.step % every == 0) {
      err << "step " << r.step << " t'=" << fixed6(r.t_prime)
          << " loss=" << fixed6(r.loss) << '\n';
    }
  });
  save_trained(dir, result.model, cfg);
  write_loss_csv(dir / "loss.csv", result.trace);
  out << dir.string() << '\n';
  return kOk;
}

template <typename T>
int do_eval(const RunConfig& cfg, const fs::path& ckpt_arg, const std::string& out_flag,
            std::ostream& out) {
  const fs::path ckpt = resolve_checkpoint(ckpt_arg);
  if (!fs::exists(ckpt)) throw InputError("checkpoint not found: " + ckpt.string());
  check_compatible(ckpt, cfg);
  const auto model = load_trained<T>(ckpt, cfg);
  const auto corpus = load_corpus(get<std::string>(cfg.values(), "corpus"),
                                  get<double>(cfg.values(), "split"));
  const auto report = evaluate(model, corpus, cfg.eval_options());
  const fs::path dir =
      make_run_dir(out_flag, cfg, "eval-" + get<std::string>(cfg.values(), "method"));
  write_text(dir / kResolvedConfig, cfg.values().dump(2) + "\n");
  write_report(dir, report, run_meta(cfg, "eval"));
  out << format_report_table(report);
  out << dir.string() << '\n';
  return kOk;
}

template <typename T>
int do_compare(const RunConfig& cfg, const std::string& out_flag, std::ostream& out,
               std::ostream& err) {
  const auto configs = cfg.compare_options();
  const auto corpus = load_corpus(get<std::string>(cfg.values(), "corpus"),
                                  get<double>(cfg.values(), "split"));
  const fs::path dir = make_run_dir(out_flag, cfg, "compare");
  write_text(dir / kResolvedConfig, cfg.values().dump(2) + "\n");
  const auto report = compare<T>(
      configs, corpus, cfg.eval_options(),
      [&](const TrainOptions& o, const TrainResult<T>& r) {
        const std::string name(method_name(o.model.method));
        auto sub = cfg.values();
        sub["method"] = name;
        const auto sub_cfg = RunConfig::from_json(sub);
        const fs::path mdir = dir / name;
        fs::create_directories(mdir);
        save_trained(mdir, r.model, sub_cfg);
        write_loss_csv(mdir / "loss.csv", r.trace);
        err << "trained " << name << " (final loss " << fixed6(r.trace.back().loss)
            << ")\n";
      });
  write_report(dir, report, run_meta(cfg, "compare"));
  const std::string summary = format_report_table(report) + breakpoint_summary(report);
  write_text(dir / "summary.txt", summary);
  out << summary << dir.string() << '\n';
  return kOk;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct BasisArgs {
  std::size_t d = 0;
  std::string methods = "rope,pi,yarn,codellama,clex";
  std::string ts = "1,2,4,8,16";
  std::string checkpoint;
  std::string xi_form = "log_derivative";
  int steps_per_unit = 8;
  double base = 10000.0;
  std::string out;
};

int do_basis(const BasisArgs& a, std::ostream& out) {
  if (a.d < 2 || a.d % 2 != 0) {
    throw DomainError("head dimension must be even and >= 2, got " + std::to_string(a.d));
  }
  const auto base = default_basis(a.d, a.base);
  const auto ts = parse_number_list(a.ts);
  const auto methods = parse_name_list(a.methods);
  XiForm form = parse_xi_form(a.xi_form);
  int spu = a.steps_per_unit;
  std::optional<OdeNet<double>> net;
  for (const auto& m : methods) {
    const Method method = parse_method(m);
    if (method == Method::RandomPos) {
      throw InputError("randompos does not rescale the frequency basis");
    }
    if (method == Method::Clex && !net) {
      if (a.checkpoint.empty()) {
        net = OdeNet<double>::zeros(a.d, 1);
      } else {
        const fs::path ckpt = resolve_checkpoint(a.checkpoint);
        auto cfg = RunConfig::load(ckpt.parent_path() / kResolvedConfig);
        if (cfg.train_options().model.d_head() != a.d) {
          throw CompatibilityError("checkpoint head dimension " +
                                   std::to_string(cfg.train_options().model.d_head()) +
                                   " differs from --d " + std::to_string(a.d));
        }
        form = parse_xi_form(get<std::string>(cfg.values(), "xi_form"));
        spu = get<int>(cfg.values(), "steps_per_unit");
        auto o = cfg.train_options();
        o.model.method = Method::Clex;
        net = OdeNet<double>::zeros(a.d, o.model.ode_lambda);
        bool found_up = false, found_down = false;
        for (const auto& e : load_checkpoint(ckpt)) {
          if (e.name == "ode.w_up") {
            assign_entry(e, net->w_up);
            found_up = true;
          } else if (e.name == "ode.w_down") {
            assign_entry(e, net->w_down);
            found_down = true;
          }
        }
        if (!found_up || !found_down) {
          throw CompatibilityError("checkpoint has no ODE network (not a CLEX model)");
        }
      }
    }
  }
  std::ostringstream os;
  os << "method,t,i,theta_i\n";
  char buf[128];
  for (const auto& m : methods) {
    const Method method = parse_method(m);
    for (double t : ts) {
      const ScaleFactor sf(t);
      FrequencyBasis scaled = base;
      switch (method) {
        case Method::Rope: break;
        case Method::PI: scaled = scale_basis(base, alpha_pi(sf, a.d)); break;
        case Method::Yarn: scaled = scale_basis(base, alpha_yarn(sf, a.d)); break;
        case Method::CodeLlama: scaled = scale_basis(base, alpha_codellama(a.d)); break;
        case Method::Clex:
          scaled = solve(LogBasis::of(base), t, *net, form, spu).exp();
          break;
        case Method::RandomPos: break;
      }
      for (std::size_t i = 0; i < scaled.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%.12e\n", m.c_str(),
                      fixed6(t).c_str(), i, scaled[i]);
        os << buf;
      }
    }
  }
  if (a.out.empty()) {
    out << os.str();
  } else {
    write_text(a.out, os.str());
  }
  return kOk;
}

}  // namespace

const ordered_json& RunConfig::defaults() {
  static const ordered_json d = [] {
    ordered_json j;
    j["corpus"] = "";
    j["split"] = 0.9;
    j["method"] = "clex";
    j["methods"] = ordered_json::array();
    j["precision"] = "f32";
    j["seed"] = 0;
    j["vocab"] = 256;
    j["n_layers"] = 2;
    j["n_heads"] = 4;
    j["d_model"] = 64;
    j["train_len"] = 128;
    j["t_train"] = 8.0;
    j["t_fixed"] = 4.0;
    j["rope_base"] = 10000.0;
    j["ode_lambda"] = 1;
    j["xi_form"] = "log_derivative";
    j["steps_per_unit"] = 8;
    j["position_mode"] = "random";
    j["lr"] = 3e-4;
    j["beta1"] = 0.9;
    j["beta2"] = 0.95;
    j["eps"] = 1e-8;
    j["grad_clip"] = 1.0;
    j["steps"] = 1000;
    j["batch_size"] = 8;
    j["log_every"] = 0;
    j["cache_t_ks"] = {1.0, 2.0, 4.0, 8.0};
    j["eval_lens"] = {128, 256, 512, 1024};
    j["log_scaling"] = true;
    j["eval_batch"] = 4;
    j["max_eval_tokens"] = 0;
    j["memory_budget_mb"] = 2048.0;
    j["output_dir"] = "";
    return j;
  }();
  return d;
}

RunConfig RunConfig::from_json(const json& doc, const std::vector<std::string>& overrides) {
  if (!doc.is_object()) throw InputError("config must be a JSON object");
  RunConfig cfg;
  cfg.values_ = defaults();
  auto set = [&cfg](const std::string& key, const json& v) {
    if (!cfg.values_.contains(key)) throw InputError("unknown config key '" + key + "'");
    const auto& def = defaults().at(key);
    if (!type_compatible(def, v)) {
      throw InputError("config key '" + key + "' has the wrong type: " + v.dump());
    }
    if (def.is_number_float()) {
      cfg.values_[key] = v.get<double>();
    } else {
      cfg.values_[key] = v;
    }
  };
  for (const auto& [key, v] : doc.items()) set(key, v);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InputError("override must look like key=value, got '" + o + "'");
    }
    set(o.substr(0, eq), parse_override_value(o.substr(eq + 1)));
  }
  // Surface bad enum values and dimensions now rather than mid-run.
  cfg.train_options().model.validate();
  (void)cfg.compare_options();
  (void)cfg.eval_options();
  const auto prec = get<std::string>(cfg.values_, "precision");
  if (prec != "f32" && prec != "f64") {
    throw InputError("precision must be f32 or f64, got '" + prec + "'");
  }
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw InputError("config not found: " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw InputError("malformed config " + path.string() + ": " + e.what());
  }
  return from_json(doc, overrides);
}

TrainOptions RunConfig::train_options() const {
  const auto& v = values_;
  TrainOptions o;
  o.model.vocab = get<std::size_t>(v, "vocab");
  o.model.n_layers = get<std::size_t>(v, "n_layers");
  o.model.n_heads = get<std::size_t>(v, "n_heads");
  o.model.d_model = get<std::size_t>(v, "d_model");
  o.model.train_len = get<std::size_t>(v, "train_len");
  o.model.method = parse_method(get<std::string>(v, "method"));
  o.model.t_train = get<double>(v, "t_train");
  o.model.t_fixed = get<double>(v, "t_fixed");
  o.model.rope_base = get<double>(v, "rope_base");
  o.model.ode_lambda = get<std::size_t>(v, "ode_lambda");
  o.model.seed = get<std::uint64_t>(v, "seed");
  o.adam.lr = get<double>(v, "lr");
  o.adam.beta1 = get<double>(v, "beta1");
  o.adam.beta2 = get<double>(v, "beta2");
  o.adam.eps = get<double>(v, "eps");
  o.grad_clip = get<double>(v, "grad_clip");
  o.steps = get<std::size_t>(v, "steps");
  o.batch_size = get<std::size_t>(v, "batch_size");
  o.xi_form = parse_xi_form(get<std::string>(v, "xi_form"));
  o.steps_per_unit = get<int>(v, "steps_per_unit");
  o.position_mode = parse_position_mode(get<std::string>(v, "position_mode"));
  o.log_every = get<std::size_t>(v, "log_every");
  if (o.steps_per_unit < 1) throw InputError("steps_per_unit must be >= 1");
  if (o.batch_size == 0) throw InputError("batch_size must be >= 1");
  return o;
}

std::vector<TrainOptions> RunConfig::compare_options() const {
  const auto& methods = values_.at("methods");
  if (methods.empty()) return {train_options()};
  std::vector<TrainOptions> out;
  for (const auto& m : methods) {
    if (!m.is_string()) throw InputError("methods must be a list of method names");
    auto o = train_options();
    o.model.method = parse_method(m.get<std::string>());
    o.model.validate();
    out.push_back(o);
  }
  return out;
}

EvalOptions RunConfig::eval_options() const {
  const auto& v = values_;
  EvalOptions e;
  e.eval_lens.clear();
  for (const auto& x : v.at("eval_lens")) {
    if (!x.is_number_integer() || x.get<long long>() < 2) {
      throw InputError("eval_lens entries must be integers >= 2");
    }
    e.eval_lens.push_back(x.get<std::size_t>());
  }
  e.cache_t_ks.clear();
  for (const auto& x : v.at("cache_t_ks")) {
    if (!x.is_number()) throw InputError("cache_t_ks entries must be numbers");
    e.cache_t_ks.push_back(x.get<double>());
  }
  if (e.cache_t_ks.empty() || e.cache_t_ks.front() < 1.0) {
    throw InputError("cache_t_ks must be nonempty and start at >= 1");
  }
  for (std::size_t k = 1; k < e.cache_t_ks.size(); ++k) {
    if (!(e.cache_t_ks[k] > e.cache_t_ks[k - 1])) {
      throw InputError("cache_t_ks must be strictly increasing");
    }
  }
  e.log_scaling = get<bool>(v, "log_scaling");
  e.eval_batch = get<std::size_t>(v, "eval_batch");
  e.max_eval_tokens = get<std::size_t>(v, "max_eval_tokens");
  e.memory_budget_mb = get<double>(v, "memory_budget_mb");
  return e;
}

bool RunConfig::double_precision() const {
  return get<std::string>(values_, "precision") == "f64";
}

ordered_json RunConfig::model_fields() const {
  ordered_json m;
  for (const char* key : kModelKeys) m[key] = values_.at(key);
  return m;
}

std::string RunConfig::model_hash() const { return fnv1a_hex(model_fields().dump()); }

std::string RunConfig::config_hash() const { return fnv1a_hex(values_.dump()); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotary position embedding scaling and continuous length extrapolation"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_dir;
  std::vector<std::string> overrides;

  auto* train_cmd = app.add_subcommand("train", "Train a model from a run config");
  train_cmd->add_option("config", config_path, "Run config (JSON)")->required();
  train_cmd->add_option("--set", overrides, "Override a config key: key=value");
  train_cmd->add_option("--out", out_dir, "Exact output directory");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the length grid");
  eval_cmd->add_option("config", config_path, "Run config (JSON)")->required();
  eval_cmd->add_option("checkpoint", checkpoint_path, "model.ckpt or its run directory")
      ->required();
  eval_cmd->add_option("--set", overrides, "Override a config key: key=value");
  eval_cmd->add_option("--out", out_dir, "Exact output directory");

  BasisArgs basis_args;
  auto* basis_cmd = app.add_subcommand("basis", "Dump scaled frequency bases as CSV");
  basis_cmd->add_option("--d", basis_args.d, "Head dimension")->required();
  basis_cmd->add_option("--methods", basis_args.methods, "Comma-separated methods");
  basis_cmd->add_option("--t", basis_args.ts, "Comma-separated scale factors");
  basis_cmd->add_option("--checkpoint", basis_args.checkpoint,
                        "CLEX checkpoint supplying the ODE weights");
  basis_cmd->add_option("--xi-form", basis_args.xi_form, "log_derivative or paper_printed");
  basis_cmd->add_option("--steps-per-unit", basis_args.steps_per_unit, "RK4 steps per unit t");
  basis_cmd->add_option("--base", basis_args.base, "RoPE base");
  basis_cmd->add_option("--out", basis_args.out, "Write CSV here instead of stdout");

  auto* compare_cmd = app.add_subcommand("compare", "Train and evaluate several methods");
  compare_cmd->add_option("config", config_path, "Run config (JSON)")->required();
  compare_cmd->add_option("--set", overrides, "Override a config key: key=value");
  compare_cmd->add_option("--out", out_dir, "Exact output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*basis_cmd) return do_basis(basis_args, out);
    const auto cfg = RunConfig::load(config_path, overrides);
    const bool f64 = cfg.double_precision();
    if (*train_cmd) {
      return f64 ? do_train<double>(cfg, out_dir, out, err)
                 : do_train<float>(cfg, out_dir, out, err);
    }
    if (*eval_cmd) {
      return f64 ? do_eval<double>(cfg, checkpoint_path, out_dir, out)
                 : do_eval<float>(cfg, checkpoint_path, out_dir, out);
    }
    if (*compare_cmd) {
      return f64 ? do_compare<double>(cfg, out_dir, out, err)
                 : do_compare<float>(cfg, out_dir, out, err);
    }
  } catch (const CompatibilityError& e) {
    err << "error: " << e.what() << '\n';
    return kCompatibilityError;
  } catch (const NumericalError& e) {
    err << "error: numerical abort: " << e.what() << '\n';
    return kNumericalAbort;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace clex::cli
