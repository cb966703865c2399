#include "dnc/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "dnc/errors.hpp"
#include "dnc/harness.hpp"

namespace dnc::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  for (std::string item; std::getline(ss, item, ',');)
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("invalid value '" + value + "' for " + key);
  return v;
}

// GCC 11 lacks floating-point from_chars in some configurations; use strtod.
template <>
double parse_number<double>(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size())
    throw ConfigError("invalid value '" + value + "' for " + key);
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys{
      "config_version", "instances",     "operators",    "replicates",   "seed",
      "generations",    "population_size", "tournament_k", "mutation_prob", "crossover_prob",
      "epsilon",        "elitism",       "weights",      "output_dir",   "invalid_mode",
      "latent_dim",     "batch_size",    "learning_rate", "adam_beta1",  "adam_beta2",
      "training_threads", "parallel_replicates", "permutation_rounds", "reference_index"};
  return keys;
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "config_version") {
    if (parse_number<int>(key, value) != kConfigVersion)
      throw ConfigError("unsupported config_version " + value + " (expected " +
                        std::to_string(kConfigVersion) + ")");
  } else if (key == "instances") {
    c.instances.clear();
    for (auto& s : split_list(value)) c.instances.emplace_back(s);
  } else if (key == "operators") {
    c.operators = split_list(value);
    for (const auto& op : c.operators) parse_operator_kind(op);
  } else if (key == "replicates") {
    c.replicates = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    c.base_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "generations") {
    c.ga.generations = parse_number<std::size_t>(key, value);
  } else if (key == "population_size") {
    c.ga.population_size = parse_number<std::size_t>(key, value);
  } else if (key == "tournament_k") {
    c.ga.tournament_k = parse_number<std::size_t>(key, value);
  } else if (key == "mutation_prob") {
    c.ga.mutation_prob = parse_number<double>(key, value);
  } else if (key == "crossover_prob") {
    c.ga.crossover_prob = parse_number<double>(key, value);
  } else if (key == "epsilon") {
    c.ga.epsilon = c.dnc.epsilon = parse_number<double>(key, value);
  } else if (key == "elitism") {
    c.ga.elitism = parse_bool(key, value);
  } else if (key == "weights") {
    c.weights = value.empty() ? std::nullopt : std::optional<std::filesystem::path>(value);
  } else if (key == "output_dir") {
    c.output_dir = value;
  } else if (key == "invalid_mode") {
    c.invalid_mode = parse_invalid_mode(value);
  } else if (key == "latent_dim") {
    c.dnc.latent_dim = parse_number<std::size_t>(key, value);
  } else if (key == "batch_size") {
    c.dnc.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "learning_rate") {
    c.dnc.learning_rate = parse_number<double>(key, value);
  } else if (key == "adam_beta1") {
    c.dnc.adam_beta1 = parse_number<double>(key, value);
  } else if (key == "adam_beta2") {
    c.dnc.adam_beta2 = parse_number<double>(key, value);
  } else if (key == "training_threads") {
    c.dnc.threads = parse_number<unsigned>(key, value);
  } else if (key == "parallel_replicates") {
    c.parallel_replicates = parse_number<unsigned>(key, value);
  } else if (key == "permutation_rounds") {
    c.permutation_rounds = parse_number<std::size_t>(key, value);
  } else if (key == "reference_index") {
    if (value == "current")
      c.dnc.references = ReferenceIndex::current;
    else if (value == "previous")
      c.dnc.references = ReferenceIndex::previous;
    else
      throw ConfigError("reference_index must be 'current' or 'previous'");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  std::stringstream ss(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(ss, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << file.rdbuf();
  return parse_run_config(buf.str(), std::move(base));
}

namespace {

ExperimentConfig experiment_config(const RunConfig& c) {
  ExperimentConfig e;
  e.ga = c.ga;
  e.ga.epsilon = c.dnc.epsilon;
  e.operator_settings.dnc = c.dnc;
  e.operator_settings.weights = c.weights;
  e.replicates = c.replicates;
  e.base_seed = c.base_seed;
  e.parallel_replicates = c.parallel_replicates;
  return e;
}

std::string format_value(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(6) << v;
  return os.str();
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const TrainingDivergenceError& e) {
    err << "error: training diverged: " << e.what() << "\n";
    return kTrainingDivergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

void validate(const RunConfig& c) {
  c.ga.validate();
  if (c.instances.empty()) throw ConfigError("no instance files given");
  if (c.operators.empty()) throw ConfigError("no operators given");
  if (c.replicates == 0) throw ConfigError("replicates must be positive");
  for (const auto& op : c.operators)
    if (parse_operator_kind(op) == OperatorKind::dnc_pt && !c.weights)
      throw ConfigError("operator dnc_pt requires a weights file");
  for (const auto& inst : c.instances)
    if (!std::filesystem::exists(inst)) throw DataError("instance file not found: " + inst.string());
  if (c.weights && !std::filesystem::exists(*c.weights))
    throw DataError("weights file not found: " + c.weights->string());
}

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate(config);
    const auto exp = experiment_config(config);
    std::vector<ExperimentResult> results;
    for (const auto& path : config.instances) {
      const auto problem = load_problem(path, config.invalid_mode);
      for (const auto& op : config.operators) {
        out << "running " << op << " on " << problem->name() << " (" << config.replicates
            << " replicates, " << config.ga.generations << " generations)\n";
        results.push_back(run_experiment(*problem, parse_operator_kind(op), exp));
      }
    }
    const auto report = compare(results, config.permutation_rounds, config.base_seed);
    emit_csv(results, report, config.output_dir);

    out << "\ninstance,operator,mean,std,p_vs_reference\n";
    for (const auto& s : report.summaries)
      out << s.instance << ',' << s.operator_name << ',' << format_value(s.mean) << ','
          << format_value(s.std) << ',' << (s.p_vs_reference ? format_value(*s.p_vs_reference) : "")
          << '\n';
    out << "\noperator,mean_s,max_s,std_s\n";
    for (const auto& t : report.timing)
      out << t.operator_name << ',' << format_value(t.mean_s) << ',' << format_value(t.max_s)
          << ',' << format_value(t.std_s) << '\n';
    out << "\nwrote " << (config.output_dir / "summary.csv").string() << ", curves.csv, timing.csv\n";
    return static_cast<int>(kOk);
  });
}

int cmd_pretrain(const RunConfig& config, const std::filesystem::path& out_path, bool force,
                 std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.instances.size() != 1) throw ConfigError("pretrain takes exactly one instance");
    if (std::filesystem::exists(out_path) && !force)
      throw ConfigError("refusing to overwrite " + out_path.string() + " (use --force)");
    if (!std::filesystem::exists(config.instances.front()))
      throw DataError("instance file not found: " + config.instances.front().string());
    config.ga.validate();
    const auto problem = load_problem(config.instances.front(), config.invalid_mode);
    DncSettings dnc = config.dnc;
    const auto params = pretrain(*problem, config.ga, dnc, config.base_seed, out_path);
    out << "pretrained on " << problem->name() << " (vocabulary " << params.vocab_size()
        << ", d=" << params.d() << ") -> " << out_path.string() << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.count == 0) throw ConfigError("count must be positive");
    if (o.items == 0 || o.low < 1 || o.low > o.high || o.high > o.capacity)
      throw DataError("invalid generator bounds: need items >= 1 and 1 <= low <= high <= capacity");
    std::filesystem::create_directories(o.out_dir);
    Rng rng(o.seed);
    for (std::size_t k = 0; k < o.count; ++k) {
      std::ostringstream name;
      name << "bpp_" << o.items << '_' << std::setw(3) << std::setfill('0') << k;
      const auto inst = generate_bpp(o.items, o.low, o.high, o.capacity, rng, name.str());
      const auto path = o.out_dir / (name.str() + ".txt");
      std::ofstream file(path, std::ios::binary | std::ios::trunc);
      if (!file) throw DataError("cannot write " + path.string());
      file << format_bpp(inst);
      if (!file) throw DataError("failed writing " + path.string());
    }
    out << "wrote " << o.count << " instances to " << o.out_dir.string() << "\n";
    return static_cast<int>(kOk);
  });
}

namespace {

// Registers one string flag per config key; `given` collects flags present
// on the command line so they override the config file.
struct Overrides {
  std::map<std::string, std::string> scalar;
  std::vector<std::string> instances;
  std::vector<std::string> operators;
  std::string config_path;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "Config file (key = value lines)");
    cmd.add_option("--instance", instances, "Instance file (.col = DIMACS graph, else BPP)");
    cmd.add_option("--operator", operators,
                   "Crossover operator: one_point, equiprobable_uniform, adaptive_uniform, "
                   "multi_parent_uniform, dnc, dnc_pt, dnc_mp");
    for (const auto& key : setting_keys()) {
      if (key == "instances" || key == "operators") continue;
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      cmd.add_option(flag, scalar[key], "Override config key " + key);
    }
  }

  RunConfig resolve(const CLI::App& cmd) const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    for (const auto& key : setting_keys()) {
      if (key == "instances" || key == "operators") continue;
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (cmd.count(flag) > 0) apply_setting(c, key, scalar.at(key));
    }
    if (!instances.empty()) {
      c.instances.clear();
      for (const auto& i : instances) c.instances.emplace_back(i);
    }
    if (!operators.empty()) {
      for (const auto& op : operators) parse_operator_kind(op);
      c.operators = operators;
    }
    return c;
  }
};

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned multi-parent crossover for genetic algorithms"};
  app.require_subcommand(1);

  Overrides run_opts, compare_opts, pretrain_opts;
  auto* run = app.add_subcommand("run", "Run experiments and write CSV reports");
  run_opts.attach(*run);
  auto* cmp = app.add_subcommand("compare", "Alias of run, for multi-operator comparisons");
  compare_opts.attach(*cmp);

  auto* pre = app.add_subcommand("pretrain", "Train the learned operator on one instance and save it");
  pretrain_opts.attach(*pre);
  std::string pretrain_out;
  bool force = false;
  pre->add_option("--output,-o", pretrain_out, "Weights file to write")->required();
  pre->add_flag("--force", force, "Overwrite an existing weights file");

  auto* gen = app.add_subcommand("gen", "Generate random bin-packing instances");
  GenOptions gen_opts;
  std::string gen_dir = gen_opts.out_dir.string();
  gen->add_option("--items", gen_opts.items, "Items per instance")->capture_default_str();
  gen->add_option("--low", gen_opts.low, "Smallest weight")->capture_default_str();
  gen->add_option("--high", gen_opts.high, "Largest weight")->capture_default_str();
  gen->add_option("--capacity", gen_opts.capacity, "Bin capacity")->capture_default_str();
  gen->add_option("--count", gen_opts.count, "Number of instances")->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out-dir", gen_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
      out << sub->help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  auto resolved = [&](const Overrides& o, const CLI::App& cmd, RunConfig& c) {
    return guarded(err, [&] {
      c = o.resolve(cmd);
      return static_cast<int>(kOk);
    });
  };

  RunConfig config;
  if (run->parsed()) {
    if (int rc = resolved(run_opts, *run, config); rc != kOk) return rc;
    return cmd_run(config, out, err);
  }
  if (cmp->parsed()) {
    if (int rc = resolved(compare_opts, *cmp, config); rc != kOk) return rc;
    return cmd_run(config, out, err);
  }
  if (pre->parsed()) {
    if (int rc = resolved(pretrain_opts, *pre, config); rc != kOk) return rc;
    return cmd_pretrain(config, pretrain_out, force, out, err);
  }
  gen_opts.out_dir = gen_dir;
  return cmd_gen(gen_opts, out, err);
}

}  // namespace dnc::cli
