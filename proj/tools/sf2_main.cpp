// Command-line front end: dataset generation, training, evaluation, gradient
// checks, bias-init inspection, the sharding bench and plot-data emission.
// Configuration is a flat `key = value` file (# comments) with command-line
// overrides; run `sf2 <command> --help` for the keys a command reads.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sf2/errors.hpp"
#include "sf2/experiments.hpp"
#include "sf2/gradcheck.hpp"
#include "sf2/shard.hpp"
#include "sf2/sim_adjust.hpp"
#include "sf2/train.hpp"

namespace sf2::cli {

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "out";
  // dataset
  Index classes = 16;
  Index input_dim = 24;
  Index per_class = 80;
  double concentration = 3.0;
  double noise = 0.0;
  std::string data;
  std::string model;
  // training
  double lr = 0.05;
  double momentum = 0.9;
  Index epochs = 30;
  Index batch = 32;
  std::string hidden = "48,48";
  Index feature_dim = 16;
  std::string loss = "sphereface2";
  bool pn = true, eh = true, am = true, sa = true;
  double lambda = 0.7;
  double r = 30.0;
  double m = 0.4;
  double t = 3.0;
  std::string margin_variant = "cosine";
  std::string bias_init_mode = "closed_form";
  double weight_decay = 0.0;
  double lr_decay = 1.0;
  double softmax_s = 30.0;
  double softmax_margin = 0.0;
  double softmax_t = 1.0;
  double val_fraction = 0.25;
  // evaluation
  Index pairs_pos = 3000;
  Index pairs_neg = 3000;
  std::string far_levels = "0.1,0.01,0.005";
  int bins = 100;
  // gradcheck
  std::string gradcheck_loss = "all";
  int trials = 50;
  // bench
  Index bench_classes = 131072;
  Index bench_dim = 128;
  std::string bench_shards = "1,2,4";
  Index bench_batch = 4;
  Index bench_reps = 3;
  // noise sweep
  std::string rates = "0,0.2,0.4,0.6,0.8";
  // plot-data
  std::string curve = "easyhard";
  std::string s_list = "4,8,16";
  std::string r_list = "10,20,40,60";
  std::string t_list = "1,2,3,5";
  double neg_cos = 0.2;
};

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeySpec {
  std::string name;
  std::string desc;
  Setter set;
  Getter get;
};

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("bad boolean value for " + key + ": '" + v + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& csv);

template <>
std::vector<double> parse_list<double>(const std::string& key, const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_double(key, cell));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

template <>
std::vector<Index> parse_list<Index>(const std::string& key, const std::string& csv) {
  std::vector<Index> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_int(key, cell));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

#define SF2_KEY_DOUBLE(field, desc)                                                  \
  KeySpec {                                                                          \
    #field, desc,                                                                    \
        [](RunConfig& c, const std::string& v) { c.field = parse_double(#field, v); }, \
        [](const RunConfig& c) { return format_double(c.field); }                    \
  }
#define SF2_KEY_INDEX(field, desc)                                                 \
  KeySpec {                                                                        \
    #field, desc,                                                                  \
        [](RunConfig& c, const std::string& v) {                                   \
          c.field = static_cast<Index>(parse_int(#field, v));                      \
        },                                                                         \
        [](const RunConfig& c) { return std::to_string(c.field); }                 \
  }
#define SF2_KEY_BOOL(field, desc)                                                  \
  KeySpec {                                                                        \
    #field, desc,                                                                  \
        [](RunConfig& c, const std::string& v) { c.field = parse_bool(#field, v); }, \
        [](const RunConfig& c) { return c.field ? "true" : "false"; }              \
  }
#define SF2_KEY_STRING(field, desc)                                       \
  KeySpec {                                                               \
    #field, desc, [](RunConfig& c, const std::string& v) { c.field = v; }, \
        [](const RunConfig& c) { return c.field; }                        \
  }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      KeySpec{"seed", "master RNG seed",
              [](RunConfig& c, const std::string& v) {
                c.seed = static_cast<std::uint64_t>(parse_int("seed", v));
              },
              [](const RunConfig& c) { return std::to_string(c.seed); }},
      SF2_KEY_STRING(out, "output directory"),
      SF2_KEY_INDEX(classes, "number of classes K"),
      SF2_KEY_INDEX(input_dim, "input dimension of synthetic samples"),
      SF2_KEY_INDEX(per_class, "samples per class"),
      SF2_KEY_DOUBLE(concentration, "cluster tightness (higher = tighter)"),
      SF2_KEY_DOUBLE(noise, "label noise rate in [0,1)"),
      SF2_KEY_STRING(data, "dataset csv path (generated when empty)"),
      SF2_KEY_STRING(model, "model file path"),
      SF2_KEY_DOUBLE(lr, "SGD learning rate"),
      SF2_KEY_DOUBLE(momentum, "SGD momentum"),
      SF2_KEY_INDEX(epochs, "training epochs"),
      SF2_KEY_INDEX(batch, "batch size"),
      SF2_KEY_STRING(hidden, "comma-separated hidden layer widths"),
      SF2_KEY_INDEX(feature_dim, "embedding dimension"),
      SF2_KEY_STRING(loss, "training loss family: sphereface2 | softmax"),
      SF2_KEY_BOOL(pn, "positive/negative balance"),
      SF2_KEY_BOOL(eh, "easy/hard scaling"),
      SF2_KEY_BOOL(am, "angular margin + bias"),
      SF2_KEY_BOOL(sa, "similarity adjustment"),
      SF2_KEY_DOUBLE(lambda, "positive/negative weight in [0,1]"),
      SF2_KEY_DOUBLE(r, "logit scale"),
      SF2_KEY_DOUBLE(m, "margin (tied m_p = m_n)"),
      SF2_KEY_DOUBLE(t, "similarity-adjustment exponent"),
      SF2_KEY_STRING(margin_variant, "cosine | arc | mult"),
      SF2_KEY_STRING(bias_init_mode, "closed_form | zero"),
      SF2_KEY_DOUBLE(weight_decay, "L2 weight decay"),
      SF2_KEY_DOUBLE(lr_decay, "per-epoch lr multiplier"),
      SF2_KEY_DOUBLE(softmax_s, "softmax baseline scale"),
      SF2_KEY_DOUBLE(softmax_margin, "softmax baseline additive margin"),
      SF2_KEY_DOUBLE(softmax_t, "similarity-adjustment toggle on the baseline"),
      SF2_KEY_DOUBLE(val_fraction, "held-out fraction per class"),
      SF2_KEY_INDEX(pairs_pos, "positive verification pairs"),
      SF2_KEY_INDEX(pairs_neg, "negative verification pairs"),
      SF2_KEY_STRING(far_levels, "comma-separated FAR levels"),
      KeySpec{"bins", "histogram bins for overlap",
              [](RunConfig& c, const std::string& v) {
                c.bins = static_cast<int>(parse_int("bins", v));
              },
              [](const RunConfig& c) { return std::to_string(c.bins); }},
      SF2_KEY_STRING(gradcheck_loss,
                     "loss under test: naive|balanced|curvature|final|arc|mult|softmax|all"),
      KeySpec{"trials", "gradient-check trials per loss",
              [](RunConfig& c, const std::string& v) {
                c.trials = static_cast<int>(parse_int("trials", v));
              },
              [](const RunConfig& c) { return std::to_string(c.trials); }},
      SF2_KEY_INDEX(bench_classes, "bench classifier count"),
      SF2_KEY_INDEX(bench_dim, "bench feature dimension"),
      SF2_KEY_STRING(bench_shards, "comma-separated shard counts"),
      SF2_KEY_INDEX(bench_batch, "bench batch size"),
      SF2_KEY_INDEX(bench_reps, "bench timed repetitions"),
      SF2_KEY_STRING(rates, "comma-separated noise rates"),
      SF2_KEY_STRING(curve, "plot curve: easyhard | curvature | simadjust | boundaries"),
      SF2_KEY_STRING(s_list, "softmax scales for the easyhard curve"),
      SF2_KEY_STRING(r_list, "scales for the curvature curve"),
      SF2_KEY_STRING(t_list, "exponents for the simadjust curve"),
      SF2_KEY_DOUBLE(neg_cos, "fixed non-target cosine for the easyhard curve"),
  };
  return table;
}

const KeySpec& find_key(const std::string& name) {
  for (const KeySpec& spec : key_table())
    if (spec.name == name) return spec;
  throw ConfigError("unknown config key: " + name);
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    find_key(key).set(cfg, value);
  }
}

// Registers `--<key>` options (default shown in help) on a subcommand.
void add_keys(CLI::App* cmd, RunConfig& cfg, const RunConfig& defaults,
              const std::vector<std::string>& keys) {
  for (const std::string& name : keys) {
    const KeySpec& spec = find_key(name);
    cmd->add_option_function<std::string>(
        "--" + spec.name,
        [&cfg, &spec](const std::string& v) { spec.set(cfg, v); },
        spec.desc + " [default: " + spec.get(defaults) + "]");
  }
  // already applied by the pre-scan; accepted here so it parses after the
  // subcommand name too
  if (cmd->get_option_no_throw("--config") == nullptr) {
    static std::string sink;
    cmd->add_option("--config", sink, "flat key = value config file");
  }
}

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  const auto path = std::filesystem::path(cfg.out) / name;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path.string());
  return out;
}

MarginVariant parse_variant(const std::string& name) {
  if (name == "cosine") return MarginVariant::CosineAdditive;
  if (name == "arc") return MarginVariant::ArcAdditive;
  if (name == "mult") return MarginVariant::Multiplicative;
  throw ConfigError("margin_variant must be cosine | arc | mult, got '" + name + "'");
}

Hyperparams hyperparams_of(const RunConfig& cfg) {
  return Hyperparams::tied(cfg.lambda, cfg.r, cfg.m, cfg.t,
                           parse_variant(cfg.margin_variant));
}

LossSelection loss_selection_of(const RunConfig& cfg) {
  LossSelection sel;
  if (cfg.loss == "sphereface2") {
    sel.family = LossFamily::SphereFace2;
  } else if (cfg.loss == "softmax") {
    sel.family = LossFamily::Softmax;
  } else {
    throw ConfigError("loss must be sphereface2 | softmax, got '" + cfg.loss + "'");
  }
  sel.flags = AblationFlags{cfg.pn, cfg.eh, cfg.am, cfg.sa};
  sel.hp = hyperparams_of(cfg);
  sel.softmax_scale = cfg.softmax_s;
  sel.softmax_margin = cfg.softmax_margin;
  sel.softmax_t = cfg.softmax_t;
  return sel;
}

TrainConfig train_config_of(const RunConfig& cfg) {
  TrainConfig config;
  config.lr = cfg.lr;
  config.momentum = cfg.momentum;
  config.epochs = cfg.epochs;
  config.batch_size = cfg.batch;
  config.seed = cfg.seed;
  config.loss = loss_selection_of(cfg);
  if (cfg.bias_init_mode == "closed_form") {
    config.bias_init_mode = BiasInitMode::ClosedForm;
  } else if (cfg.bias_init_mode == "zero") {
    config.bias_init_mode = BiasInitMode::Zero;
  } else {
    throw ConfigError("bias_init_mode must be closed_form | zero");
  }
  config.weight_decay = cfg.weight_decay;
  config.lr_decay = cfg.lr_decay;
  config.hidden = parse_list<Index>("hidden", cfg.hidden);
  config.feature_dim = cfg.feature_dim;
  config.validate();
  return config;
}

SyntheticDataset obtain_dataset(const RunConfig& cfg) {
  SyntheticDataset ds = cfg.data.empty()
                            ? make_synthetic(cfg.classes, cfg.input_dim, cfg.per_class,
                                             cfg.concentration, cfg.seed)
                            : load_dataset(cfg.data);
  if (cfg.noise > 0.0) ds = inject_label_noise(ds, cfg.noise, mix_seed(cfg.seed, 0x4f));
  return ds;
}

int cmd_gen_data(const RunConfig& cfg) {
  const SyntheticDataset ds = obtain_dataset(cfg);
  std::filesystem::create_directories(cfg.out);
  const auto path = (std::filesystem::path(cfg.out) / "dataset.csv").string();
  save_dataset(ds, path);
  std::cout << "wrote " << path << " (" << ds.num_samples() << " samples, K="
            << ds.num_classes() << ")\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const SyntheticDataset ds = obtain_dataset(cfg);
  const TrainConfig config = train_config_of(cfg);

  const auto [train_ds, val_ds] = split_train_val(ds, cfg.val_fraction, cfg.seed);
  ValHook hook;
  PairSet val_pairs;
  if (val_ds.num_samples() > 1 && ds.num_classes() > 1) {
    const Index want = std::min<Index>(cfg.pairs_pos, 200);
    val_pairs = build_pairs(val_ds, want, want, mix_seed(cfg.seed, 0x3e));
    hook.data = &val_ds;
    hook.pairs = val_pairs;
  }

  Rng bank_rng(mix_seed(cfg.seed, 0xba));
  ClassifierBank bank(ds.num_classes(), config.feature_dim, bank_rng);
  const TrainResult result =
      train(config, train_ds, std::move(bank), hook.data ? &hook : nullptr);

  std::filesystem::create_directories(cfg.out);
  const auto dir = std::filesystem::path(cfg.out);
  save_model(result.model, result.bank, (dir / "model.txt").string());
  export_features(result.model, result.bank, config.loss.hp, ds,
                  (dir / "features.csv").string());
  {
    auto out = open_output(cfg, "history.csv");
    out << "# epoch,train_loss,val_accuracy\n";
    for (const EpochStats& stats : result.history)
      out << stats.epoch << ',' << format_double(stats.train_loss) << ','
          << format_double(stats.val_accuracy) << '\n';
  }
  std::cout << "trained " << config.epochs << " epochs";
  if (!result.history.empty())
    std::cout << "; final loss " << result.history.back().train_loss;
  std::cout << "; wrote model.txt features.csv history.csv in " << cfg.out << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  if (cfg.model.empty()) throw ConfigError("eval requires --model");
  if (cfg.data.empty()) throw ConfigError("eval requires --data");
  const LoadedModel loaded = load_model(cfg.model);
  const SyntheticDataset ds = load_dataset(cfg.data);

  const PairSet pairs = build_pairs(ds, cfg.pairs_pos, cfg.pairs_neg, cfg.seed);
  const auto scores = pair_scores(loaded.model, ds, pairs);
  std::vector<bool> same;
  std::vector<double> pos_scores, neg_scores;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    same.push_back(pairs.pairs[i].same);
    (pairs.pairs[i].same ? pos_scores : neg_scores).push_back(scores[i]);
  }

  {
    auto out = open_output(cfg, "scores.csv");
    out << "# same,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i)
      out << (same[i] ? 1 : 0) << ',' << format_double(scores[i]) << '\n';
  }

  const ThresholdResult best = best_threshold_accuracy(scores, same);
  const auto far_levels = parse_list<double>("far_levels", cfg.far_levels);
  const auto tars = tar_at_far(scores, same, far_levels);
  const double overlap = distribution_overlap(pos_scores, neg_scores, cfg.bins);

  auto out = open_output(cfg, "metrics.csv");
  out << "# metric,param,value\n";
  out << "accuracy,best_threshold," << format_double(best.accuracy) << '\n';
  out << "threshold,best," << format_double(best.threshold) << '\n';
  for (std::size_t i = 0; i < far_levels.size(); ++i)
    out << "tar,far=" << format_double(far_levels[i]) << ',' << format_double(tars[i])
        << '\n';
  out << "overlap,bins=" << cfg.bins << ',' << format_double(overlap) << '\n';
  out << "pairs,pos," << pairs.n_pos << '\n';
  out << "pairs,neg," << pairs.n_neg << '\n';
  std::cout << "accuracy " << best.accuracy << " at threshold " << best.threshold
            << "; overlap " << overlap << "; wrote scores.csv metrics.csv in " << cfg.out
            << "\n";
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
  std::vector<LossKind> kinds;
  if (cfg.gradcheck_loss == "all") {
    kinds = all_loss_kinds();
  } else {
    const auto kind = parse_loss_kind(cfg.gradcheck_loss);
    if (!kind) throw ConfigError("unknown loss for gradcheck: " + cfg.gradcheck_loss);
    kinds.push_back(*kind);
  }
  bool all_pass = true;
  for (LossKind kind : kinds) {
    const GradCheckReport report = gradcheck_loss(kind, cfg.trials, cfg.seed);
    all_pass = all_pass && report.pass;
    std::printf("%-10s trials=%d components=%lld max_rel_err=%.3e  %s\n",
                loss_kind_name(kind), report.trials, report.components,
                report.max_rel_err, report.pass ? "PASS" : "FAIL");
  }
  return all_pass ? 0 : 1;
}

int cmd_bias_init(const RunConfig& cfg) {
  const Hyperparams hp = hyperparams_of(cfg);
  const double b = bias_init(hp, cfg.classes);
  const double residual = std::abs(bias_grad_at_zero_cos(hp, cfg.classes, b));
  std::printf("b=%.10f residual=%.3e %s\n", b, residual,
              residual <= 1e-10 ? "OK" : "LARGE");
  return residual <= 1e-10 ? 0 : 1;
}

int cmd_bench_shard(const RunConfig& cfg) {
  const auto shard_counts = parse_list<Index>("bench_shards", cfg.bench_shards);
  const auto rows = throughput_bench(cfg.bench_classes, cfg.bench_dim, shard_counts,
                                     cfg.bench_batch, cfg.bench_reps, cfg.seed);
  auto out = open_output(cfg, "bench.csv");
  const std::string header =
      "# loss,S,K,D,batch,steps_per_sec,remote_weight_scalars,normalizer_scalars";
  out << header << '\n';
  std::cout << header << '\n';
  for (const BenchRow& row : rows) {
    std::ostringstream line;
    line << row.loss << ',' << row.shards << ',' << row.num_classes << ',' << row.dim
         << ',' << row.batch << ',' << format_double(row.steps_per_sec) << ','
         << row.stats.remote_weight_scalars_read << ','
         << row.stats.normalizer_exchange_scalars;
    out << line.str() << '\n';
    std::cout << line.str() << '\n';
  }
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  const SyntheticDataset ds = obtain_dataset(cfg);
  const TrainConfig base = train_config_of(cfg);
  const auto results = run_ablation(ds, ablation_ladder(), base, cfg.val_fraction,
                                    cfg.pairs_pos, cfg.pairs_neg);
  auto out = open_output(cfg, "ablation.csv");
  out << "# pn,eh,am,sa,name,accuracy\n";
  std::cout << "# row accuracy\n";
  for (const AblationRow& row : results) {
    out << row.flags.pn << ',' << row.flags.eh << ',' << row.flags.am << ','
        << row.flags.sa << ',' << row.name << ',' << format_double(row.accuracy) << '\n';
    std::cout << row.name << " " << row.accuracy << "\n";
  }
  return 0;
}

int cmd_noise(const RunConfig& cfg) {
  const SyntheticDataset ds = obtain_dataset(cfg);
  const TrainConfig base = train_config_of(cfg);
  const auto rates = parse_list<double>("rates", cfg.rates);

  LossSelection sf2_sel = loss_selection_of(cfg);
  sf2_sel.family = LossFamily::SphereFace2;
  LossSelection softmax_sel = loss_selection_of(cfg);
  softmax_sel.family = LossFamily::Softmax;

  const auto rows = run_noise_sweep(
      ds, rates, {{"sphereface2", sf2_sel}, {"softmax", softmax_sel}}, base,
      cfg.val_fraction, cfg.pairs_pos, cfg.pairs_neg);
  auto out = open_output(cfg, "noise.csv");
  out << "# loss,rate,accuracy\n";
  std::cout << "# loss rate accuracy\n";
  for (const NoiseRow& row : rows) {
    out << row.loss << ',' << format_double(row.rate) << ','
        << format_double(row.accuracy) << '\n';
    std::cout << row.loss << " " << row.rate << " " << row.accuracy << "\n";
  }
  return 0;
}

double adjust_inverse(double v, double t) {
  if (v < -1.0 || v > 1.0) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * std::pow((v + 1.0) / 2.0, 1.0 / t) - 1.0;
}

int cmd_plot_data(const RunConfig& cfg) {
  if (cfg.curve == "easyhard") {
    // s-normalized softmax with the non-target cosines pinned
    const auto scales = parse_list<double>("s_list", cfg.s_list);
    auto out = open_output(cfg, "easyhard.csv");
    out << "# cos_y";
    for (double s : scales) out << ",s=" << format_double(s);
    out << '\n';
    for (int i = 0; i <= 200; ++i) {
      const double cos_y = -1.0 + 0.01 * i;
      out << format_double(cos_y);
      for (double s : scales) {
        Vector v(4);
        v << cos_y, cfg.neg_cos, cfg.neg_cos, cfg.neg_cos;
        out << ',' << format_double(loss_softmax(CosineLogits(v), 0, s).value);
      }
      out << '\n';
    }
  } else if (cfg.curve == "curvature") {
    const auto scales = parse_list<double>("r_list", cfg.r_list);
    auto out = open_output(cfg, "curvature.csv");
    out << "# cos_y";
    for (double r : scales) out << ",r=" << format_double(r);
    out << '\n';
    for (int i = 0; i <= 200; ++i) {
      const double cos_y = -1.0 + 0.01 * i;
      out << format_double(cos_y);
      Vector v(1);
      v << cos_y;
      for (double r : scales)
        out << ',' << format_double(loss_curvature(CosineLogits(v), 0, 1.0, r));
      out << '\n';
    }
  } else if (cfg.curve == "simadjust") {
    const auto exponents = parse_list<double>("t_list", cfg.t_list);
    auto out = open_output(cfg, "simadjust.csv");
    out << "# z";
    for (double t : exponents) out << ",t=" << format_double(t);
    out << '\n';
    for (int i = 0; i <= 200; ++i) {
      const double z = -1.0 + 0.01 * i;
      out << format_double(z);
      for (double t : exponents) out << ',' << format_double(similarity_adjust(z, t));
      out << '\n';
    }
  } else if (cfg.curve == "boundaries") {
    // cosine positions of the positive/baseline/negative decision boundaries
    const Hyperparams hp = hyperparams_of(cfg);
    const double b = bias_init(hp, cfg.classes);
    auto out = open_output(cfg, "boundaries.csv");
    out << "# boundary,cos\n";
    out << "positive," << format_double(adjust_inverse(hp.m_p - b / hp.r, hp.t)) << '\n';
    out << "baseline," << format_double(adjust_inverse(-b / hp.r, hp.t)) << '\n';
    out << "negative," << format_double(adjust_inverse(-hp.m_n - b / hp.r, hp.t)) << '\n';
  } else {
    throw ConfigError("unknown curve: " + cfg.curve);
  }
  std::cout << "wrote " << cfg.curve << ".csv in " << cfg.out << "\n";
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  RunConfig cfg;
  const RunConfig defaults;

  // --config is applied before the remaining flags so the command line wins
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc)
      load_config_file(cfg, argv[i + 1]);
    else if (arg.rfind("--config=", 0) == 0)
      load_config_file(cfg, arg.substr(9));
  }

  CLI::App app{"SphereFace2 binary-classification training engine"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "flat key = value config file")
      ->expected(1);

  const std::vector<std::string> common = {"seed", "out"};
  const std::vector<std::string> dataset_keys = {"classes", "input_dim", "per_class",
                                                 "concentration", "noise"};
  const std::vector<std::string> train_keys = {
      "data",         "lr",       "momentum",       "epochs",       "batch",
      "hidden",       "feature_dim", "loss",        "pn",           "eh",
      "am",           "sa",       "lambda",         "r",            "m",
      "t",            "margin_variant", "bias_init_mode", "weight_decay", "lr_decay",
      "softmax_s",    "softmax_margin", "softmax_t", "val_fraction", "pairs_pos",
      "pairs_neg"};

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset csv");
  add_keys(gen, cfg, defaults, common);
  add_keys(gen, cfg, defaults, dataset_keys);

  auto* train_cmd = app.add_subcommand("train", "train encoder + classifier bank");
  add_keys(train_cmd, cfg, defaults, common);
  add_keys(train_cmd, cfg, defaults, dataset_keys);
  add_keys(train_cmd, cfg, defaults, train_keys);

  auto* eval_cmd = app.add_subcommand("eval", "pair-verification metrics for a model");
  add_keys(eval_cmd, cfg, defaults, common);
  add_keys(eval_cmd, cfg, defaults,
           {"data", "model", "pairs_pos", "pairs_neg", "far_levels", "bins"});

  auto* grad = app.add_subcommand("gradcheck",
                                  "finite-difference check of every closed-form gradient");
  add_keys(grad, cfg, defaults, common);
  add_keys(grad, cfg, defaults, {"trials"});
  grad->add_option_function<std::string>(
      "--loss", [&cfg](const std::string& v) { cfg.gradcheck_loss = v; },
      "loss under test: naive|balanced|curvature|final|arc|mult|softmax|all "
      "[default: all]");

  auto* bias_cmd = app.add_subcommand("bias-init",
                                      "closed-form initial bias and its residual");
  add_keys(bias_cmd, cfg, defaults, common);
  add_keys(bias_cmd, cfg, defaults,
           {"lambda", "r", "m", "t", "margin_variant", "classes"});
  bias_cmd->add_option_function<std::string>(
      "--K", [&cfg](const std::string& v) {
        cfg.classes = static_cast<Index>(parse_int("classes", v));
      },
      "alias for --classes");

  auto* bench = app.add_subcommand("bench-shard", "thread-parallel classifier throughput");
  add_keys(bench, cfg, defaults, common);
  add_keys(bench, cfg, defaults,
           {"bench_classes", "bench_dim", "bench_shards", "bench_batch", "bench_reps"});

  auto* ablate = app.add_subcommand("ablate", "cumulative design-principle ladder");
  add_keys(ablate, cfg, defaults, common);
  add_keys(ablate, cfg, defaults, dataset_keys);
  add_keys(ablate, cfg, defaults, train_keys);

  auto* noise_cmd = app.add_subcommand("noise", "label-noise sweep for both losses");
  add_keys(noise_cmd, cfg, defaults, common);
  add_keys(noise_cmd, cfg, defaults, dataset_keys);
  add_keys(noise_cmd, cfg, defaults, train_keys);
  add_keys(noise_cmd, cfg, defaults, {"rates"});

  auto* plot = app.add_subcommand("plot-data", "csv tables for the loss/score curves");
  add_keys(plot, cfg, defaults, common);
  add_keys(plot, cfg, defaults,
           {"curve", "r_list", "t_list", "neg_cos", "lambda", "r", "m", "t",
            "margin_variant", "classes"});
  plot->add_option_function<std::string>(
      "--s", [&cfg](const std::string& v) { cfg.s_list = v; },
      "softmax scales for the easyhard curve [default: 4,8,16]");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) return cmd_gen_data(cfg);
  if (train_cmd->parsed()) return cmd_train(cfg);
  if (eval_cmd->parsed()) return cmd_eval(cfg);
  if (grad->parsed()) return cmd_gradcheck(cfg);
  if (bias_cmd->parsed()) return cmd_bias_init(cfg);
  if (bench->parsed()) return cmd_bench_shard(cfg);
  if (ablate->parsed()) return cmd_ablate(cfg);
  if (noise_cmd->parsed()) return cmd_noise(cfg);
  if (plot->parsed()) return cmd_plot_data(cfg);
  return 1;
}

}  // namespace sf2::cli

int main(int argc, char** argv) {
  try {
    return sf2::cli::run(argc, argv);
  } catch (const sf2::Error& e) {
    std::cerr << "error," << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error," << e.what() << "\n";
    return 3;
  }
}
