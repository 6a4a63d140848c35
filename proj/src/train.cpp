#include "sf2/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "sf2/errors.hpp"
#include "sf2/geometry.hpp"
#include "sf2/sgd.hpp"

namespace sf2 {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidHyperparams("TrainConfig: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw InvalidHyperparams("TrainConfig: momentum must be in [0,1)");
  if (epochs < 0) throw InvalidHyperparams("TrainConfig: epochs must be >= 0");
  if (batch_size < 1) throw InvalidHyperparams("TrainConfig: batch size must be >= 1");
  if (feature_dim < 1) throw InvalidHyperparams("TrainConfig: feature_dim must be >= 1");
  if (!(lr_decay > 0.0)) throw InvalidHyperparams("TrainConfig: lr_decay must be > 0");
  if (weight_decay < 0.0) throw InvalidHyperparams("TrainConfig: weight_decay must be >= 0");
  if (loss.family == LossFamily::SphereFace2) {
    loss.flags.validate();
    loss.hp.validate();
  } else if (!(loss.softmax_scale > 0.0)) {
    throw InvalidHyperparams("TrainConfig: softmax scale must be > 0");
  }
}

LossGradients evaluate_selected_loss(const LossSelection& sel, const CosineLogits& cos,
                                     Index label, double bias) {
  if (sel.family == LossFamily::Softmax)
    return loss_softmax(cos, label, sel.softmax_scale, sel.softmax_margin, sel.softmax_t);
  return loss_ablation(cos, label, sel.flags, sel.hp, bias);
}

namespace {

double initial_bias(const TrainConfig& config, Index num_classes) {
  if (config.bias_init_mode == BiasInitMode::Zero) return 0.0;
  if (config.loss.family != LossFamily::SphereFace2 || !config.loss.flags.am) return 0.0;
  if (num_classes < 2) return 0.0;  // closed form needs K >= 2
  if (!(config.loss.hp.lambda > 0.0 && config.loss.hp.lambda < 1.0)) return 0.0;
  return bias_init(config.loss.hp, num_classes);
}

double validation_accuracy(const Encoder& model, const ValHook* val) {
  if (val == nullptr || val->data == nullptr || val->pairs.pairs.empty())
    return std::numeric_limits<double>::quiet_NaN();
  const auto scores = pair_scores(model, *val->data, val->pairs);
  std::vector<bool> same;
  same.reserve(val->pairs.pairs.size());
  for (const auto& p : val->pairs.pairs) same.push_back(p.same);
  return best_threshold_accuracy(scores, same).accuracy;
}

}  // namespace

TrainResult train(const TrainConfig& config, const SyntheticDataset& data,
                  ClassifierBank bank, const ValHook* val) {
  config.validate();
  if (data.num_samples() == 0) throw InsufficientData("train: empty dataset");
  if (bank.num_classes() != data.num_classes())
    throw DimensionMismatch("train: bank K != dataset K");
  if (bank.dim() != config.feature_dim)
    throw DimensionMismatch("train: bank dim != feature_dim");

  std::vector<Index> sizes;
  sizes.push_back(data.input_dim());
  for (Index h : config.hidden) sizes.push_back(h);
  sizes.push_back(config.feature_dim);
  Rng init_rng(mix_seed(config.seed, 0xe0));
  Encoder model(sizes, init_rng);

  double bias = initial_bias(config, bank.num_classes());
  bank.set_bias(bias);

  auto enc_velocity = model.zero_grads();
  Matrix bank_velocity = Matrix::Zero(bank.num_classes(), bank.dim());
  double bias_velocity = 0.0;

  const Index n = data.num_samples();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng shuffle_rng(mix_seed(config.seed, 0xe1));

  TrainResult result{std::move(model), std::move(bank), {}};
  result.history.reserve(static_cast<std::size_t>(config.epochs));

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        config.lr * std::pow(config.lr_decay, static_cast<double>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index stop = std::min<Index>(start + config.batch_size, n);
      const auto batch_n = static_cast<double>(stop - start);

      auto enc_grads = result.model.zero_grads();
      Matrix bank_grads = Matrix::Zero(result.bank.num_classes(), result.bank.dim());
      double bias_grad = 0.0;

      for (Index pos = start; pos < stop; ++pos) {
        const Index idx = order[static_cast<std::size_t>(pos)];
        Encoder::Cache cache;
        const Vector feature =
            result.model.forward(data.inputs.row(idx).transpose(), cache);
        const CosineLogits cos = cosine_logits(feature, result.bank);
        LossGradients lg = evaluate_selected_loss(
            config.loss, cos, data.labels[static_cast<std::size_t>(idx)], bias);
        chain_through_bank(lg, feature, result.bank);
        enc_grads += result.model.backward(cache, lg.d_feature);
        bank_grads += lg.d_weights;
        bias_grad += lg.d_bias;
        epoch_loss += lg.value;
      }

      enc_grads *= 1.0 / batch_n;
      bank_grads *= 1.0 / batch_n;
      bias_grad /= batch_n;

      if (config.weight_decay > 0.0) {
        for (Index l = 0; l < result.model.num_layers(); ++l) {
          const auto lu = static_cast<std::size_t>(l);
          enc_grads.d_weights[lu] += config.weight_decay * result.model.weights()[lu];
        }
        bank_grads += config.weight_decay * result.bank.weights();
      }

      for (Index l = 0; l < result.model.num_layers(); ++l) {
        const auto lu = static_cast<std::size_t>(l);
        sgd_update(result.model.weights()[lu], enc_grads.d_weights[lu],
                   enc_velocity.d_weights[lu], lr, config.momentum);
        sgd_update(result.model.biases()[lu], enc_grads.d_biases[lu],
                   enc_velocity.d_biases[lu], lr, config.momentum);
      }
      sgd_update(result.bank.weights(), bank_grads, bank_velocity, lr, config.momentum);
      sgd_update_scalar(bias, bias_grad, bias_velocity, lr, config.momentum);
      result.bank.set_bias(bias);
      result.bank.validate();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(n);
    stats.val_accuracy = validation_accuracy(result.model, val);
    result.history.push_back(stats);
  }
  return result;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void export_features(const Encoder& model, const ClassifierBank& bank,
                     const Hyperparams& hp, const SyntheticDataset& ds,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("export_features: cannot open " + path);
  out << "# K=" << bank.num_classes() << " D_feat=" << bank.dim()
      << " r=" << format_double(hp.r) << " m=" << format_double(hp.m_p)
      << " lambda=" << format_double(hp.lambda) << " t=" << format_double(hp.t)
      << " b=" << format_double(bank.bias()) << "\n";
  for (Index i = 0; i < ds.num_samples(); ++i) {
    const Vector f = l2_normalize(model.forward(ds.inputs.row(i).transpose()));
    out << ds.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < f.size(); ++j) out << ',' << format_double(f[j]);
    out << '\n';
  }
  for (Index c = 0; c < bank.num_classes(); ++c) {
    const Vector w = bank.normalized_weight(c);
    out << "W," << c;
    for (Index j = 0; j < w.size(); ++j) out << ',' << format_double(w[j]);
    out << '\n';
  }
  if (!out) throw IoError("export_features: write failed for " + path);
}

void save_model(const Encoder& model, const ClassifierBank& bank,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_model: cannot open " + path);
  out << "# sf2-model v1\n";
  out << "encoder " << model.num_layers() + 1;
  out << ' ' << model.input_dim();
  for (Index l = 0; l < model.num_layers(); ++l)
    out << ' ' << model.weights()[static_cast<std::size_t>(l)].rows();
  out << '\n';
  auto write_matrix = [&](const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j)
        out << (j ? "," : "") << format_double(m(i, j));
      out << '\n';
    }
  };
  for (Index l = 0; l < model.num_layers(); ++l) {
    const auto lu = static_cast<std::size_t>(l);
    write_matrix(model.weights()[lu]);
    write_matrix(model.biases()[lu].transpose());
  }
  out << "bank " << bank.num_classes() << ' ' << bank.dim() << ' '
      << format_double(bank.bias()) << '\n';
  write_matrix(bank.weights());
  if (!out) throw IoError("save_model: write failed for " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_model: cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "# sf2-model v1") throw IoError("load_model: bad magic in " + path);
  std::getline(in, line);
  long long layers = 0;
  std::stringstream head(line);
  std::string tag;
  head >> tag >> layers;
  if (tag != "encoder" || layers < 2) throw IoError("load_model: bad encoder header");
  std::vector<Index> sizes;
  for (long long i = 0; i < layers; ++i) {
    long long s = 0;
    head >> s;
    sizes.push_back(static_cast<Index>(s));
  }
  auto read_row = [&](Index cols) {
    if (!std::getline(in, line)) throw IoError("load_model: truncated " + path);
    std::stringstream ss(line);
    std::string cell;
    Eigen::RowVectorXd dst(cols);
    for (Index j = 0; j < cols; ++j) {
      if (!std::getline(ss, cell, ',')) throw IoError("load_model: short row");
      dst[j] = std::stod(cell);
    }
    return dst;
  };

  Rng dummy(0);
  Encoder model(sizes, dummy);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Matrix w(sizes[l + 1], sizes[l]);
    for (Index i = 0; i < w.rows(); ++i) w.row(i) = read_row(w.cols());
    model.weights()[l] = std::move(w);
    model.biases()[l] = read_row(sizes[l + 1]).transpose();
  }

  std::getline(in, line);
  std::stringstream bank_head(line);
  long long k = 0, d = 0;
  double bias = 0.0;
  bank_head >> tag >> k >> d >> bias;
  if (tag != "bank") throw IoError("load_model: bad bank header");
  Matrix w(static_cast<Index>(k), static_cast<Index>(d));
  for (Index i = 0; i < w.rows(); ++i) w.row(i) = read_row(w.cols());
  return LoadedModel{std::move(model), ClassifierBank(std::move(w), bias)};
}

FeatureExport load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_features: cannot open " + path);
  std::string header;
  std::getline(in, header);
  FeatureExport fe;
  long long k = 0, d = 0;
  if (std::sscanf(header.c_str(), "# K=%lld D_feat=%lld r=%lf m=%lf lambda=%lf t=%lf b=%lf",
                  &k, &d, &fe.r, &fe.m, &fe.lambda, &fe.t, &fe.bias) != 7)
    throw IoError("load_features: bad header in " + path);
  fe.num_classes = static_cast<Index>(k);
  fe.feature_dim = static_cast<Index>(d);
  fe.classifier.resize(fe.num_classes, fe.feature_dim);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.front() == "W") {
      const auto cls = static_cast<Index>(std::stoll(cells[1]));
      for (Index j = 0; j < fe.feature_dim; ++j)
        fe.classifier(cls, j) = std::stod(cells[static_cast<std::size_t>(j) + 2]);
    } else {
      fe.labels.push_back(static_cast<Index>(std::stoll(cells[0])));
      for (std::size_t j = 1; j < cells.size(); ++j) values.push_back(std::stod(cells[j]));
    }
  }
  const auto rows = static_cast<Index>(fe.labels.size());
  fe.features.resize(rows, fe.feature_dim);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < fe.feature_dim; ++j)
      fe.features(i, j) = values[static_cast<std::size_t>(i * fe.feature_dim + j)];
  return fe;
}

}  // namespace sf2
