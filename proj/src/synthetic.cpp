#include "sf2/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sf2/errors.hpp"
#include "sf2/geometry.hpp"

namespace sf2 {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Index SyntheticDataset::num_classes() const {
  if (declared_classes > 0) return declared_classes;
  if (class_means.rows() > 0) return class_means.rows();
  Index k = 0;
  for (Index t : true_labels) k = std::max(k, t + 1);
  return k;
}

SyntheticDataset make_synthetic(Index num_classes, Index input_dim, Index n_per_class,
                                double concentration, std::uint64_t seed) {
  if (num_classes < 2) throw DomainError("make_synthetic: K must be >= 2");
  if (n_per_class < 1) throw DomainError("make_synthetic: n_per_class must be >= 1");
  if (!(concentration > 0.0)) throw DomainError("make_synthetic: concentration must be > 0");

  Rng rng(mix_seed(seed, 0x05));
  SyntheticDataset ds;
  ds.seed = seed;
  ds.declared_classes = num_classes;
  ds.class_means.resize(num_classes, input_dim);
  for (Index k = 0; k < num_classes; ++k) {
    for (;;) {
      const Vector mean = sample_sphere_uniform(input_dim, rng);
      bool duplicate = false;
      for (Index j = 0; j < k; ++j)
        if (mean.dot(ds.class_means.row(j).transpose()) > 1.0 - 1e-12) duplicate = true;
      if (!duplicate) {
        ds.class_means.row(k) = mean.transpose();
        break;
      }
    }
  }

  const Index n = num_classes * n_per_class;
  ds.inputs.resize(n, input_dim);
  ds.labels.resize(static_cast<std::size_t>(n));
  ds.true_labels.resize(static_cast<std::size_t>(n));
  std::normal_distribution<double> normal(0.0, 1.0);
  Index row = 0;
  for (Index k = 0; k < num_classes; ++k) {
    for (Index s = 0; s < n_per_class; ++s, ++row) {
      Vector v(input_dim);
      for (Index j = 0; j < input_dim; ++j) v[j] = normal(rng);
      v = ds.class_means.row(k).transpose() + v / concentration;
      ds.inputs.row(row) = l2_normalize(v).transpose();
      ds.labels[static_cast<std::size_t>(row)] = k;
      ds.true_labels[static_cast<std::size_t>(row)] = k;
    }
  }
  return ds;
}

SyntheticDataset inject_label_noise(const SyntheticDataset& ds, double rate,
                                    std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw DomainError("inject_label_noise: rate must be in [0,1)");
  SyntheticDataset out = ds;
  const Index n = ds.num_samples();
  const auto flips = static_cast<Index>(std::llround(rate * static_cast<double>(n)));
  out.noise_rate = rate;
  out.labels = ds.true_labels;  // restart from clean labels
  if (flips == 0) return out;
  const Index k = ds.num_classes();
  if (k < 2) throw DomainError("inject_label_noise: need K >= 2 to flip labels");

  Rng rng(mix_seed(seed, 0x17));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<Index> wrong(0, k - 2);
  for (Index i = 0; i < flips; ++i) {
    const Index idx = order[static_cast<std::size_t>(i)];
    Index lbl = wrong(rng);
    if (lbl >= ds.true_labels[static_cast<std::size_t>(idx)]) ++lbl;  // skip the true class
    out.labels[static_cast<std::size_t>(idx)] = lbl;
  }
  return out;
}

void save_dataset(const SyntheticDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_dataset: cannot open " + path);
  out << "# K=" << ds.num_classes() << " D=" << ds.input_dim()
      << " noise=" << format_double(ds.noise_rate) << " seed=" << ds.seed << "\n";
  for (Index i = 0; i < ds.num_samples(); ++i) {
    out << ds.labels[static_cast<std::size_t>(i)] << ','
        << ds.true_labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < ds.input_dim(); ++j) out << ',' << format_double(ds.inputs(i, j));
    out << '\n';
  }
  if (!out) throw IoError("save_dataset: write failed for " + path);
}

SyntheticDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_dataset: cannot open " + path);
  std::string header;
  std::getline(in, header);
  long long k = 0, d = 0;
  unsigned long long seed = 0;
  double noise = 0.0;
  if (std::sscanf(header.c_str(), "# K=%lld D=%lld noise=%lf seed=%llu", &k, &d, &noise,
                  &seed) != 4)
    throw IoError("load_dataset: bad header in " + path);

  SyntheticDataset ds;
  ds.noise_rate = noise;
  ds.seed = seed;
  ds.declared_classes = static_cast<Index>(k);
  std::vector<double> values;
  std::string line;
  Index rows = 0;
  std::vector<Index> labels, true_labels;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != static_cast<std::size_t>(d) + 2)
      throw IoError("load_dataset: bad record width in " + path);
    labels.push_back(static_cast<Index>(row[0]));
    true_labels.push_back(static_cast<Index>(row[1]));
    values.insert(values.end(), row.begin() + 2, row.end());
    ++rows;
  }
  ds.inputs.resize(rows, static_cast<Index>(d));
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < d; ++j)
      ds.inputs(i, j) = values[static_cast<std::size_t>(i * d + j)];
  ds.labels = std::move(labels);
  ds.true_labels = std::move(true_labels);
  return ds;
}

std::pair<SyntheticDataset, SyntheticDataset> split_train_val(const SyntheticDataset& ds,
                                                              double val_fraction,
                                                              std::uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw DomainError("split_train_val: val_fraction must be in [0,1)");
  const Index k = ds.num_classes();
  std::vector<std::vector<Index>> per_class(static_cast<std::size_t>(k));
  for (Index i = 0; i < ds.num_samples(); ++i)
    per_class[static_cast<std::size_t>(ds.true_labels[static_cast<std::size_t>(i)])].push_back(i);

  std::vector<Index> train_idx, val_idx;
  for (Index c = 0; c < k; ++c) {
    auto& idx = per_class[static_cast<std::size_t>(c)];
    Rng rng(mix_seed(seed, 0x51u + static_cast<std::uint64_t>(c)));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_val = static_cast<Index>(std::llround(val_fraction * static_cast<double>(idx.size())));
    n_val = std::min<Index>(n_val, static_cast<Index>(idx.size()) - 1);
    n_val = std::max<Index>(n_val, 0);
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < static_cast<std::size_t>(n_val) ? val_idx : train_idx).push_back(idx[i]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  auto subset = [&](const std::vector<Index>& idx) {
    SyntheticDataset out;
    out.class_means = ds.class_means;
    out.noise_rate = ds.noise_rate;
    out.seed = ds.seed;
    out.declared_classes = k;
    out.inputs.resize(static_cast<Index>(idx.size()), ds.input_dim());
    out.labels.reserve(idx.size());
    out.true_labels.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.inputs.row(static_cast<Index>(i)) = ds.inputs.row(idx[i]);
      out.labels.push_back(ds.labels[static_cast<std::size_t>(idx[i])]);
      out.true_labels.push_back(ds.true_labels[static_cast<std::size_t>(idx[i])]);
    }
    return out;
  };
  return {subset(train_idx), subset(val_idx)};
}

}  // namespace sf2
