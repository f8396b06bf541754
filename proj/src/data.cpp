#include "evfuse/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "evfuse/format.hpp"
#include "evfuse/json_io.hpp"

namespace evfuse {

namespace {

// Stream tags; distinct per consumer so that changing one consumer never
// shifts another's draws.
constexpr std::uint64_t kPrototypeStream = 0x70726f74;
constexpr std::uint64_t kLabelStream = 0x6c61626c;
constexpr std::uint64_t kNoiseStream = 0x6e6f6973;

using Prototypes = std::vector<std::vector<double>>;

Prototypes draw_prototypes(const SyntheticConfig& c, Modality m) {
  std::mt19937_64 rng(derive_seed(c.seed, kPrototypeStream + static_cast<int>(m)));
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = c.dim(m);
  Prototypes protos(c.classes, std::vector<double>(d));
  for (auto& p : protos) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& x : p) {
        x = normal(rng);
        norm += x * x;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& x : p) x *= c.separation / norm;
  }
  return protos;
}

std::vector<int> draw_labels(const SyntheticConfig& c) {
  std::vector<int> labels(c.n);
  for (int i = 0; i < c.n; ++i) labels[i] = i % c.classes;
  std::mt19937_64 rng(derive_seed(c.seed, kLabelStream));
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

/// Raw (unstandardized) features of one modality for the given label order.
std::vector<std::vector<double>> draw_modality(const SyntheticConfig& c, Modality m,
                                               std::span<const int> labels) {
  const auto protos = draw_prototypes(c, m);
  const double rho = m == Modality::kFirst ? c.informativeness1 : c.informativeness2;
  const double sigma = m == Modality::kFirst ? c.sigma1 : c.sigma2;
  std::mt19937_64 rng(derive_seed(c.seed, kNoiseStream + static_cast<int>(m)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out;
  out.reserve(labels.size());
  for (int label : labels) {
    if (label < 0 || label >= c.classes) {
      throw std::invalid_argument("label " + std::to_string(label) + " outside generator classes");
    }
    std::vector<double> x(c.dim(m));
    for (int j = 0; j < c.dim(m); ++j) x[j] = rho * protos[label][j] + sigma * normal(rng);
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<int> labels_in_generation_order(const Dataset& d) {
  std::vector<int> labels;
  for (const auto* split : {&d.train, &d.val, &d.test}) {
    for (const auto& s : *split) labels.push_back(s.label);
  }
  return labels;
}

}  // namespace

Modality parse_modality(const std::string& text) {
  if (text == "1" || text == "m1") return Modality::kFirst;
  if (text == "2" || text == "m2") return Modality::kSecond;
  throw std::invalid_argument("modality must be 1 or 2, got '" + text + "'");
}

std::string modality_name(Modality m) { return m == Modality::kFirst ? "m1" : "m2"; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void SyntheticConfig::validate() const {
  if (classes < 2) throw std::invalid_argument("classes must be >= 2");
  if (d1 < 1 || d2 < 1) throw std::invalid_argument("feature dimensions must be >= 1");
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw std::invalid_argument("sigmas must be > 0");
  if (!(separation >= 0.0)) throw std::invalid_argument("separation must be >= 0");
  for (double rho : {informativeness1, informativeness2}) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("informativeness must lie in [0, 1]");
  }
  if (n < 10) throw std::invalid_argument("n must be >= 10 so every split is nonempty");
}

std::array<int, 3> split_sizes(int n) {
  const int train = n * 8 / 10;
  const int val = n / 10;
  return {train, val, n - train - val};
}

Standardizer Standardizer::fit(std::span<const std::vector<double>> x1,
                               std::span<const std::vector<double>> x2) {
  Standardizer s;
  auto fit_one = [](std::span<const std::vector<double>> xs, std::vector<double>& mean,
                    std::vector<double>& scale) {
    const std::size_t d = xs.front().size();
    mean.assign(d, 0.0);
    scale.assign(d, 0.0);
    for (const auto& x : xs) {
      for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
    }
    for (auto& m : mean) m /= static_cast<double>(xs.size());
    for (const auto& x : xs) {
      for (std::size_t j = 0; j < d; ++j) scale[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
    }
    for (auto& v : scale) {
      v = std::sqrt(v / static_cast<double>(xs.size()));
      if (!(v > 0.0)) v = 1.0;
    }
  };
  fit_one(x1, s.mean[0], s.scale[0]);
  fit_one(x2, s.mean[1], s.scale[1]);
  return s;
}

void Standardizer::apply_in_place(std::vector<double>& x, Modality m) const {
  const int i = m == Modality::kFirst ? 0 : 1;
  if (x.size() != mean[i].size()) throw std::invalid_argument("standardizer dimension mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean[i][j]) / scale[i][j];
}

Dataset generate(const SyntheticConfig& config) {
  config.validate();
  const auto labels = draw_labels(config);
  auto x1 = draw_modality(config, Modality::kFirst, labels);
  auto x2 = draw_modality(config, Modality::kSecond, labels);

  const auto [n_train, n_val, n_test] = split_sizes(config.n);
  Dataset d;
  d.config = config;
  d.standardizer = Standardizer::fit(std::span(x1).first(n_train), std::span(x2).first(n_train));
  for (int i = 0; i < config.n; ++i) {
    Sample s{std::move(x1[i]), std::move(x2[i]), labels[i]};
    d.standardizer.apply_in_place(s.x1, Modality::kFirst);
    d.standardizer.apply_in_place(s.x2, Modality::kSecond);
    auto& split = i < n_train ? d.train : (i < n_train + n_val ? d.val : d.test);
    split.push_back(std::move(s));
  }
  return d;
}

std::vector<double> corrupt_gaussian(std::span<const double> x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  std::vector<double> out(x.begin(), x.end());
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : out) v += normal(rng);
  return out;
}

std::vector<Sample> corrupt_split(std::span<const Sample> samples, Modality which, double sigma,
                                  std::uint64_t seed) {
  std::vector<Sample> out(samples.begin(), samples.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& x = which == Modality::kFirst ? out[i].x1 : out[i].x2;
    x = corrupt_gaussian(x, sigma, derive_seed(seed, i));
  }
  return out;
}

Sample mask_modality(Sample sample, Modality which) {
  auto& x = which == Modality::kFirst ? sample.x1 : sample.x2;
  std::fill(x.begin(), x.end(), 0.0);
  return sample;
}

Dataset make_near_ood(const Dataset& source, const SyntheticConfig& foreign, Modality which) {
  foreign.validate();
  if (foreign.dim(which) != source.config.dim(which)) {
    throw std::invalid_argument("near-OOD generator dimension differs from the source modality");
  }
  const auto labels = labels_in_generation_order(source);
  auto replacement = draw_modality(foreign, which, labels);

  Dataset out = source;
  std::size_t i = 0;
  for (auto* split : {&out.train, &out.val, &out.test}) {
    for (auto& s : *split) {
      auto& x = which == Modality::kFirst ? s.x1 : s.x2;
      x = std::move(replacement[i++]);
      out.standardizer.apply_in_place(x, which);
    }
  }
  return out;
}

void write_samples(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::size_t d1 = samples.empty() ? 0 : samples.front().x1.size();
  const std::size_t d2 = samples.empty() ? 0 : samples.front().x2.size();
  out << "label";
  for (std::size_t j = 0; j < d1; ++j) out << ",x1_" << j;
  for (std::size_t j = 0; j < d2; ++j) out << ",x2_" << j;
  out << '\n';
  for (const auto& s : samples) {
    if (s.x1.size() != d1 || s.x2.size() != d2) {
      throw std::invalid_argument("samples in one file must share dimensions");
    }
    out << s.label;
    for (double v : s.x1) out << ',' << format_real(v);
    for (double v : s.x2) out << ',' << format_real(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<Sample> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");

  std::size_t d1 = 0, d2 = 0;
  {
    std::stringstream header(line);
    std::string field;
    std::getline(header, field, ',');
    if (field != "label") throw std::runtime_error(path.string() + ": header must start with 'label'");
    while (std::getline(header, field, ',')) {
      if (field.rfind("x1_", 0) == 0 && d2 == 0) {
        ++d1;
      } else if (field.rfind("x2_", 0) == 0) {
        ++d2;
      } else {
        throw std::runtime_error(path.string() + ": unexpected column '" + field + "'");
      }
    }
  }

  std::vector<Sample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 1 + d1 + d2) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(1 + d1 + d2) + " fields");
    }
    Sample s;
    s.label = parse_int(fields[0]);
    for (std::size_t j = 0; j < d1; ++j) s.x1.push_back(parse_real(fields[1 + j]));
    for (std::size_t j = 0; j < d2; ++j) s.x2.push_back(parse_real(fields[1 + d1 + j]));
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  write_samples(dir / "train.csv", dataset.train);
  write_samples(dir / "val.csv", dataset.val);
  write_samples(dir / "test.csv", dataset.test);
  nlohmann::json meta;
  meta["format"] = "evfuse-dataset";
  meta["version"] = 1;
  meta["config"] = dataset.config;
  meta["standardizer"] = dataset.standardizer;
  std::ofstream out(dir / "meta.json", std::ios::binary);
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + (dir / "meta.json").string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json", std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + (dir / "meta.json").string());
  const auto meta = nlohmann::json::parse(in);
  if (meta.at("format") != "evfuse-dataset" || meta.at("version") != 1) {
    throw std::runtime_error("unsupported dataset metadata in " + dir.string());
  }
  Dataset d;
  d.config = meta.at("config").get<SyntheticConfig>();
  d.standardizer = meta.at("standardizer").get<Standardizer>();
  d.train = read_samples(dir / "train.csv");
  d.val = read_samples(dir / "val.csv");
  d.test = read_samples(dir / "test.csv");
  for (const auto* split : {&d.train, &d.val, &d.test}) {
    for (const auto& s : *split) {
      if (static_cast<int>(s.x1.size()) != d.config.d1 || static_cast<int>(s.x2.size()) != d.config.d2) {
        throw std::runtime_error("dataset files disagree with meta.json dimensions");
      }
    }
  }
  return d;
}

}  // namespace evfuse
