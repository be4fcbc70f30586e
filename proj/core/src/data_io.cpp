#include "dml/data_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "dml/errors.hpp"
#include "dml/rng.hpp"

namespace dml {

namespace {

constexpr char kFeatureMagic[8] = {'D', 'M', 'L', 'F', 'E', 'A', 'T', '\x01'};
constexpr char kCheckpointMagic[8] = {'D', 'M', 'L', 'C', 'K', 'P', 'T', '\x01'};
constexpr std::uint32_t kFormatVersion = 1;

// Little-endian writers/readers. The build targets LE hosts; a raw copy
// keeps doubles bit-exact.
template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CorruptCheckpoint(std::string("truncated while reading ") + what);
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is, const char* what, std::uint64_t max_len) {
  const auto len = get<std::uint64_t>(is, what);
  if (len > max_len) throw CorruptCheckpoint(std::string("implausible length for ") + what);
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw CorruptCheckpoint(std::string("truncated while reading ") + what);
  return s;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is, const char* what,
                                std::uint64_t expected = 0) {
  const auto n = get<std::uint64_t>(is, what);
  if (n > (1ull << 32)) throw CorruptCheckpoint(std::string("implausible size for ") + what);
  if (expected != 0 && n != expected)
    throw CorruptCheckpoint(std::string("size mismatch for ") + what);
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw CorruptCheckpoint(std::string("truncated while reading ") + what);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::map<int, Matrix> Dataset::features_by_class() const {
  std::map<int, std::vector<std::size_t>> rows;
  for (std::size_t r = 0; r < labels.size(); ++r) rows[labels[r]].push_back(r);
  std::map<int, Matrix> out;
  for (const auto& [cls, idx] : rows) {
    Matrix m(idx.size(), features.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = features.row(idx[i]);
      std::copy(src.begin(), src.end(), m.row(i).begin());
    }
    out[cls] = std::move(m);
  }
  return out;
}

std::pair<Dataset, Dataset> synthesize(const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  const std::size_t half = cfg.num_classes / 2;
  Dataset train, test;
  train.split = Split::Train;
  test.split = Split::Test;
  const std::size_t n_train = half * cfg.samples_per_class;
  const std::size_t n_test = (cfg.num_classes - half) * cfg.samples_per_class;
  train.features = Matrix(n_train, cfg.input_dim);
  test.features = Matrix(n_test, cfg.input_dim);

  std::size_t tr = 0, te = 0;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    // Class center: uniform direction on the unit hypersphere.
    Vector center(cfg.input_dim);
    double n = 0.0;
    do {
      for (double& x : center) x = standard_normal(rng);
      n = norm2(center);
    } while (n <= kNormEpsilon);
    for (double& x : center) x /= n;

    const bool is_train = c < half;
    Dataset& ds = is_train ? train : test;
    const int label = static_cast<int>(ds.label_names.size());
    ds.label_names.push_back("c" + std::to_string(c));
    for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
      auto row = ds.features.row(is_train ? tr++ : te++);
      for (std::size_t k = 0; k < cfg.input_dim; ++k)
        row[k] = center[k] + cfg.noise_sigma * standard_normal(rng);
      ds.labels.push_back(label);
    }
  }
  return {std::move(train), std::move(test)};
}

void check_disjoint_labels(const Dataset& train, const Dataset& test) {
  std::set<std::string> names(train.label_names.begin(), train.label_names.end());
  for (const auto& n : test.label_names)
    if (names.contains(n))
      throw Error("train and test label sets overlap on '" + n + "'");
}

void save_features(const Dataset& dataset, const std::string& path, bool binary) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  if (binary) {
    os.write(kFeatureMagic, sizeof(kFeatureMagic));
    put<std::uint32_t>(os, kFormatVersion);
    put<std::uint64_t>(os, dataset.features.rows);
    put<std::uint64_t>(os, dataset.features.cols);
    put<std::uint64_t>(os, dataset.label_names.size());
    for (const auto& n : dataset.label_names) put_string(os, n);
    for (int l : dataset.labels) put<std::int32_t>(os, l);
    os.write(reinterpret_cast<const char*>(dataset.features.values.data()),
             static_cast<std::streamsize>(dataset.features.values.size() *
                                          sizeof(double)));
  } else {
    os << "# n=" << dataset.features.rows << " d=" << dataset.features.cols << "\n";
    for (std::size_t r = 0; r < dataset.features.rows; ++r) {
      os << dataset.label_names[dataset.labels[r]];
      for (double v : dataset.features.row(r)) os << ',' << format_double(v);
      os << "\n";
    }
  }
  if (!os) throw IoError("write failed on " + path);
}

namespace {

Dataset load_features_text(std::istream& is, const std::string& path) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, int> name_to_id;
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string label;
    if (!std::getline(ss, label, ','))
      throw ParseError(path + ":" + std::to_string(line_no) + ": missing label");
    // trim surrounding whitespace
    const auto b = label.find_first_not_of(" \t");
    const auto e = label.find_last_not_of(" \t\r");
    if (b == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty label");
    label = label.substr(b, e - b + 1);

    std::vector<double> values;
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used])))
          ++used;
        if (used != tok.size()) throw std::invalid_argument(tok);
        values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad value '" + tok +
                         "'");
      }
    }
    if (values.empty())
      throw ParseError(path + ":" + std::to_string(line_no) + ": no feature values");
    if (dim == 0) dim = values.size();
    if (values.size() != dim)
      throw DimInconsistent(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(dim) + " values, got " +
                            std::to_string(values.size()));
    auto [it, inserted] = name_to_id.try_emplace(label, static_cast<int>(ds.label_names.size()));
    if (inserted) ds.label_names.push_back(label);
    ds.labels.push_back(it->second);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  ds.features = Matrix(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), ds.features.row(r).begin());
  return ds;
}

Dataset load_features_binary(std::istream& is, const std::string& path) {
  try {
    const auto version = get<std::uint32_t>(is, "version");
    if (version != kFormatVersion)
      throw VersionMismatch(path + ": unsupported feature format version " +
                            std::to_string(version));
    Dataset ds;
    const auto n = get<std::uint64_t>(is, "row count");
    const auto d = get<std::uint64_t>(is, "dim");
    const auto names = get<std::uint64_t>(is, "label name count");
    if (n == 0 || d == 0 || names == 0 || n > (1ull << 32))
      throw ParseError(path + ": implausible header");
    for (std::uint64_t i = 0; i < names; ++i)
      ds.label_names.push_back(get_string(is, "label name", 1 << 20));
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto l = get<std::int32_t>(is, "label");
      if (l < 0 || static_cast<std::uint64_t>(l) >= names)
        throw ParseError(path + ": label id out of range");
      ds.labels.push_back(l);
    }
    ds.features = Matrix(n, d);
    is.read(reinterpret_cast<char*>(ds.features.values.data()),
            static_cast<std::streamsize>(n * d * sizeof(double)));
    if (!is) throw ParseError(path + ": truncated feature payload");
    return ds;
  } catch (const CorruptCheckpoint& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace

Dataset load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[8] = {};
  is.read(magic, sizeof(magic));
  if (is && std::memcmp(magic, kFeatureMagic, sizeof(magic)) == 0)
    return load_features_binary(is, path);
  is.clear();
  is.seekg(0);
  return load_features_text(is, path);
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(os, kFormatVersion);
  put_string(os, ckpt.config_echo);
  put<std::uint64_t>(os, ckpt.iteration);

  put<std::uint64_t>(os, ckpt.net.layers.size());
  for (const Layer& l : ckpt.net.layers) {
    put<std::uint64_t>(os, l.weights.rows);
    put<std::uint64_t>(os, l.weights.cols);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(l.activation));
    put_doubles(os, l.weights.values);
    put_doubles(os, l.bias);
  }

  put<std::uint64_t>(os, ckpt.adam.t);
  put<double>(os, ckpt.adam.beta1);
  put<double>(os, ckpt.adam.beta2);
  put<double>(os, ckpt.adam.epsilon);
  put_doubles(os, ckpt.adam.m);
  put_doubles(os, ckpt.adam.v);

  put<std::uint64_t>(os, ckpt.density.alphas.size());
  for (const auto& [cls, alpha] : ckpt.density.alphas) {
    put<std::int32_t>(os, cls);
    put<double>(os, alpha);
    put<double>(os, ckpt.density.d0.at(cls));
  }
  put<double>(os, ckpt.density.eta);
  put<double>(os, ckpt.density.lambda);
  put<std::uint8_t>(os, ckpt.density.global_class_normalization ? 1 : 0);

  put_string(os, ckpt.rng_state);
  if (!os) throw IoError("write failed on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[8] = {};
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw CorruptCheckpoint(path + ": bad checkpoint magic");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kFormatVersion)
    throw VersionMismatch(path + ": unsupported checkpoint version " +
                          std::to_string(version));

  Checkpoint ckpt;
  ckpt.config_echo = get_string(is, "config echo", 1 << 20);
  ckpt.iteration = get<std::uint64_t>(is, "iteration");

  const auto num_layers = get<std::uint64_t>(is, "layer count");
  if (num_layers == 0 || num_layers > 64)
    throw CorruptCheckpoint(path + ": implausible layer count");
  for (std::uint64_t i = 0; i < num_layers; ++i) {
    Layer l;
    const auto rows = get<std::uint64_t>(is, "layer rows");
    const auto cols = get<std::uint64_t>(is, "layer cols");
    const auto act = get<std::uint8_t>(is, "activation");
    if (act > 1) throw CorruptCheckpoint(path + ": unknown activation tag");
    l.activation = static_cast<Activation>(act);
    l.weights.rows = rows;
    l.weights.cols = cols;
    l.weights.values = get_doubles(is, "layer weights", rows * cols);
    l.bias = get_doubles(is, "layer bias", rows);
    ckpt.net.layers.push_back(std::move(l));
  }
  for (std::size_t i = 1; i < ckpt.net.layers.size(); ++i)
    if (ckpt.net.layers[i].weights.cols != ckpt.net.layers[i - 1].weights.rows)
      throw CorruptCheckpoint(path + ": layer dimensions do not chain");

  ckpt.adam.t = get<std::uint64_t>(is, "adam t");
  ckpt.adam.beta1 = get<double>(is, "adam beta1");
  ckpt.adam.beta2 = get<double>(is, "adam beta2");
  ckpt.adam.epsilon = get<double>(is, "adam epsilon");
  ckpt.adam.m = get_doubles(is, "adam m");
  ckpt.adam.v = get_doubles(is, "adam v");
  if (ckpt.adam.m.size() != ckpt.adam.v.size())
    throw CorruptCheckpoint(path + ": adam moment sizes disagree");

  const auto num_classes = get<std::uint64_t>(is, "density class count");
  if (num_classes > (1ull << 24))
    throw CorruptCheckpoint(path + ": implausible class count");
  for (std::uint64_t i = 0; i < num_classes; ++i) {
    const auto cls = get<std::int32_t>(is, "class id");
    ckpt.density.alphas[cls] = get<double>(is, "alpha");
    ckpt.density.d0[cls] = get<double>(is, "d0");
  }
  ckpt.density.eta = get<double>(is, "eta");
  ckpt.density.lambda = get<double>(is, "lambda");
  ckpt.density.global_class_normalization = get<std::uint8_t>(is, "normalization flag") != 0;

  ckpt.rng_state = get_string(is, "rng state", 1 << 20);

  if (ckpt.adam.t > 0 &&
      ckpt.adam.m.size() != ckpt.net.param_count() + ckpt.density.alphas.size())
    throw CorruptCheckpoint(path + ": adam moments do not match parameter count");
  return ckpt;
}

}  // namespace dml
