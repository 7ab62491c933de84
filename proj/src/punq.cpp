#include "crdext/punq.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "crdext/error.hpp"

namespace crdext {

static_assert(std::endian::native == std::endian::little, "model files are written little-endian");

PunqModel PunqModel::zeros(FeatLayout layout, std::size_t hidden) {
  if (hidden < 2 || hidden % 2 != 0) throw Error(ErrorKind::Config, "hidden width must be even and >= 2");
  PunqModel m;
  m.params = PunqParams<float>(layout.length(), hidden);
  m.layout = std::move(layout);
  return m;
}

PunqModel PunqModel::initialized(FeatLayout layout, std::size_t hidden, std::uint64_t seed) {
  auto m = zeros(std::move(layout), hidden);
  std::mt19937_64 rng(seed);
  auto fill = [&](auto block, std::size_t fan_in, std::size_t fan_out) {
    const float r = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    std::uniform_real_distribution<float> u(-r, r);
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = u(rng);
  };
  const std::size_t L = m.layout.length(), H = hidden;
  fill(m.params.U_mid(), L, H);
  fill(m.params.U_out1(), H, H / 2);
  fill(m.params.U_out2(), H / 2, 1);
  return m;
}

double predict(const PunqModel& model, const FeatureSet& set) {
  return static_cast<double>(punq_forward_one(model.params, set));
}

double predict(const PunqModel& model, const ConjunctiveQuery& q) { return predict(model, featurize(q, model.layout)); }

double q_error(double y, double yhat) {
  if (!(y > 0.0) || !(yhat > 0.0)) throw Error(ErrorKind::Domain, "q-error needs positive arguments");
  return qerror_value(y, yhat);
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(0.5 * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<double> qerrors(const PunqParams<float>& p, const std::vector<FeatureSet>& feats,
                            const std::vector<float>& labels, const std::vector<std::size_t>& idx) {
  constexpr std::size_t kChunk = 512;
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t s = 0; s < idx.size(); s += kChunk) {
    std::vector<const FeatureSet*> batch;
    for (std::size_t k = s; k < std::min(idx.size(), s + kChunk); ++k) batch.push_back(&feats[idx[k]]);
    auto y = punq_forward(p, batch);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      double yc = std::clamp(static_cast<double>(y[k]), kUniquenessEps, 1.0);
      out.push_back(qerror_value(static_cast<double>(labels[idx[s + k]]), yc));
    }
  }
  return out;
}

struct Adam {
  explicit Adam(std::size_t n, float lr) : lr(lr), m(n, 0.0f), v(n, 0.0f) {}

  void step(PunqParams<float>::Buffer& w, const PunqParams<float>::Buffer& g) {
    ++t;
    const float c1 = 1.0f - std::pow(b1, static_cast<float>(t));
    const float c2 = 1.0f - std::pow(b2, static_cast<float>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }

  float lr;
  float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
  std::vector<float> m, v;
  std::uint64_t t = 0;
};

}  // namespace

TrainResult train(const std::vector<LabeledSample>& data, const FeatLayout& layout, const TrainParams& hp) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "no training samples");
  if (hp.batch == 0 || hp.max_epochs == 0) throw Error(ErrorKind::Config, "batch and max_epochs must be positive");
  std::vector<FeatureSet> feats;
  std::vector<float> labels;
  feats.reserve(data.size());
  for (const auto& s : data) {
    if (!(s.uniqueness > 0.0 && s.uniqueness <= 1.0))
      throw Error(ErrorKind::Domain, "uniqueness label " + std::to_string(s.uniqueness) + " outside (0, 1]");
    feats.push_back(featurize(s.query, layout));
    labels.push_back(static_cast<float>(s.uniqueness));
  }

  std::mt19937_64 rng(hp.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = data.size() < 2 ? 0 : static_cast<std::size_t>(std::llround(hp.val_fraction * static_cast<double>(data.size())));
  n_val = std::min(n_val, data.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  if (val.empty()) val = tr;

  TrainResult res;
  res.model = PunqModel::initialized(layout, hp.hidden, hp.seed);
  res.model.meta.seed = hp.seed;
  res.model.meta.train_size = tr.size();
  res.model.meta.val_size = n_val;

  auto& params = res.model.params;
  Adam adam(params.size(), static_cast<float>(hp.lr));
  PunqParams<float> grad;
  PunqParams<float> best = params;
  double best_val = std::numeric_limits<double>::infinity();
  std::uint32_t best_epoch = 0;

  for (std::uint32_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    std::shuffle(tr.begin(), tr.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t s = 0; s < tr.size(); s += hp.batch) {
      std::vector<const FeatureSet*> batch;
      std::vector<float> y;
      for (std::size_t k = s; k < std::min(tr.size(), s + hp.batch); ++k) {
        batch.push_back(&feats[tr[k]]);
        y.push_back(labels[tr[k]]);
      }
      float loss = punq_loss(params, batch, y, static_cast<float>(kUniquenessEps), &grad);
      if (!std::isfinite(loss))
        throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batches) +
                                                  ": loss " + std::to_string(loss));
      adam.step(params.data(), grad.data());
      loss_sum += loss;
      ++batches;
    }

    auto q = qerrors(params, feats, labels, val);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(batches), mean_of(q), median_of(q)};
    res.log.epochs.push_back(rec);
    if (rec.val_mean_qerror < best_val) {
      best_val = rec.val_mean_qerror;
      best_epoch = epoch;
      best = params;
    } else if (epoch - best_epoch >= hp.patience) {
      res.log.stopped_early = true;
      break;
    }
  }
  params = std::move(best);
  res.model.meta.epochs = static_cast<std::uint32_t>(res.log.epochs.size());
  res.model.meta.best_epoch = best_epoch;
  res.model.meta.best_val_qerror = best_val;
  return res;
}

QErrorSummary evaluate_qerror(const PunqModel& model, const std::vector<LabeledSample>& data) {
  std::vector<FeatureSet> feats;
  std::vector<float> labels;
  for (const auto& s : data) {
    feats.push_back(featurize(s.query, model.layout));
    labels.push_back(static_cast<float>(s.uniqueness));
  }
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto q = qerrors(model.params, feats, labels, idx);
  return {mean_of(q), median_of(q)};
}

void check_compatible(const PunqModel& model, const Schema& schema) {
  if (!model.layout.compatible_with(schema))
    throw Error(ErrorKind::DimMismatch, "model layout does not match the database schema");
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[8] = {'C', 'R', 'D', 'P', 'U', 'N', 'Q', '\0'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '\0'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() {
    auto n = get<std::uint32_t>();
    if (n > 4096) throw Error(ErrorKind::Io, "model file: implausible name length");
    return bytes(n);
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorKind::Io, "model file is truncated");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const PunqModel& m) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kModelFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.layout.variant));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.layout.nT()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.layout.nC()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.layout.nO()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.hidden()));
  w.put<std::uint64_t>(m.layout.length());
  for (const auto& t : m.layout.tables) w.str(t);
  for (std::size_t c = 0; c < m.layout.nC(); ++c) {
    w.str(m.layout.columns[c].qualified());
    w.put<std::int64_t>(m.layout.col_min[c]);
    w.put<std::int64_t>(m.layout.col_max[c]);
  }
  w.put<std::uint32_t>(m.meta.epochs);
  w.put<std::uint32_t>(m.meta.best_epoch);
  w.put<double>(m.meta.best_val_qerror);
  w.put<std::uint64_t>(m.meta.seed);
  w.put<std::uint64_t>(m.meta.train_size);
  w.put<std::uint64_t>(m.meta.val_size);
  w.put<std::uint64_t>(m.params.size());
  w.bytes(reinterpret_cast<const char*>(m.params.data().data()), m.params.size() * sizeof(float));
  w.bytes(kTrailer, sizeof kTrailer);
  return w.take();
}

PunqModel deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw Error(ErrorKind::Io, "not a uniqueness model file");
  auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion)
    throw Error(ErrorKind::VersionMismatch, "model format version " + std::to_string(version) + ", expected " +
                                                std::to_string(kModelFormatVersion));
  auto variant = r.get<std::uint32_t>();
  if (variant > 1) throw Error(ErrorKind::VersionMismatch, "unknown feature layout variant");
  auto nT = r.get<std::uint32_t>();
  auto nC = r.get<std::uint32_t>();
  auto nO = r.get<std::uint32_t>();
  auto H = r.get<std::uint32_t>();
  auto L = r.get<std::uint64_t>();
  auto fv = static_cast<FeatVariant>(variant);
  if (nO != kNumOps || L != FeatLayout::length_for(nT, nC, fv) || H < 2 || H % 2 != 0)
    throw Error(ErrorKind::DimMismatch, "inconsistent model dimensions");

  FeatLayout layout;
  layout.variant = fv;
  for (std::uint32_t i = 0; i < nT; ++i) layout.tables.push_back(r.str());
  for (std::uint32_t i = 0; i < nC; ++i) {
    layout.columns.push_back(ColumnRef::parse(r.str()));
    layout.col_min.push_back(r.get<std::int64_t>());
    layout.col_max.push_back(r.get<std::int64_t>());
  }
  PunqModel m = PunqModel::zeros(std::move(layout), H);
  m.meta.epochs = r.get<std::uint32_t>();
  m.meta.best_epoch = r.get<std::uint32_t>();
  m.meta.best_val_qerror = r.get<double>();
  m.meta.seed = r.get<std::uint64_t>();
  m.meta.train_size = r.get<std::uint64_t>();
  m.meta.val_size = r.get<std::uint64_t>();
  auto n = r.get<std::uint64_t>();
  if (n != m.params.size()) throw Error(ErrorKind::DimMismatch, "weight count does not match dimensions");
  auto raw = r.bytes(n * sizeof(float));
  std::memcpy(m.params.data().data(), raw.data(), raw.size());
  if (r.bytes(sizeof kTrailer) != std::string(kTrailer, sizeof kTrailer) || r.remaining() != 0)
    throw Error(ErrorKind::Io, "model file has a corrupt trailer");
  for (float x : m.params.data())
    if (!std::isfinite(x)) throw Error(ErrorKind::Io, "model file contains non-finite weights");
  return m;
}

void save(const PunqModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  auto bytes = serialize(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

PunqModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace crdext
