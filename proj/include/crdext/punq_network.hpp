#pragma once

// Set-pooling MLP used by the uniqueness model, templated on the scalar so
// gradients can be checked in double while production weights stay float.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "crdext/featurize.hpp"

namespace crdext {

/// All six parameter blocks in one contiguous buffer:
/// U_mid (L x H), b_mid (H), U_out1 (H x H/2), b_out1 (H/2), U_out2 (H/2), b_out2.
template <class S>
class PunqParams {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;
  // Aligned so Eigen's kernels see the same alignment on every run; the
  // summation order, and so the bits of the result, depend on it.
  using Buffer = std::vector<S, Eigen::aligned_allocator<S>>;

  PunqParams() = default;
  PunqParams(std::size_t L, std::size_t H) : L_(L), H_(H), data_(size_for(L, H), S(0)) {}

  static std::size_t size_for(std::size_t L, std::size_t H) { return L * H + H + H * (H / 2) + H / 2 + H / 2 + 1; }

  std::size_t input_dim() const { return L_; }
  std::size_t hidden() const { return H_; }
  std::size_t size() const { return data_.size(); }
  Buffer& data() { return data_; }
  const Buffer& data() const { return data_; }

  Eigen::Map<Mat> U_mid() { return {data_.data(), rows(L_), cols(H_)}; }
  Eigen::Map<const Mat> U_mid() const { return {data_.data(), rows(L_), cols(H_)}; }
  Eigen::Map<RowVec> b_mid() { return {data_.data() + off_bmid(), cols(H_)}; }
  Eigen::Map<const RowVec> b_mid() const { return {data_.data() + off_bmid(), cols(H_)}; }
  Eigen::Map<Mat> U_out1() { return {data_.data() + off_u1(), rows(H_), cols(H_ / 2)}; }
  Eigen::Map<const Mat> U_out1() const { return {data_.data() + off_u1(), rows(H_), cols(H_ / 2)}; }
  Eigen::Map<RowVec> b_out1() { return {data_.data() + off_b1(), cols(H_ / 2)}; }
  Eigen::Map<const RowVec> b_out1() const { return {data_.data() + off_b1(), cols(H_ / 2)}; }
  Eigen::Map<Vec> U_out2() { return {data_.data() + off_u2(), rows(H_ / 2)}; }
  Eigen::Map<const Vec> U_out2() const { return {data_.data() + off_u2(), rows(H_ / 2)}; }
  S& b_out2() { return data_.back(); }
  S b_out2() const { return data_.back(); }

  void set_zero() { std::fill(data_.begin(), data_.end(), S(0)); }

  template <class T>
  PunqParams<T> cast() const {
    PunqParams<T> out(L_, H_);
    std::transform(data_.begin(), data_.end(), out.data().begin(), [](S x) { return static_cast<T>(x); });
    return out;
  }

 private:
  static Eigen::Index rows(std::size_t n) { return static_cast<Eigen::Index>(n); }
  static Eigen::Index cols(std::size_t n) { return static_cast<Eigen::Index>(n); }
  std::size_t off_bmid() const { return L_ * H_; }
  std::size_t off_u1() const { return off_bmid() + H_; }
  std::size_t off_b1() const { return off_u1() + H_ * (H_ / 2); }
  std::size_t off_u2() const { return off_b1() + H_ / 2; }

  std::size_t L_ = 0;
  std::size_t H_ = 0;
  Buffer data_;
};

template <class S>
S sigmoid(S z) {
  if (z >= S(0)) return S(1) / (S(1) + std::exp(-z));
  S e = std::exp(z);
  return e / (S(1) + e);
}

namespace detail {

template <class S>
void mid_pre(const PunqParams<S>& p, const SparseVec& v, typename PunqParams<S>::RowVec& h) {
  h = p.b_mid();
  auto U = p.U_mid();
  for (auto [i, x] : v.entries) h.noalias() += static_cast<S>(x) * U.row(static_cast<Eigen::Index>(i));
}

/// Qvec = mean over V of ReLU(v U_mid + b_mid), summed in the order given.
template <class S>
void pool(const PunqParams<S>& p, const FeatureSet& set, Eigen::Ref<typename PunqParams<S>::RowVec> out) {
  typename PunqParams<S>::RowVec h(p.hidden());
  out.setZero();
  for (const auto& v : set) {
    mid_pre(p, v, h);
    out += h.cwiseMax(S(0));
  }
  if (!set.empty()) out /= static_cast<S>(set.size());
}

}  // namespace detail

/// Forward pass for a batch; returns sigmoid outputs in (0, 1).
template <class S>
std::vector<S> punq_forward(const PunqParams<S>& p, const std::vector<const FeatureSet*>& batch) {
  using Mat = typename PunqParams<S>::Mat;
  const auto B = static_cast<Eigen::Index>(batch.size());
  Mat Q(B, static_cast<Eigen::Index>(p.hidden()));
  for (Eigen::Index i = 0; i < B; ++i) detail::pool(p, *batch[static_cast<std::size_t>(i)], Q.row(i));
  Mat A1 = ((Q * p.U_out1()).rowwise() + p.b_out1()).cwiseMax(S(0));
  Eigen::Matrix<S, Eigen::Dynamic, 1> z = A1 * p.U_out2();
  std::vector<S> y(batch.size());
  for (Eigen::Index i = 0; i < B; ++i) y[static_cast<std::size_t>(i)] = sigmoid<S>(z(i) + p.b_out2());
  return y;
}

template <class S>
S punq_forward_one(const PunqParams<S>& p, const FeatureSet& set) {
  return punq_forward(p, std::vector<const FeatureSet*>{&set}).front();
}

/// max(y / yhat, yhat / y) for positive arguments.
template <class S>
S qerror_value(S y, S yhat) {
  return yhat > y ? yhat / y : y / yhat;
}

/// Mean q-error of the batch against clamp(yhat, eps, 1). When grad is not
/// null it receives the gradient of that loss w.r.t. every parameter; the
/// clamp and the y == yhat point use subgradient 0.
template <class S>
S punq_loss(const PunqParams<S>& p, const std::vector<const FeatureSet*>& batch, const std::vector<S>& labels, S eps,
            PunqParams<S>* grad) {
  using Mat = typename PunqParams<S>::Mat;
  using RowVec = typename PunqParams<S>::RowVec;
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto H = static_cast<Eigen::Index>(p.hidden());
  Mat Q(B, H);
  for (Eigen::Index i = 0; i < B; ++i) detail::pool(p, *batch[static_cast<std::size_t>(i)], Q.row(i));
  Mat Z1 = (Q * p.U_out1()).rowwise() + p.b_out1();
  Mat A1 = Z1.cwiseMax(S(0));
  Eigen::Matrix<S, Eigen::Dynamic, 1> z2 = A1 * p.U_out2();

  S loss = 0;
  Eigen::Matrix<S, Eigen::Dynamic, 1> dz2(B);
  for (Eigen::Index i = 0; i < B; ++i) {
    const S y = labels[static_cast<std::size_t>(i)];
    const S yhat = sigmoid<S>(z2(i) + p.b_out2());
    const S yc = std::clamp(yhat, eps, S(1));
    loss += qerror_value(y, yc);
    S d = 0;
    if (yc == yhat) {
      if (yc > y) d = S(1) / y;
      else if (yc < y) d = -y / (yc * yc);
    }
    dz2(i) = d * yhat * (S(1) - yhat) / static_cast<S>(B);
  }
  loss /= static_cast<S>(B);
  if (!grad) return loss;

  *grad = PunqParams<S>(p.input_dim(), p.hidden());
  grad->U_out2().noalias() = A1.transpose() * dz2;
  grad->b_out2() = dz2.sum();
  Mat dZ1 = (dz2 * p.U_out2().transpose()).cwiseProduct((Z1.array() > S(0)).matrix().template cast<S>());
  grad->U_out1().noalias() = Q.transpose() * dZ1;
  grad->b_out1() = dZ1.colwise().sum();
  Mat dQ = dZ1 * p.U_out1().transpose();

  auto gU = grad->U_mid();
  auto gb = grad->b_mid();
  RowVec h(H), dh(H);
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto& set = *batch[static_cast<std::size_t>(i)];
    if (set.empty()) continue;
    const S inv = S(1) / static_cast<S>(set.size());
    for (const auto& v : set) {
      detail::mid_pre(p, v, h);
      dh = (dQ.row(i) * inv).cwiseProduct((h.array() > S(0)).matrix().template cast<S>());
      gb += dh;
      for (auto [j, x] : v.entries) gU.row(static_cast<Eigen::Index>(j)) += static_cast<S>(x) * dh;
    }
  }
  return loss;
}

}  // namespace crdext
