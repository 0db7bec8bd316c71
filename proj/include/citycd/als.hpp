// Copyright 2026 The citycd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Implicit-feedback matrix factorization fitted by alternating least squares.
//
// Preference p_ui = 1 on observed pairs, 0 elsewhere; confidence
// c_ui = 1 + alpha on observed pairs (ratings are binary after dedup), 1
// elsewhere. Each half-sweep solves, per row,
//
//   (Y^T Y + alpha * sum_{i in L^u} y_i y_i^T + lambda I) x_u
//       = (1 + alpha) * sum_{i in L^u} y_i
//
// which is the exact minimizer of
//   J = sum_ui c_ui (p_ui - x_u^T y_i)^2 + lambda (sum |x_u|^2 + sum |y_i|^2)
// over that row, so J never increases across sweeps.

#ifndef CITYCD_ALS_HPP_
#define CITYCD_ALS_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "citycd/core.hpp"
#include "citycd/error.hpp"
#include "citycd/interactions.hpp"
#include "citycd/parallel.hpp"
#include "citycd/recommenders.hpp"

namespace citycd {

struct FactorModelParams {
  std::size_t factors = 10;
  double confidence_alpha = 1.0;
  double lambda = 0.1;
  std::size_t iterations = 20;
  // Early stop once |J_prev - J| / J_prev drops below this; 0 disables.
  double tolerance = 1e-4;
  std::uint64_t seed = 0x5eed;

  void validate() const {
    if (factors < 1) throw ConfigError("factors must be >= 1");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (!std::isfinite(confidence_alpha) || confidence_alpha <= 0.0) {
      throw ConfigError("confidence alpha must be positive and finite");
    }
    if (!std::isfinite(lambda) || lambda < 0.0) {
      throw ConfigError("lambda must be nonnegative and finite");
    }
    if (!std::isfinite(tolerance) || tolerance < 0.0) {
      throw ConfigError("tolerance must be nonnegative");
    }
  }
};

using FactorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fitted factors. Rows are compact: only users and venues seen in training
/// get a row; everything else is unscoreable.
class FactorModel final : public RecommenderModel {
 public:
  FactorModel(std::vector<UserId> users, std::vector<VenueId> items,
              std::size_t user_dim, std::size_t venue_dim, FactorMatrix user_factors,
              FactorMatrix item_factors, std::vector<double> objective_history = {})
      : users_(std::move(users)), items_(std::move(items)),
        user_row_(user_dim, -1), item_row_(venue_dim, -1),
        user_factors_(std::move(user_factors)),
        item_factors_(std::move(item_factors)),
        history_(std::move(objective_history)) {
    if (std::size_t(user_factors_.rows()) != users_.size() ||
        std::size_t(item_factors_.rows()) != items_.size() ||
        user_factors_.cols() != item_factors_.cols()) {
      throw InvalidInput("factor matrix shape does not match row maps");
    }
    for (std::size_t r = 0; r < users_.size(); ++r) {
      if (users_[r].index() >= user_row_.size()) user_row_.resize(users_[r].index() + 1, -1);
      user_row_[users_[r].index()] = std::int64_t(r);
    }
    for (std::size_t r = 0; r < items_.size(); ++r) {
      if (items_[r].index() >= item_row_.size()) item_row_.resize(items_[r].index() + 1, -1);
      item_row_[items_[r].index()] = std::int64_t(r);
    }
  }

  std::string name() const override { return "hkv"; }

  std::vector<Score> score_candidates(
      UserId user, std::span<const VenueId> candidates) const override {
    std::vector<Score> out(candidates.size());
    const auto ur = user_row(user);
    if (ur < 0) return out;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const auto ir = item_row(candidates[k]);
      if (ir >= 0) out[k] = user_factors_.row(ur).dot(item_factors_.row(ir));
    }
    return out;
  }

  std::int64_t user_row(UserId u) const {
    return u.index() < user_row_.size() ? user_row_[u.index()] : -1;
  }
  std::int64_t item_row(VenueId v) const {
    return v.index() < item_row_.size() ? item_row_[v.index()] : -1;
  }

  const std::vector<UserId>& users() const { return users_; }
  const std::vector<VenueId>& items() const { return items_; }
  const FactorMatrix& user_factors() const { return user_factors_; }
  const FactorMatrix& item_factors() const { return item_factors_; }
  std::size_t factors() const { return std::size_t(user_factors_.cols()); }

  /// Objective after each completed sweep.
  const std::vector<double>& objective_history() const { return history_; }

  // Binary dump: 8-byte magic, five uint64 (user_dim, venue_dim, user rows,
  // item rows, factors), uint32 ids of the user rows then the item rows,
  // then both factor matrices row-major as float64. Native byte order.
  void save(std::ostream& out) const {
    out.write(kMagic, 8);
    const std::uint64_t header[5] = {user_row_.size(), item_row_.size(),
                                     users_.size(), items_.size(), factors()};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (UserId u : users_) out.write(reinterpret_cast<const char*>(&u.value), 4);
    for (VenueId v : items_) out.write(reinterpret_cast<const char*>(&v.value), 4);
    out.write(reinterpret_cast<const char*>(user_factors_.data()),
              std::streamsize(sizeof(double) * std::size_t(user_factors_.size())));
    out.write(reinterpret_cast<const char*>(item_factors_.data()),
              std::streamsize(sizeof(double) * std::size_t(item_factors_.size())));
    if (!out) throw DataError("failed writing factor model");
  }

  static FactorModel load(std::istream& in) {
    char magic[8];
    std::uint64_t header[5];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
      throw DataError("not a factor model dump");
    }
    if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) {
      throw DataError("truncated factor model header");
    }
    std::vector<UserId> users(header[2]);
    std::vector<VenueId> items(header[3]);
    for (auto& u : users) in.read(reinterpret_cast<char*>(&u.value), 4);
    for (auto& v : items) in.read(reinterpret_cast<char*>(&v.value), 4);
    FactorMatrix uf{Eigen::Index(header[2]), Eigen::Index(header[4])};
    FactorMatrix vf{Eigen::Index(header[3]), Eigen::Index(header[4])};
    in.read(reinterpret_cast<char*>(uf.data()),
            std::streamsize(sizeof(double) * std::size_t(uf.size())));
    in.read(reinterpret_cast<char*>(vf.data()),
            std::streamsize(sizeof(double) * std::size_t(vf.size())));
    if (!in) throw DataError("truncated factor model dump");
    return FactorModel(std::move(users), std::move(items), header[0], header[1],
                       std::move(uf), std::move(vf));
  }

 private:
  static constexpr char kMagic[8] = {'C', 'C', 'D', 'F', 'M', '0', '0', '1'};

  std::vector<UserId> users_;
  std::vector<VenueId> items_;
  std::vector<std::int64_t> user_row_;
  std::vector<std::int64_t> item_row_;
  FactorMatrix user_factors_;
  FactorMatrix item_factors_;
  std::vector<double> history_;
};

/// Stepwise ALS. fit_hkv drives it; tests use the half-sweeps directly.
class AlsSolver {
 public:
  AlsSolver(const InteractionSet& train, FactorModelParams params,
            std::size_t jobs = 1)
      : params_(params), jobs_(jobs), users_(train.users()),
        items_(train.venues()), user_dim_(train.user_dim()),
        venue_dim_(train.venue_dim()) {
    params_.validate();
    if (train.empty()) throw InvalidInput("cannot factorize an empty training set");
    const auto f = Eigen::Index(params_.factors);

    std::vector<std::int64_t> item_row(train.venue_dim(), -1);
    for (std::size_t r = 0; r < items_.size(); ++r) item_row[items_[r].index()] = std::int64_t(r);
    std::vector<std::int64_t> user_row(train.user_dim(), -1);
    for (std::size_t r = 0; r < users_.size(); ++r) user_row[users_[r].index()] = std::int64_t(r);

    by_user_.resize(users_.size());
    by_item_.resize(items_.size());
    for (std::size_t r = 0; r < users_.size(); ++r) {
      for (VenueId v : train.venues_of(users_[r])) {
        by_user_[r].push_back(std::uint32_t(item_row[v.index()]));
      }
    }
    for (std::size_t r = 0; r < items_.size(); ++r) {
      for (UserId u : train.users_of(items_[r])) {
        by_item_[r].push_back(std::uint32_t(user_row[u.index()]));
      }
    }

    x_ = FactorMatrix::Zero(Eigen::Index(users_.size()), f);
    y_.resize(Eigen::Index(items_.size()), f);
    std::mt19937_64 rng(params_.seed);
    std::uniform_real_distribution<double> init(0.0, 1.0 / std::sqrt(double(f)));
    for (Eigen::Index i = 0; i < y_.size(); ++i) y_.data()[i] = init(rng);
  }

  void update_users() { solve_rows(x_, y_, by_user_, "user"); }
  void update_items() { solve_rows(y_, x_, by_item_, "item"); }

  /// Full objective, evaluated without materializing the dense product:
  /// sum over all pairs of s^2 equals <X^T X, Y^T Y>, and observed pairs
  /// replace their s^2 term by (1 + alpha)(1 - s)^2.
  double objective() const {
    const Eigen::MatrixXd gx = x_.transpose() * x_;
    const Eigen::MatrixXd gy = y_.transpose() * y_;
    double j = gx.cwiseProduct(gy).sum();
    const double c = 1.0 + params_.confidence_alpha;
    for (std::size_t r = 0; r < by_user_.size(); ++r) {
      for (std::uint32_t i : by_user_[r]) {
        const double s = x_.row(Eigen::Index(r)).dot(y_.row(i));
        j += c * (1.0 - s) * (1.0 - s) - s * s;
      }
    }
    return j + params_.lambda * (x_.squaredNorm() + y_.squaredNorm());
  }

  const FactorMatrix& user_factors() const { return x_; }
  const FactorMatrix& item_factors() const { return y_; }
  const std::vector<UserId>& users() const { return users_; }
  const std::vector<VenueId>& items() const { return items_; }
  /// Compact item rows observed by each compact user row.
  const std::vector<std::vector<std::uint32_t>>& observed_by_user() const { return by_user_; }

  FactorModel model(std::vector<double> history = {}) const {
    return FactorModel(users_, items_, user_dim_, venue_dim_, x_, y_,
                       std::move(history));
  }

 private:
  void solve_rows(FactorMatrix& target, const FactorMatrix& fixed,
                  const std::vector<std::vector<std::uint32_t>>& observed,
                  const char* what) {
    const auto f = fixed.cols();
    const Eigen::MatrixXd gram = fixed.transpose() * fixed;
    const double alpha = params_.confidence_alpha;
    const double lambda = params_.lambda;
    parallel_for(observed.size(), jobs_, [&](std::size_t r) {
      Eigen::MatrixXd a = gram;
      a.diagonal().array() += lambda;
      Eigen::VectorXd b = Eigen::VectorXd::Zero(f);
      for (std::uint32_t i : observed[r]) {
        const auto yi = fixed.row(i).transpose();
        a.noalias() += alpha * yi * yi.transpose();
        b += (1.0 + alpha) * yi;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
        throw NumericalError(std::string("singular normal equations at ") +
                             what + " row " + std::to_string(r));
      }
      target.row(Eigen::Index(r)) = llt.solve(b).transpose();
    });
  }

  FactorModelParams params_;
  std::size_t jobs_;
  std::vector<UserId> users_;
  std::vector<VenueId> items_;
  std::size_t user_dim_;
  std::size_t venue_dim_;
  std::vector<std::vector<std::uint32_t>> by_user_;
  std::vector<std::vector<std::uint32_t>> by_item_;
  FactorMatrix x_;
  FactorMatrix y_;
};

/// Runs `iterations` sweeps (users, then items), stopping early when the
/// relative objective change falls below the tolerance.
inline FactorModel fit_hkv(const InteractionSet& train,
                           const FactorModelParams& params, std::size_t jobs = 1) {
  AlsSolver solver(train, params, jobs);
  std::vector<double> history;
  for (std::size_t it = 0; it < params.iterations; ++it) {
    solver.update_users();
    solver.update_items();
    history.push_back(solver.objective());
    if (params.tolerance > 0.0 && history.size() >= 2) {
      const double prev = history[history.size() - 2];
      if (prev > 0.0 && std::abs(prev - history.back()) / prev < params.tolerance) {
        break;
      }
    }
  }
  return solver.model(std::move(history));
}

}  // namespace citycd

#endif  // CITYCD_ALS_HPP_
