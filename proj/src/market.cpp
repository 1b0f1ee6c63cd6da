#include "levyport/market.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "levyport/errors.hpp"

namespace levyport {
namespace {

// Dense matrices above this size serve no purpose here: the separated solver
// works from the closed-form eigenvalues and never materializes sigma.
constexpr int kDenseCap = 2048;

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
  throw DomainError(code, msg);
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) fail(ErrorCode::ConfigInvalid, std::string(what) + " must be finite");
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) fail(ErrorCode::ConfigInvalid, std::string(what) + " must be finite");
}

void check_dense_size(int n) {
  if (n > kDenseCap)
    fail(ErrorCode::ConfigInvalid,
         "dense covariance ops are capped at n = " + std::to_string(kDenseCap) +
             "; larger markets are served by the closed-form path");
}

void check_block_sums(const Vector& ortho, int m, int k, const char* what) {
  for (int l = 0; l < m; ++l) {
    const auto block = ortho.segment(l * k, k);
    const double scale = std::max(1.0, block.cwiseAbs().maxCoeff() * k);
    if (std::abs(block.sum()) > 1e-9 * scale)
      fail(ErrorCode::ConfigInvalid,
           std::string(what) + ": block " + std::to_string(l) + " must sum to zero");
  }
}

}  // namespace

OneSectorMarket OneSectorMarket::make(int n, double v, double rho,
                                      double common_excess, Vector ortho_excess,
                                      double jump_loading, double riskless,
                                      LevyJumpMeasure measure) {
  if (n < 2) fail(ErrorCode::ConfigInvalid, "one-sector market needs n >= 2");
  require_finite(v, "v");
  require_finite(rho, "rho");
  require_finite(common_excess, "common excess return");
  require_finite(jump_loading, "jump loading");
  require_finite(riskless, "riskless rate");
  if (v <= 0.0) fail(ErrorCode::ConfigInvalid, "v must be positive");
  if (rho >= 1.0 || rho <= -1.0 / (n - 1))
    fail(ErrorCode::NotPositiveDefinite,
         "rho must lie in (-1/(n-1), 1) for a positive definite covariance");
  if (std::abs(jump_loading) >= 1.0)
    fail(ErrorCode::ConfigInvalid, "jump loading must lie in (-1, 1)");
  if (ortho_excess.size() == 0) ortho_excess = Vector::Zero(n);
  if (ortho_excess.size() != n)
    fail(ErrorCode::ShapeMismatch, "orthogonal excess return must have length n");
  require_finite(ortho_excess, "orthogonal excess return");
  check_block_sums(ortho_excess, 1, n, "orthogonal excess return");

  OneSectorMarket mkt;
  mkt.n = n;
  mkt.v = v;
  mkt.rho = rho;
  mkt.common_excess = common_excess;
  mkt.ortho_excess = std::move(ortho_excess);
  mkt.jump_loading = jump_loading;
  mkt.riskless = riskless;
  mkt.measure = std::move(measure);
  return mkt;
}

MultiSectorMarket MultiSectorMarket::make(int k, Vector v, Matrix rho,
                                          Vector sector_excess,
                                          Vector ortho_excess, Matrix loadings,
                                          double riskless,
                                          std::vector<LevyJumpMeasure> measures) {
  const int m = static_cast<int>(v.size());
  if (m < 1) fail(ErrorCode::ConfigInvalid, "at least one sector required");
  if (k < 1) fail(ErrorCode::ConfigInvalid, "at least one firm per sector required");
  const int n = m * k;
  if (rho.rows() != m || rho.cols() != m)
    fail(ErrorCode::ShapeMismatch, "correlation matrix must be m x m");
  if (sector_excess.size() != m)
    fail(ErrorCode::ShapeMismatch, "sector excess returns must have length m");
  if (loadings.rows() != m || loadings.cols() != m)
    fail(ErrorCode::ShapeMismatch, "jump loadings must be m x m");
  if (static_cast<int>(measures.size()) != m)
    fail(ErrorCode::ShapeMismatch, "one jump measure per sector required");
  if (ortho_excess.size() == 0) ortho_excess = Vector::Zero(n);
  if (ortho_excess.size() != n)
    fail(ErrorCode::ShapeMismatch, "orthogonal excess return must have length m*k");
  require_finite(v.transpose(), "v");
  require_finite(rho, "correlation matrix");
  require_finite(sector_excess.transpose(), "sector excess returns");
  require_finite(ortho_excess.transpose(), "orthogonal excess return");
  require_finite(loadings, "jump loadings");
  require_finite(riskless, "riskless rate");

  for (int l = 0; l < m; ++l) {
    if (v(l) <= 0.0) fail(ErrorCode::ConfigInvalid, "volatilities must be positive");
    if (rho(l, l) >= 1.0)
      fail(ErrorCode::NotPositiveDefinite, "intra-sector correlation must be below 1");
  }
  for (int l = 0; l < m; ++l)
    for (int s = 0; s < m; ++s) {
      if (l == s) continue;
      if (std::abs(rho(l, s) - rho(s, l)) > 1e-12)
        fail(ErrorCode::ConfigInvalid, "correlation matrix must be symmetric");
      if (rho(l, s) >= std::min(rho(l, l), rho(s, s)))
        fail(ErrorCode::NotPositiveDefinite,
             "cross-sector correlation must lie strictly below both intra-sector ones");
      if (rho(l, s) < -1.0 / (n - 1))
        fail(ErrorCode::NotPositiveDefinite,
             "cross-sector correlation below -1/(n-1)");
    }
  check_block_sums(ortho_excess, m, k, "orthogonal excess return");

  MultiSectorMarket mkt;
  mkt.m = m;
  mkt.k = k;
  mkt.v = std::move(v);
  mkt.rho = std::move(rho);
  mkt.sector_excess = std::move(sector_excess);
  mkt.ortho_excess = std::move(ortho_excess);
  mkt.loadings = std::move(loadings);
  mkt.riskless = riskless;
  mkt.measures = std::move(measures);

  // Positive definiteness of the full covariance reduces to the kappa matrix
  // plus the per-sector complement eigenvalues v_l^2 (1 - rho_ll), and the
  // latter are positive once rho_ll < 1.
  const Matrix kap = kappa_matrix(mkt);
  Eigen::LLT<Matrix> llt(kap);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::NotPositiveDefinite, "sector covariance matrix is not positive definite");
  return mkt;
}

Matrix build_sigma(const OneSectorMarket& mkt) {
  check_dense_size(mkt.n);
  const double v2 = mkt.v * mkt.v;
  Matrix sigma = Matrix::Constant(mkt.n, mkt.n, v2 * mkt.rho);
  sigma.diagonal().setConstant(v2);
  return sigma;
}

Matrix build_sigma(const MultiSectorMarket& mkt) {
  const int n = mkt.n();
  check_dense_size(n);
  Matrix sigma(n, n);
  for (int l = 0; l < mkt.m; ++l)
    for (int s = 0; s < mkt.m; ++s) {
      auto block = sigma.block(l * mkt.k, s * mkt.k, mkt.k, mkt.k);
      if (l == s) {
        const double v2 = mkt.v(l) * mkt.v(l);
        block.setConstant(v2 * mkt.rho(l, l));
        block.diagonal().setConstant(v2);
      } else {
        block.setConstant(mkt.v(l) * mkt.v(s) * mkt.rho(l, s));
      }
    }
  return sigma;
}

Matrix kappa_matrix(const MultiSectorMarket& mkt) {
  Matrix kap(mkt.m, mkt.m);
  for (int l = 0; l < mkt.m; ++l)
    for (int s = 0; s < mkt.m; ++s)
      kap(l, s) = (l == s)
                      ? mkt.v(l) * mkt.v(l) * (1.0 + (mkt.k - 1) * mkt.rho(l, l))
                      : mkt.k * mkt.v(l) * mkt.v(s) * mkt.rho(l, s);
  return kap;
}

SigmaDecomposition decompose_sigma(const OneSectorMarket& mkt) {
  check_dense_size(mkt.n);
  SigmaDecomposition d;
  d.m = 1;
  d.k = mkt.n;
  d.kappa1 = mkt.v * mkt.v * (1.0 + (mkt.n - 1) * mkt.rho);
  d.kappa2 = mkt.v * mkt.v * (1.0 - mkt.rho);
  d.kappa = Matrix::Constant(1, 1, d.kappa1);
  d.sigma = build_sigma(mkt);
  d.sigma_bar = Matrix::Constant(mkt.n, mkt.n, d.kappa1 / mkt.n);
  d.sigma_perp = Matrix::Constant(mkt.n, mkt.n, -d.kappa2 / mkt.n);
  d.sigma_perp.diagonal().array() += d.kappa2;
  return d;
}

SigmaDecomposition decompose_sigma(const MultiSectorMarket& mkt) {
  const int n = mkt.n();
  check_dense_size(n);
  SigmaDecomposition d;
  d.m = mkt.m;
  d.k = mkt.k;
  d.kappa = kappa_matrix(mkt);
  d.sigma = build_sigma(mkt);
  d.sigma_bar = Matrix::Zero(n, n);
  d.sigma_perp = Matrix::Zero(n, n);
  for (int l = 0; l < mkt.m; ++l) {
    for (int s = 0; s < mkt.m; ++s)
      d.sigma_bar.block(l * mkt.k, s * mkt.k, mkt.k, mkt.k)
          .setConstant(d.kappa(l, s) / mkt.k);
    const double perp = mkt.v(l) * mkt.v(l) * (1.0 - mkt.rho(l, l));
    auto block = d.sigma_perp.block(l * mkt.k, l * mkt.k, mkt.k, mkt.k);
    block.setConstant(-perp / mkt.k);
    block.diagonal().array() += perp;
  }
  if (mkt.m == 1) {
    d.kappa1 = d.kappa(0, 0);
    d.kappa2 = mkt.v(0) * mkt.v(0) * (1.0 - mkt.rho(0, 0));
  }
  return d;
}

std::pair<Vector, Vector> decompose_returns(const Vector& R, int m, int k) {
  if (m < 1 || k < 1) fail(ErrorCode::ConfigInvalid, "m and k must be positive");
  if (R.size() != static_cast<Eigen::Index>(m) * k)
    fail(ErrorCode::ShapeMismatch, "return vector must have length m*k");
  Vector means(m);
  Vector perp(R.size());
  for (int l = 0; l < m; ++l) {
    const auto block = R.segment(l * k, k);
    means(l) = block.mean();
    perp.segment(l * k, k) = block.array() - means(l);
  }
  return {means, perp};
}

std::vector<Vector> jump_vectors(const MultiSectorMarket& mkt) {
  std::vector<Vector> out;
  out.reserve(mkt.m);
  for (int l = 0; l < mkt.m; ++l) {
    Vector J(mkt.n());
    for (int s = 0; s < mkt.m; ++s)
      J.segment(s * mkt.k, mkt.k).setConstant(mkt.loadings(s, l));
    out.push_back(std::move(J));
  }
  return out;
}

MultiSectorMarket to_multisector(const OneSectorMarket& mkt) {
  return MultiSectorMarket::make(
      mkt.n, Vector::Constant(1, mkt.v), Matrix::Constant(1, 1, mkt.rho),
      Vector::Constant(1, mkt.common_excess), mkt.ortho_excess,
      Matrix::Constant(1, 1, mkt.jump_loading), mkt.riskless, {mkt.measure});
}

RawMarket to_raw(const OneSectorMarket& mkt) {
  RawMarket raw;
  raw.sigma = build_sigma(mkt);
  raw.excess = Vector::Constant(mkt.n, mkt.common_excess) + mkt.ortho_excess;
  raw.jumps = {Vector::Constant(mkt.n, mkt.jump_loading)};
  raw.measures = {mkt.measure};
  raw.riskless = mkt.riskless;
  return raw;
}

RawMarket to_raw(const MultiSectorMarket& mkt) {
  RawMarket raw;
  raw.sigma = build_sigma(mkt);
  raw.excess = mkt.ortho_excess;
  for (int l = 0; l < mkt.m; ++l)
    raw.excess.segment(l * mkt.k, mkt.k).array() += mkt.sector_excess(l);
  raw.jumps = jump_vectors(mkt);
  raw.measures = mkt.measures;
  raw.riskless = mkt.riskless;
  return raw;
}

double invariant_subspace_residual(const Matrix& sigma, int m, int k) {
  if (m < 1 || k < 1) fail(ErrorCode::ConfigInvalid, "m and k must be positive");
  const int n = m * k;
  if (sigma.rows() != n || sigma.cols() != n)
    fail(ErrorCode::ShapeMismatch, "covariance must be (m*k) x (m*k)");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff() * k);
  double worst = 0.0;
  for (int l = 0; l < m; ++l) {
    Vector w = Vector::Zero(n);
    for (int c = 0; c < k; ++c) w += sigma.col(l * k + c);
    Vector proj = Vector::Zero(n);
    for (int s = 0; s < m; ++s) {
      const double coeff = w.segment(s * k, k).sum() / k;
      proj.segment(s * k, k).setConstant(coeff);
    }
    worst = std::max(worst, (w - proj).cwiseAbs().maxCoeff());
  }
  return worst / scale;
}

}  // namespace levyport
