#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "levyport/levy.hpp"

namespace levyport {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Equicorrelated market: n assets with volatility v, pairwise correlation
// rho, excess returns common_excess * 1 + ortho_excess, and one jump source
// loading every asset with jump_loading.
struct OneSectorMarket {
  int n = 2;
  double v = 0.2;
  double rho = 0.0;
  double common_excess = 0.0;
  Vector ortho_excess;  // entries sum to zero
  double jump_loading = 0.0;  // in (-1, 1)
  double riskless = 0.0;
  LevyJumpMeasure measure;

  static OneSectorMarket make(int n, double v, double rho, double common_excess,
                              Vector ortho_excess, double jump_loading,
                              double riskless, LevyJumpMeasure measure);
};

// Block market: m sectors of k firms each (n = m k).  rho carries the
// intra-sector correlations on its diagonal and the cross-sector ones off it.
// loadings(s, l) is the response of every firm in sector s to jump source l.
struct MultiSectorMarket {
  int m = 1;
  int k = 1;
  Vector v;
  Matrix rho;
  Vector sector_excess;  // per-sector common excess returns
  Vector ortho_excess;   // n-vector, each sector block sums to zero
  Matrix loadings;       // m x m
  double riskless = 0.0;
  std::vector<LevyJumpMeasure> measures;  // one per jump source

  int n() const { return m * k; }

  static MultiSectorMarket make(int k, Vector v, Matrix rho,
                                Vector sector_excess, Vector ortho_excess,
                                Matrix loadings, double riskless,
                                std::vector<LevyJumpMeasure> measures);
};

// Arbitrary covariance/returns/jump data; accepted only by the direct
// numeric solver, never by the separated path.
struct RawMarket {
  Matrix sigma;
  Vector excess;
  std::vector<Vector> jumps;
  std::vector<LevyJumpMeasure> measures;
  double riskless = 0.0;
};

// sigma = sigma_bar + sigma_perp, where sigma_bar acts on the span of the
// sector indicators through the m x m matrix kappa and sigma_perp annihilates
// it.  One-sector markets expose the pair (kappa1, kappa2) as well.
struct SigmaDecomposition {
  int m = 1;
  int k = 1;
  Matrix sigma;
  Matrix sigma_bar;
  Matrix sigma_perp;
  Matrix kappa;       // m x m
  double kappa1 = 0;  // one-sector: eigenvalue on the all-ones direction
  double kappa2 = 0;  // one-sector: eigenvalue on its orthogonal complement
};

Matrix build_sigma(const OneSectorMarket& mkt);
Matrix build_sigma(const MultiSectorMarket& mkt);

SigmaDecomposition decompose_sigma(const OneSectorMarket& mkt);
SigmaDecomposition decompose_sigma(const MultiSectorMarket& mkt);

// Orthogonal projection of R onto the sector indicators: R = sum r_l 1_l + R_perp.
std::pair<Vector, Vector> decompose_returns(const Vector& R, int m, int k);

// The m jump vectors J_l, constant on each sector block.
std::vector<Vector> jump_vectors(const MultiSectorMarket& mkt);

// Closed-form kappa matrix of the block covariance.
Matrix kappa_matrix(const MultiSectorMarket& mkt);

// One-sector markets are the m = 1 special case.
MultiSectorMarket to_multisector(const OneSectorMarket& mkt);

RawMarket to_raw(const OneSectorMarket& mkt);
RawMarket to_raw(const MultiSectorMarket& mkt);

// Max-norm residual of sigma mapping span{1_l} into itself, normalized by the
// largest matrix entry.  The separated solver requires this to be tiny.
double invariant_subspace_residual(const Matrix& sigma, int m, int k);

}  // namespace levyport
