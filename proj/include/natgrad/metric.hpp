/* Copyright 2026 The natgrad-lens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

// Metrics that turn an update direction into natural gradient descent.
//
// Given an update direction g and the negative loss gradient y with
// y^T g > 0, every symmetric positive definite M with M g = y has the form
//
//   M = y y^T / (y^T g) + M',   M' g = 0,  M' positive definite on g-perp.
//
// The one-parameter family fixes M' = gamma (y^T y)/(y^T g) (I - g g^T/g^T g);
// gamma = 1 gives the metric of smallest condition number over all valid
// metrics, with kappa = (1 + |sin psi|) / (1 - |sin psi|) where psi is the
// angle between y and g.

#include <optional>
#include <span>

#include "natgrad/linalg.hpp"
#include "natgrad/matrix.hpp"

namespace natgrad {

/// Update direction g and negative gradient y at one parameter point.
/// Both must be finite and nonzero; alignment y^T g > 0 is checked by the
/// metric constructors, not here, so misaligned pairs can still be reported.
class UpdateGradientPair {
 public:
  UpdateGradientPair(Vector g, Vector y);

  std::span<const double> g() const { return g_; }
  std::span<const double> y() const { return y_; }
  std::size_t dim() const { return g_.size(); }

  double alignment() const;   // y^T g
  double norm_g() const;
  double norm_y() const;
  double norm_ratio() const;  // ||y|| / ||g||
  double cos_psi() const;
  /// |sin psi| from the component of y orthogonal to g.
  double sin_psi() const;
  double psi() const;
  /// y^T g > tol::kAlignment * ||y|| ||g||
  bool is_aligned() const;

 private:
  Vector g_;
  Vector y_;
};

struct MetricCertificates {
  double map_residual;   // ||M g - y|| / ||y||
  double min_eigenvalue;
};

/// A certified symmetric positive definite matrix with M g = y.
/// Only the builders below create one.
class Metric {
 public:
  const SymMatrix& matrix() const { return matrix_; }
  const UpdateGradientPair& pair() const { return pair_; }
  std::optional<double> gamma() const { return gamma_; }
  const MetricCertificates& certificates() const { return certs_; }

 private:
  friend Metric certify_metric(SymMatrix, UpdateGradientPair, std::optional<double>);
  Metric(SymMatrix m, UpdateGradientPair p, std::optional<double> gamma,
         MetricCertificates c)
      : matrix_(std::move(m)), pair_(std::move(p)), gamma_(gamma), certs_(c) {}

  SymMatrix matrix_;
  UpdateGradientPair pair_;
  std::optional<double> gamma_;
  MetricCertificates certs_;
};

/// Computes certificates for `m` against `pair` and wraps them. Throws
/// CertificateError("map_residual") or CertificateError("positive_definite").
Metric certify_metric(SymMatrix m, UpdateGradientPair pair,
                      std::optional<double> gamma = std::nullopt);

/// Eigenvalues of the one-parameter family and the derived quantities.
/// `lambda_bulk` is the eigenvalue of multiplicity D-2 and is absent for
/// D < 3.
struct SpectrumReport {
  double lambda_max;
  double lambda_min;
  std::optional<double> lambda_bulk;
  double kappa;
  double psi;
  double norm_ratio;
};

/// The time-varying extension: v = (theta, t), so v_dot = (theta_dot, 1)
/// and the negative gradient gains the -dL/dt component.
struct ExtendedPair {
  Vector v_dot;
  Vector neg_grad_v;

  /// g = v_dot, y = neg_grad_v.
  UpdateGradientPair to_pair() const;
};

/// Throws AlignmentError unless pair.is_aligned().
void require_alignment(const UpdateGradientPair& pair);

/// y y^T / (y^T g) + sum_i w_i u_i u_i^T over the Householder complement
/// basis {u_i} of g. Weights default to 1 and must be positive.
Metric build_canonical_metric(const UpdateGradientPair& pair,
                              std::span<const double> weights = {});

/// y y^T / (y^T g) + U W U^T for an arbitrary positive definite operator W
/// on g-perp, expressed in the complement basis U. This is the general
/// member of the canonical class.
Metric build_canonical_metric(const UpdateGradientPair& pair,
                              const SymMatrix& complement_operator);

/// y y^T/(y^T g) + gamma (y^T y)/(y^T g) (I - g g^T/(g^T g)).
Metric build_family_metric(const UpdateGradientPair& pair, double gamma);

/// The gamma = 1 family member: minimum condition number among all metrics.
Metric optimal_metric(const UpdateGradientPair& pair);

/// Exact eigenvalues of build_family_metric(pair, gamma).
SpectrumReport closed_form_spectrum(const UpdateGradientPair& pair, double gamma);

/// (1 + |sin psi|) / (1 - |sin psi|), evaluated as (1 + |sin psi|)^2 / cos^2 psi.
/// Throws InvalidInputError for |psi| >= pi/2.
double condition_number_bound(double psi);

struct EigenvalueBounds {
  double sup_lambda_min;  // (||y||/||g||) cos psi
  double inf_lambda_max;  // ||y|| / (||g|| cos psi)
};

/// Strict, unattained bounds that hold for every metric mapping g to y
/// (when g is not parallel to y).
EigenvalueBounds extreme_eigenvalue_bounds(const UpdateGradientPair& pair);

struct CanonicalDecomposition {
  SymMatrix m_prime;             // M - y y^T / (y^T g)
  double residual_on_g;          // ||M' g|| / ||g||
  double min_eig_on_complement;  // lambda_min(U^T M' U)
};

CanonicalDecomposition canonical_decomposition(const Metric& m);

struct NaturalGradientCheck {
  bool is_valid;
  double map_residual;  // ||M g - y|| / ||y||
  double min_eigenvalue;
  double symmetry_defect;  // max |M_ij - M_ji|
};

/// Checks M g = y, positive definiteness and symmetry for an arbitrary
/// matrix; thresholds are tol::kVerifyMapResidual and tol::kVerifySymmetry.
/// Throws DimensionError when sizes disagree.
NaturalGradientCheck verify_natural_gradient_form(const UpdateGradientPair& pair,
                                                  const Matrix& m);
NaturalGradientCheck verify_natural_gradient_form(const UpdateGradientPair& pair,
                                                  const SymMatrix& m);

ExtendedPair extend_time_varying(std::span<const double> theta_dot,
                                 std::span<const double> grad_theta, double grad_t);

/// Numerical eigenvalues of a metric, ascending.
Vector metric_eigenvalues(const Metric& m);

/// ||M g - y|| / ||y|| for the family metric, without forming M. O(D).
double family_map_residual(const UpdateGradientPair& pair, double gamma);

}  // namespace natgrad
