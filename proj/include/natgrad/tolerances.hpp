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

// Every numerical threshold used by a certificate lives here.

namespace natgrad::tol {

// Eigendecomposition: ||V V^T - I||_max and relative reconstruction error.
inline constexpr double kEigenOrthogonality = 1e-10;
inline constexpr double kEigenReconstruction = 1e-9;

// Lyapunov solve: ||P A + A^T P + Q||_max <= kLyapunovResidual * ||Q||_max.
inline constexpr double kLyapunovResidual = 1e-9;

// Complement basis orthogonality, relative to ||g||.
inline constexpr double kComplementOrthogonality = 1e-12;

// y^T g must exceed kAlignment * ||y|| ||g|| for a metric to be built.
inline constexpr double kAlignment = 1e-12;

// Metric certificate: ||M g - y|| <= kMetricMapResidual * ||y||.
inline constexpr double kMetricMapResidual = 1e-10;

// Canonical decomposition: ||M' g|| <= kCanonicalResidual * ||g||.
inline constexpr double kCanonicalResidual = 1e-10;

// verify_natural_gradient_form acceptance thresholds.
inline constexpr double kVerifyMapResidual = 1e-8;
inline constexpr double kVerifySymmetry = 1e-12;

// Discrete gradient identities, scaled by max(1, |L(theta)|).
inline constexpr double kTaylorResidual = 1e-9;
inline constexpr double kDiscreteGradientIdentity = 1e-9;

// Step reconstruction through M-bar and through M-bar + eta H.
inline constexpr double kDiscreteReconstruction = 1e-9;
inline constexpr double kCombinedReconstruction = 1e-8;

// <Hg>^T <g> below this (relative) leaves the averaged metric uncorrected.
inline constexpr double kStochasticCorrection = 1e-12;
inline constexpr double kStochasticReconstruction = 1e-8;

// Relative central-difference step for Hessians built from gradients.
inline constexpr double kFiniteDifferenceStep = 1e-5;
// Oracle self-test agreement between analytic and numerical gradients.
inline constexpr double kGradientSelfTest = 1e-5;

// Per-step natural-gradient residual in the LTI experiment.
inline constexpr double kLtiNaturalGradient = 1e-8;

}  // namespace natgrad::tol
