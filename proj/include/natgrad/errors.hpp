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

#include <stdexcept>
#include <string>
#include <vector>

namespace natgrad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or size disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input rejected before any computation (non-finite entries, zero vectors,
/// non-positive scalars where positivity is required).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A numerical certificate (residual, positive definiteness) failed.
/// `certificate()` names which one.
class CertificateError : public Error {
 public:
  CertificateError(std::string certificate, const std::string& what)
      : Error(what), certificate_(std::move(certificate)) {}
  const std::string& certificate() const { return certificate_; }

 private:
  std::string certificate_;
};

/// The update direction and the negative gradient are not positively
/// aligned, so no positive definite metric maps one onto the other.
class AlignmentError : public Error {
 public:
  AlignmentError(double psi, double alignment, const std::string& what)
      : Error(what), psi_(psi), alignment_(alignment) {}
  /// Angle between y and g in radians, in [0, pi].
  double psi() const { return psi_; }
  /// The inner product y^T g.
  double alignment() const { return alignment_; }

 private:
  double psi_;
  double alignment_;
};

/// A discrete step did not decrease the loss.
class EffectivenessError : public Error {
 public:
  EffectivenessError(double loss_before, double loss_after,
                     const std::string& what)
      : Error(what), loss_before_(loss_before), loss_after_(loss_after) {}
  double loss_before() const { return loss_before_; }
  double loss_after() const { return loss_after_; }

 private:
  double loss_before_;
  double loss_after_;
};

/// The Taylor mean-value root search found neither a sign change nor a
/// near-zero residual. Carries the scanned residual profile.
class NoRootError : public Error {
 public:
  NoRootError(std::vector<double> lambdas, std::vector<double> residuals,
              const std::string& what)
      : Error(what),
        lambdas_(std::move(lambdas)),
        residuals_(std::move(residuals)) {}
  const std::vector<double>& lambdas() const { return lambdas_; }
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> lambdas_;
  std::vector<double> residuals_;
};

/// Experiment or command configuration is unusable.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace natgrad
