// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <vector>

#include "xlmimo/types.hpp"

namespace xlmimo
{

struct SparseSolution
{
    CVec coefficients;
    std::vector<int> support;
    std::vector<double> residual_history; // |r| before the first and after every iteration
    int iterations = 0;
    bool converged = false;
    std::int64_t correlation_ops = 0; // complex multiply-adds spent on atom correlations
};

struct OmpOptions
{
    int max_atoms = 0;          // 0: min(P, Q)
    double residual_tol = 0.0;  // stop once |r| / |y| <= residual_tol
};

/// Orthogonal matching pursuit with normalized-correlation atom selection
/// (|a_q^H r| / |a_q|, ties to the lowest index) and a least-squares refit over the
/// whole support every iteration.
SparseSolution omp(const CMat &a, const CVec &y, const OmpOptions &opts);

struct SblOptions
{
    int max_iters = 200;
    double gamma_floor = 1e-8;  // relative to max(gamma); 0 disables pruning
    double tol = 1e-6;          // max relative gamma change
    bool track_evidence = false;
};

struct SblState
{
    RVec gamma;            // prior variances of the final E-step; 0 for pruned atoms
    CVec mean;             // posterior mean over all atoms (0 where pruned)
    CMat covariance;       // posterior covariance over `active`
    std::vector<int> active;
    int iterations = 0;
    std::vector<double> log_evidence; // log p(y; gamma) at every E-step, when tracked
};

struct SblResult
{
    SparseSolution solution;
    SblState state;
};

/// Sparse Bayesian learning by expectation maximization with a fixed, known noise variance.
///   E-step: Sigma = (A^H A / s2 + Gamma^-1)^-1,  mu = Sigma A^H y / s2
///   M-step: gamma_s = |mu_s|^2 + Sigma_ss
SblResult sbl_em(const CMat &a, const CVec &y, double noise_var, const SblOptions &opts);

/// log CN(y; 0, s2 I + A diag(gamma) A^H).
double sbl_log_evidence(const CMat &a, const CVec &y, double noise_var, const RVec &gamma);

} // namespace xlmimo
