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

#include "xlmimo/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace xlmimo
{

namespace
{

void validate_problem(const CMat &a, const CVec &y, RVec &norms)
{
    if (a.rows() < 1 || a.cols() < 1)
        throw Error(ErrorCode::invalid_argument, "sensing matrix must be non-empty");
    if (y.size() != a.rows())
        throw Error(ErrorCode::invalid_argument, "observation length does not match the sensing matrix");
    norms = a.colwise().norm().transpose();
    for (Eigen::Index q = 0; q < norms.size(); ++q)
        if (!(norms(q) > 0.0))
            throw Error(ErrorCode::invalid_argument, "sensing matrix has an all-zero column " + std::to_string(q));
}

CMat gather_columns(const CMat &a, const std::vector<int> &idx)
{
    CMat out(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    return out;
}

} // namespace

SparseSolution omp(const CMat &a, const CVec &y, const OmpOptions &opts)
{
    RVec norms;
    validate_problem(a, y, norms);
    const Eigen::Index p = a.rows();
    const Eigen::Index q = a.cols();
    const int limit = static_cast<int>(std::min(p, q));
    const int max_atoms = opts.max_atoms > 0 ? opts.max_atoms : limit;
    if (max_atoms > limit)
        throw Error(ErrorCode::invalid_argument, "OMP sparsity exceeds min(P, Q)");

    SparseSolution sol;
    sol.coefficients = CVec::Zero(q);
    const double y_norm = y.norm();
    CVec r = y;
    sol.residual_history.push_back(y_norm);
    if (y_norm == 0.0)
    {
        sol.converged = true;
        return sol;
    }

    std::vector<char> used(static_cast<size_t>(q), 0);
    CVec coef;
    CVec corr(q);
    while (static_cast<int>(sol.support.size()) < max_atoms)
    {
        if (sol.residual_history.back() <= opts.residual_tol * y_norm)
        {
            sol.converged = true;
            break;
        }
        corr.noalias() = a.adjoint() * r;
        sol.correlation_ops += static_cast<std::int64_t>(p) * q;

        Eigen::Index best = -1;
        double best_score = -1.0;
        for (Eigen::Index k = 0; k < q; ++k)
        {
            if (used[static_cast<size_t>(k)])
                continue;
            const double score = std::abs(corr(k)) / norms(k);
            if (score > best_score)
            {
                best_score = score;
                best = k;
            }
        }
        used[static_cast<size_t>(best)] = 1;
        sol.support.push_back(static_cast<int>(best));

        const CMat sub = gather_columns(a, sol.support);
        Eigen::ColPivHouseholderQR<CMat> qr(sub);
        if (qr.rank() < sub.cols())
            throw Error(ErrorCode::numerical_rank, "support refit is rank deficient at atom " + std::to_string(best));
        coef = qr.solve(y);
        r = y - sub * coef;
        sol.residual_history.push_back(r.norm());
        ++sol.iterations;
    }
    if (sol.residual_history.back() <= opts.residual_tol * y_norm)
        sol.converged = true;

    for (size_t k = 0; k < sol.support.size(); ++k)
        sol.coefficients(sol.support[k]) = coef(static_cast<Eigen::Index>(k));
    return sol;
}

namespace
{

struct EStep
{
    CVec mu;
    CMat sigma;   // full covariance over the active set, filled when requested
    RVec sigma_diag;
    double log_evidence = 0.0;
};

// Posterior over the active atoms. Works in the smaller of the two spaces:
// atom space (k <= P) through G = A^H A + s2 Gamma^-1, observation space
// otherwise through C = s2 I + A Gamma A^H.
EStep e_step(const CMat &ak, const CMat &gram_k, const CVec &aty_k, const CVec &y, double s2, const RVec &g,
             bool want_sigma, bool want_evidence)
{
    const Eigen::Index p = ak.rows();
    const Eigen::Index k = ak.cols();
    EStep out;
    constexpr double log_pi = 1.1447298858494002;

    if (k <= p)
    {
        CMat gmat = gram_k;
        for (Eigen::Index s = 0; s < k; ++s)
            gmat(s, s) += s2 / g(s);
        Eigen::LLT<CMat> llt(gmat);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorCode::divergence, "posterior precision lost positive definiteness");
        out.mu = llt.solve(aty_k);
        // diag(G^-1) from the columns of L^-1; the full inverse only when asked for.
        CMat linv = CMat::Identity(k, k);
        llt.matrixL().solveInPlace(linv);
        out.sigma_diag = s2 * linv.cwiseAbs2().colwise().sum().transpose();
        if (want_sigma)
            out.sigma = s2 * (linv.adjoint() * linv);
        if (want_evidence)
        {
            // log det C = P log s2 + log det Gamma + log det(G / s2)
            const auto l = llt.matrixL();
            double logdet_g = 0.0;
            for (Eigen::Index s = 0; s < k; ++s)
                logdet_g += 2.0 * std::log(std::real(l(s, s)));
            const double logdet_c = p * std::log(s2) + g.array().log().sum() + logdet_g - k * std::log(s2);
            const double quad = (y.squaredNorm() - std::real(aty_k.dot(out.mu))) / s2;
            out.log_evidence = -static_cast<double>(p) * log_pi - logdet_c - quad;
        }
    }
    else
    {
        // C = (A Gamma^1/2)(A Gamma^1/2)^H + s2 I = L L^H; with W = L^-1 A and u = L^-1 y,
        // mu = Gamma W^H u and Sigma_ss = g_s - g_s^2 |w_s|^2.
        const CMat scaled = ak * g.cwiseSqrt().asDiagonal();
        CMat c = CMat::Identity(p, p) * s2;
        c.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
        Eigen::LLT<CMat, Eigen::Lower> llt(c);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorCode::divergence, "marginal covariance lost positive definiteness");
        CMat w = ak;
        llt.matrixL().solveInPlace(w);
        CVec u = y;
        llt.matrixL().solveInPlace(u);
        out.mu = g.asDiagonal() * (w.adjoint() * u);
        const RVec wn = w.cwiseAbs2().colwise().sum().transpose();
        out.sigma_diag = g - g.cwiseProduct(g).cwiseProduct(wn);
        if (want_sigma)
        {
            out.sigma = -(g.asDiagonal() * (w.adjoint() * w) * g.asDiagonal());
            out.sigma.diagonal() += g.cast<cd>();
        }
        if (want_evidence)
        {
            const auto l = llt.matrixL();
            double logdet_c = 0.0;
            for (Eigen::Index s = 0; s < p; ++s)
                logdet_c += 2.0 * std::log(std::real(l(s, s)));
            out.log_evidence = -static_cast<double>(p) * log_pi - logdet_c - u.squaredNorm();
        }
    }
    return out;
}

} // namespace

double sbl_log_evidence(const CMat &a, const CVec &y, double noise_var, const RVec &gamma)
{
    CMat c = a * gamma.asDiagonal() * a.adjoint();
    c.diagonal().array() += noise_var;
    Eigen::LLT<CMat> llt(c);
    const auto l = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index s = 0; s < c.rows(); ++s)
        logdet += 2.0 * std::log(std::real(l(s, s)));
    constexpr double log_pi = 1.1447298858494002;
    return -static_cast<double>(c.rows()) * log_pi - logdet - std::real(y.dot(llt.solve(y)));
}

SblResult sbl_em(const CMat &a, const CVec &y, double noise_var, const SblOptions &opts)
{
    RVec norms;
    validate_problem(a, y, norms);
    if (!(noise_var > 0.0) || !std::isfinite(noise_var))
        throw Error(ErrorCode::invalid_argument, "SBL needs a positive noise variance");

    const Eigen::Index p = a.rows();
    const Eigen::Index q = a.cols();
    const CVec aty = a.adjoint() * y;

    std::vector<int> active(static_cast<size_t>(q));
    for (Eigen::Index s = 0; s < q; ++s)
        active[static_cast<size_t>(s)] = static_cast<int>(s);
    RVec g = RVec::Ones(q);

    SblResult res;
    SparseSolution &sol = res.solution;
    sol.residual_history.push_back(y.norm());

    // The Gram block is only needed once the active set fits in atom space.
    auto restrict = [&](const std::vector<int> &idx, CMat &ak, CMat &gram_k, CVec &aty_k) {
        const Eigen::Index k = static_cast<Eigen::Index>(idx.size());
        ak.resize(p, k);
        aty_k.resize(k);
        for (Eigen::Index s = 0; s < k; ++s)
        {
            ak.col(s) = a.col(idx[static_cast<size_t>(s)]);
            aty_k(s) = aty(idx[static_cast<size_t>(s)]);
        }
        if (k <= p)
            gram_k.noalias() = ak.adjoint() * ak;
        else
            gram_k.resize(0, 0);
    };

    CMat ak, gram_k;
    CVec aty_k;
    restrict(active, ak, gram_k, aty_k);
    bool changed_set = false;

    for (int it = 0; it < opts.max_iters; ++it)
    {
        if (changed_set)
        {
            restrict(active, ak, gram_k, aty_k);
            changed_set = false;
        }
        const EStep e = e_step(ak, gram_k, aty_k, y, noise_var, g, false, opts.track_evidence);
        if (!e.mu.allFinite() || !e.sigma_diag.allFinite())
            throw Error(ErrorCode::divergence, "non-finite SBL iterate at iteration " + std::to_string(it));
        if (opts.track_evidence)
            res.state.log_evidence.push_back(e.log_evidence);
        sol.residual_history.push_back((y - ak * e.mu).norm());

        RVec g_new = e.mu.cwiseAbs2() + e.sigma_diag.cwiseMax(0.0);
        double change = 0.0;
        for (Eigen::Index s = 0; s < g.size(); ++s)
            change = std::max(change, std::abs(g_new(s) - g(s)) / g(s));
        if (!g_new.allFinite())
            throw Error(ErrorCode::divergence, "non-finite SBL prior variance at iteration " + std::to_string(it));
        ++sol.iterations;

        // Pruning keeps a strictly positive prior on every retained atom.
        const double floor = opts.gamma_floor * g_new.maxCoeff();
        std::vector<int> keep_active;
        std::vector<double> keep_gamma;
        for (Eigen::Index s = 0; s < g_new.size(); ++s)
        {
            if (g_new(s) > floor && g_new(s) > 0.0)
            {
                keep_active.push_back(active[static_cast<size_t>(s)]);
                keep_gamma.push_back(g_new(s));
            }
        }
        if (keep_active.empty())
        {
            // Nothing left to explain y: everything collapses to zero.
            active.clear();
            g.resize(0);
            sol.converged = true;
            break;
        }
        if (keep_active.size() != active.size())
        {
            active = std::move(keep_active);
            changed_set = true;
        }
        g = Eigen::Map<RVec>(keep_gamma.data(), static_cast<Eigen::Index>(keep_gamma.size()));
        if (change < opts.tol)
        {
            sol.converged = true;
            break;
        }
    }

    sol.coefficients = CVec::Zero(q);
    res.state.gamma = RVec::Zero(q);
    res.state.mean = CVec::Zero(q);
    res.state.active = active;
    res.state.iterations = sol.iterations;
    if (!active.empty())
    {
        if (changed_set)
            restrict(active, ak, gram_k, aty_k);
        const EStep e = e_step(ak, gram_k, aty_k, y, noise_var, g, true, false);
        if (!e.mu.allFinite())
            throw Error(ErrorCode::divergence, "non-finite SBL posterior after iteration " + std::to_string(sol.iterations));
        for (size_t k = 0; k < active.size(); ++k)
        {
            const Eigen::Index s = static_cast<Eigen::Index>(k);
            sol.coefficients(active[k]) = e.mu(s);
            res.state.gamma(active[k]) = g(s);
        }
        res.state.mean = sol.coefficients;
        res.state.covariance = e.sigma;
        sol.residual_history.push_back((y - ak * e.mu).norm());
    }
    sol.support = active;
    return res;
}

} // namespace xlmimo
