#include "doctest.h"

#include <algorithm>

#include "common.hpp"
#include "xlmimo/dictionary.hpp"
#include "xlmimo/solvers.hpp"

using namespace xt;

namespace
{

// 16-row angular dictionary (4x4 tile, Z = 8) with 64 atoms.
const AngularDictionary &small_dict()
{
    static const AngularDictionary d = build_angular(4, 4, lambda / 2, lambda / 2, lambda, 8);
    return d;
}

// Posterior mean and covariance from the marginal covariance, the textbook way.
void reference_posterior(const CMat &a, const CVec &y, double s2, const RVec &gamma, CVec &mu, CMat &sigma)
{
    CMat c = a * gamma.asDiagonal() * a.adjoint();
    c.diagonal().array() += s2;
    const CMat cinv = c.inverse();
    mu = gamma.asDiagonal() * a.adjoint() * cinv * y;
    sigma = CMat(gamma.asDiagonal()) - gamma.asDiagonal() * a.adjoint() * cinv * a * gamma.asDiagonal();
}

} // namespace

TEST_SUITE("solvers")
{

TEST_CASE("OMP on the identity dictionary")
{
    const CVec y = (CVec(3) << 0.0, 2.0, 0.0).finished();
    OmpOptions o;
    o.max_atoms = 1;
    const SparseSolution s = omp(CMat::Identity(3, 3), y, o);
    CHECK((s.coefficients - y).norm() == 0.0);
    CHECK(s.residual_history.back() == 0.0);
    REQUIRE(s.support.size() == 1);
    CHECK(s.support[0] == 1);
}

TEST_CASE("first OMP atom is the brute force correlation argmax")
{
    std::mt19937_64 rng(21);
    const CMat a = random_cmat(rng, 12, 40);
    for (int rep = 0; rep < 10; ++rep)
    {
        const CVec y = random_cvec(rng, 12);
        int best = -1;
        double score = -1.0;
        for (int q = 0; q < a.cols(); ++q)
        {
            cd acc = 0.0;
            for (int p = 0; p < a.rows(); ++p)
                acc += std::conj(a(p, q)) * y(p);
            const double s = std::abs(acc) / a.col(q).norm();
            if (s > score)
            {
                score = s;
                best = q;
            }
        }
        OmpOptions o;
        o.max_atoms = 1;
        CHECK(omp(a, y, o).support[0] == best);
    }
}

TEST_CASE("OMP recovers planted 2-sparse on-grid vectors")
{
    const AngularDictionary &d = small_dict();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pick(0, d.size() - 1);
    int exact = 0;
    for (int rep = 0; rep < 20; ++rep)
    {
        int i = pick(rng);
        int j = pick(rng);
        // well separated: different cosines on both axes
        while (d.cosine_h(j) == d.cosine_h(i) || d.cosine_v(j) == d.cosine_v(i))
            j = pick(rng);
        CVec x = CVec::Zero(d.size());
        x(i) = cd(1.0, 0.5);
        x(j) = cd(-0.7, 0.2);
        const CVec y = d.atoms * x;
        OmpOptions o;
        o.max_atoms = 2;
        const SparseSolution s = omp(d.atoms, y, o);
        std::vector<int> sup = s.support;
        std::sort(sup.begin(), sup.end());
        const bool same = sup == std::vector<int>{std::min(i, j), std::max(i, j)};
        exact += same && (s.coefficients - x).norm() < 1e-10 * x.norm();
    }
    CHECK(exact == 20);
}

TEST_CASE("OMP residual stopping")
{
    const CVec y = (CVec(3) << 3.0, 0.001, 0.0).finished();
    OmpOptions o;
    o.residual_tol = 0.01;
    const SparseSolution s = omp(CMat::Identity(3, 3), y, o);
    CHECK(s.support.size() == 1);
    CHECK(s.converged);
}

TEST_CASE("OMP residual norms never increase")
{
    std::mt19937_64 rng(2);
    const CMat a = random_cmat(rng, 20, 50);
    const CVec y = random_cvec(rng, 20);
    OmpOptions o;
    o.max_atoms = 15;
    const SparseSolution s = omp(a, y, o);
    CHECK(s.residual_history.size() == 16);
    for (size_t k = 1; k < s.residual_history.size(); ++k)
        CHECK(s.residual_history[k] <= s.residual_history[k - 1] + 1e-12);
    CHECK(s.correlation_ops == 15LL * 20 * 50);
}

TEST_CASE("OMP argument checks")
{
    OmpOptions o;
    o.max_atoms = 4;
    CHECK_THROWS_AS(omp(CMat::Identity(3, 3), CVec::Ones(3), o), Error);
    CHECK_THROWS_AS(omp(CMat::Identity(3, 3), CVec::Ones(2), {}), Error);
    CMat z = CMat::Identity(3, 3);
    z.col(1).setZero();
    CHECK_THROWS_AS(omp(z, CVec::Ones(3), {}), Error);
}

TEST_CASE("OMP on a zero observation returns zero")
{
    const SparseSolution s = omp(CMat::Identity(3, 3), CVec::Zero(3), {});
    CHECK(s.support.empty());
    CHECK(s.coefficients.norm() == 0.0);
}

TEST_CASE("SBL scalar fixed point")
{
    const CMat a = CMat::Constant(4, 1, cd(0.5, 0.0));
    const SblResult r = sbl_em(a, 3.0 * a.col(0), 1e-12, {});
    CHECK(std::abs(r.state.mean(0) - 3.0) < 1e-6);
}

TEST_CASE("SBL on a zero observation shrinks to zero")
{
    std::mt19937_64 rng(9);
    const CMat a = random_cmat(rng, 8, 12);
    const SblResult r = sbl_em(a, CVec::Zero(8), 1e-2, {});
    CHECK(r.state.mean.norm() < 1e-12);
    CHECK(r.state.gamma.maxCoeff() < 1e-2);
}

TEST_CASE("SBL and OMP agree on a 1-sparse problem")
{
    const AngularDictionary &d = small_dict();
    CVec x = CVec::Zero(d.size());
    x(27) = cd(0.8, -0.3);
    const CVec y = d.atoms * x;
    OmpOptions o;
    o.max_atoms = 1;
    const SparseSolution s = omp(d.atoms, y, o);
    const SblResult b = sbl_em(d.atoms, y, 1e-10 * y.squaredNorm() / y.size(), {});
    Eigen::Index best = 0;
    b.state.mean.cwiseAbs().maxCoeff(&best);
    CHECK(best == s.support[0]);
    CHECK(best == 27);
}

TEST_CASE("SBL posterior matches the marginal covariance form")
{
    std::mt19937_64 rng(31);
    // both the atom-space (Q <= P) and observation-space (Q > P) branches
    for (auto [p, q] : {std::pair{20, 12}, std::pair{10, 30}})
    {
        const CMat a = random_cmat(rng, p, q);
        CVec x = CVec::Zero(q);
        x(1) = 1.0;
        x(5) = cd(0, -2.0);
        const CVec y = a * x + 0.05 * random_cvec(rng, p);
        SblOptions opts;
        opts.gamma_floor = 0.0;
        const SblResult r = sbl_em(a, y, 0.005, opts);
        REQUIRE(static_cast<Eigen::Index>(r.state.active.size()) == q);
        CVec mu;
        CMat sigma;
        reference_posterior(a, y, 0.005, r.state.gamma, mu, sigma);
        CHECK((r.state.mean - mu).norm() < 1e-8 * mu.norm());
        CHECK((r.state.covariance - sigma).norm() < 1e-8 * r.state.gamma.maxCoeff());
    }
}

TEST_CASE("SBL evidence matches the direct evaluation and never decreases")
{
    std::mt19937_64 rng(41);
    const CMat a = random_cmat(rng, 10, 24);
    CVec x = CVec::Zero(24);
    x(3) = 2.0;
    x(17) = cd(1, 1);
    const CVec y = a * x + 0.1 * random_cvec(rng, 10);
    SblOptions opts;
    opts.track_evidence = true;
    opts.gamma_floor = 0.0;
    opts.max_iters = 50;
    opts.tol = 0.0;
    const SblResult r = sbl_em(a, y, 0.02, opts);
    const std::vector<double> &ev = r.state.log_evidence;
    REQUIRE(ev.size() == 50);
    CHECK(ev[0] == doctest::Approx(sbl_log_evidence(a, y, 0.02, RVec::Ones(24))).epsilon(1e-10));
    for (size_t k = 1; k < ev.size(); ++k)
        CHECK(ev[k] >= ev[k - 1] - 1e-9 * std::abs(ev[k - 1]));
}

TEST_CASE("SBL rejects a non-positive noise variance")
{
    CHECK_THROWS_AS(sbl_em(CMat::Identity(2, 2), CVec::Ones(2), 0.0, {}), Error);
}

} // TEST_SUITE
