#include "eiv/solver.hpp"

#include "eiv/error.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <sstream>

namespace eiv
{

namespace
{

constexpr double kStaticReg = 1e-10; // diagonal shift for degenerate KKT systems
constexpr double kStepMin = 1e-6;
constexpr double kStepMax = 0.999;
constexpr double kStepDamp = 0.98;
constexpr int kRefinementSteps = 4;

double inf_norm(const VectorXd &v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Worst violation of membership in R_+^lp x SOC(d_1) x ... (0 when inside).
double cone_violation(const StandardConeProblem &P, const VectorXd &v)
{
    double worst = 0.0;
    for (Eigen::Index i = 0; i < P.num_lp_rows; ++i)
        worst = std::max(worst, -v(i));
    Eigen::Index k = P.num_lp_rows;
    for (Eigen::Index d : P.soc_dims)
    {
        worst = std::max(worst, v.segment(k + 1, d - 1).norm() - v(k));
        k += d;
    }
    return worst;
}

// Primal-dual interior-point method on the homogeneous self-dual embedding
// of min c'x s.t. Ax=b, Gx+s=h, s in K, with Nesterov-Todd scalings and
// Mehrotra predictor-corrector steps. The KKT system
//   [0 A' G'; A 0 0; G 0 -W^2] [dx dy dz] = [bx by bz]
// is solved by eliminating dz: H dx + A' dy = bx + G'(W^2+dI)^{-1} bz with
// H = dI + G'(W^2+dI)^{-1}G (SPD), then a Schur solve for dy, plus
// iterative refinement against the unregularized system.
class InteriorPoint
{
  public:
    InteriorPoint(const StandardConeProblem &P, const SolverOptions &opt) : P(P), opt(opt)
    {
        nvar = P.c.size();
        neq = P.b.size();
        m = P.h.size();
        nlp = P.num_lp_rows;
        cone_degree = static_cast<double>(nlp + static_cast<Eigen::Index>(P.soc_dims.size()));
        feastol = std::max(opt.tol * 1e-2, 1e-11);
        abstol = feastol;
        reltol = feastol;
    }

    SolverResult run()
    {
        x = VectorXd::Zero(nvar);
        y = VectorXd::Zero(neq);
        z = VectorXd::Zero(m);
        s = VectorXd::Zero(m);
        tau = 1.0;
        kap = 1.0;
        resx0 = std::max(1.0, P.c.norm());
        resy0 = std::max(1.0, P.b.norm());
        resz0 = std::max(1.0, P.h.norm());

        initialize();

        SolverResult res;
        res.status = SolveStatus::max_iter;

        VectorXd x1(nvar), y1(neq), z1(m), x2(nvar), y2(neq), z2(m);
        VectorXd lam(m), w_dz(m), ds_by_w(m), dtilde(m), lam_div(m), ds(m);

        double best_score = std::numeric_limits<double>::infinity();
        VectorXd bx(nvar), bz(m);

        int it = 0;
        for (; it <= opt.max_iter; ++it)
        {
            compute_residuals();
            update_statistics();

            // Convergence / certificate checks at full accuracy.
            if ((-cx > 0 || -by_ - hz >= -abstol) && pres < feastol && dres < feastol &&
                (gap < abstol || relgap < reltol))
            {
                res.status = SolveStatus::optimal;
                break;
            }
            if (std::isfinite(pinfres) && pinfres < feastol && tau < kap)
            {
                res.status = SolveStatus::infeasible;
                break;
            }
            if (std::isfinite(dinfres) && dinfres < feastol && tau < kap)
            {
                res.status = SolveStatus::unbounded;
                break;
            }
            // Track the best iterate for a reduced-accuracy fallback.
            const double score =
                std::max({pres, dres, std::min(gap, std::isfinite(relgap) ? relgap : gap)});
            if (score < best_score)
            {
                best_score = score;
                best = {x, y, z, s, tau, kap};
            }
            if (it == opt.max_iter)
                break;

            if (!update_scalings())
                break; // iterate left the cone: numerical trouble, fall back
            scale_w(z, lam);
            if (!factorize())
                break;

            // Static direction for the tau elimination: rhs [-c; b; h].
            bx = -P.c;
            kkt_solve(bx, P.b, P.h, x1, y1, z1);
            const double dtau_denom =
                kap / tau - P.c.dot(x1) - (neq ? P.b.dot(y1) : 0.0) - P.h.dot(z1);

            // Affine (predictor) direction.
            bz = s - rz;
            kkt_solve(rx, -ry, bz, x2, y2, z2);
            const double dtauaff =
                (rt - kap + P.c.dot(x2) + (neq ? P.b.dot(y2) : 0.0) + P.h.dot(z2)) / dtau_denom;
            z2 += dtauaff * z1; // now the affine dz
            scale_w(z2, w_dz);
            ds_by_w = -w_dz - lam;
            const double dkapaff = -kap - kap / tau * dtauaff;
            const double alpha_aff = line_search(lam, ds_by_w, w_dz, dtauaff, dkapaff);

            const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 1e-4, 0.999);

            // Combined (corrector) direction.
            conic_product(lam, lam, dtilde);
            VectorXd cross(m);
            conic_product(ds_by_w, w_dz, cross);
            add_cone_identity(dtilde, -sigma * mu_ipm);
            dtilde += cross;
            conic_division(lam, dtilde, lam_div);
            scale_w(lam_div, ds); // ds used as scratch: W (lam \ dtilde)
            const double oms = 1.0 - sigma;
            bx = oms * rx;
            bz = -oms * rz + ds;
            kkt_solve(bx, -oms * ry, bz, x2, y2, z2);
            const double bkap = kap * tau + dkapaff * dtauaff - sigma * mu_ipm;
            const double dtau =
                (oms * rt - bkap / tau + P.c.dot(x2) + (neq ? P.b.dot(y2) : 0.0) + P.h.dot(z2)) /
                dtau_denom;
            x2 += dtau * x1;
            if (neq)
                y2 += dtau * y1;
            z2 += dtau * z1;
            scale_w(z2, w_dz);
            ds_by_w = -(lam_div + w_dz);
            const double dkap = -(bkap + kap * dtau) / tau;

            const double alpha = kStepDamp * line_search(lam, ds_by_w, w_dz, dtau, dkap);
            scale_w(ds_by_w, ds);

            x += alpha * x2;
            y += alpha * y2;
            z += alpha * z2;
            s += alpha * ds;
            kap += alpha * dkap;
            tau += alpha * dtau;
        }

        res.iterations = it;

        if (res.status == SolveStatus::infeasible || res.status == SolveStatus::unbounded)
        {
            finalize_certificate(res);
            return res;
        }

        if (res.status != SolveStatus::optimal)
        {
            // Reduced-accuracy fallback on the best iterate seen.
            if (best_score < std::numeric_limits<double>::infinity())
            {
                x = best.x;
                y = best.y;
                z = best.z;
                s = best.s;
                tau = best.tau;
                kap = best.kap;
            }
            compute_residuals();
            update_statistics();
            if ((-cx > 0 || -by_ - hz >= -opt.tol) && pres < opt.tol && dres < opt.tol &&
                (gap < opt.tol || relgap < opt.tol))
                res.status = SolveStatus::optimal;
            else if (std::isfinite(pinfres) && pinfres < opt.tol && tau < kap)
                res.status = SolveStatus::infeasible;
            else if (std::isfinite(dinfres) && dinfres < opt.tol && tau < kap)
                res.status = SolveStatus::unbounded;
            if (res.status == SolveStatus::infeasible || res.status == SolveStatus::unbounded)
            {
                finalize_certificate(res);
                return res;
            }
        }

        res.x = x / tau;
        res.y_eq = y / tau;
        res.z_cone = z / tau;
        res.s_cone = s / tau;
        res.objective = P.c.dot(res.x);
        res.kkt = evaluate_kkt(P, res.x, res.y_eq, res.z_cone);
        return res;
    }

  private:
    struct Iterate
    {
        VectorXd x, y, z, s;
        double tau = 1.0, kap = 1.0;
    };

    const StandardConeProblem &P;
    SolverOptions opt;
    Eigen::Index nvar = 0, neq = 0, m = 0, nlp = 0;
    double cone_degree = 1.0;
    double feastol, abstol, reltol;

    VectorXd x, y, z, s;
    double tau = 1.0, kap = 1.0;
    Iterate best;

    // residuals/statistics
    VectorXd rx, ry, rz;
    double rt = 0.0, cx = 0.0, by_ = 0.0, hz = 0.0;
    double hresx = 0.0, hresy = 0.0, hresz = 0.0;
    double resx0 = 1.0, resy0 = 1.0, resz0 = 1.0;
    double gap = 0.0, mu_ipm = 0.0, relgap = 0.0, pres = 0.0, dres = 0.0;
    double pcost = 0.0, dcost = 0.0;
    double pinfres = std::numeric_limits<double>::quiet_NaN();
    double dinfres = std::numeric_limits<double>::quiet_NaN();

    // Nesterov-Todd scalings. LP rows: W^2 = diag(lp_v), W = diag(lp_w).
    // SOC blocks: W^2 = eta^2 (2 wb wb' - J) kept dense; scale_w uses the
    // analytic form with (eta, wb).
    VectorXd lp_v, lp_w;
    struct SocScaling
    {
        double eta = 1.0;
        double w0 = 1.0;
        VectorXd w1;
        MatrixXd W2;
        Eigen::LLT<MatrixXd> reg_llt; // LLT of W2 + delta I
    };
    std::vector<SocScaling> socs;
    bool identity_scaling = true;
    double delta = kStaticReg;

    Eigen::LLT<MatrixXd> H_llt;
    MatrixXd HinvAt;
    Eigen::LLT<MatrixXd> Meq_llt;

    void initialize()
    {
        lp_v = VectorXd::Ones(nlp);
        lp_w = VectorXd::Ones(nlp);
        socs.assign(P.soc_dims.size(), {});
        Eigen::Index k = nlp;
        for (size_t ic = 0; ic < P.soc_dims.size(); ++ic)
        {
            const Eigen::Index d = P.soc_dims[ic];
            socs[ic].w1 = VectorXd::Zero(d - 1);
            socs[ic].W2 = MatrixXd::Identity(d, d);
            k += d;
        }
        identity_scaling = true;
        factorize();

        VectorXd x1(nvar), y1(neq), z1(m);
        kkt_solve(VectorXd::Zero(nvar), P.b, P.h, x1, y1, z1);
        x = x1;
        bring_to_cone(-z1, s);
        VectorXd x2(nvar), y2(neq), z2(m);
        kkt_solve(-P.c, VectorXd::Zero(neq), VectorXd::Zero(m), x2, y2, z2);
        y = y2;
        bring_to_cone(z2, z);
    }

    void compute_residuals()
    {
        VectorXd hrx = P.G.transpose() * z;
        if (neq)
            hrx += P.A.transpose() * y;
        hresx = hrx.norm();
        rx = -hrx - tau * P.c;

        if (neq)
        {
            VectorXd hry = P.A * x;
            hresy = hry.norm();
            ry = hry - tau * P.b;
        }
        else
        {
            hresy = 0.0;
            ry.resize(0);
        }

        VectorXd hrz = s + P.G * x;
        hresz = hrz.norm();
        rz = hrz - tau * P.h;

        cx = P.c.dot(x);
        by_ = neq ? P.b.dot(y) : 0.0;
        hz = P.h.dot(z);
        rt = kap + cx + by_ + hz;
    }

    void update_statistics()
    {
        const double nx = x.norm(), ny = y.norm(), nz = z.norm(), ns = s.norm();
        gap = s.dot(z);
        mu_ipm = (gap + kap * tau) / (cone_degree + 1.0);
        pcost = cx / tau;
        dcost = -(hz + by_) / tau;
        if (pcost < 0.0)
            relgap = gap / (-pcost);
        else if (dcost > 0.0)
            relgap = gap / dcost;
        else
            relgap = std::numeric_limits<double>::quiet_NaN();

        const double nry = neq ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0;
        const double nrz = rz.norm() / std::max(resz0 + nx + ns, 1.0);
        pres = std::max(nry, nrz) / tau;
        dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / tau;

        pinfres = std::numeric_limits<double>::quiet_NaN();
        dinfres = std::numeric_limits<double>::quiet_NaN();
        if ((hz + by_) / std::max(ny + nz, 1.0) < -reltol)
            pinfres = hresx / std::max(ny + nz, 1.0);
        if (cx / std::max(nx, 1.0) < -reltol)
            dinfres = std::max(hresy / std::max(nx, 1.0), hresz / std::max(nx + ns, 1.0));
    }

    // --- cone algebra ------------------------------------------------------

    void bring_to_cone(const VectorXd &r, VectorXd &out)
    {
        double alpha = -0.99;
        for (Eigen::Index i = 0; i < nlp; ++i)
            alpha = std::max(alpha, -r(i));
        Eigen::Index k = nlp;
        for (Eigen::Index d : P.soc_dims)
        {
            alpha = std::max(alpha, r.segment(k + 1, d - 1).norm() - r(k));
            k += d;
        }
        out = r;
        alpha += 1.0;
        out.head(nlp).array() += alpha;
        k = nlp;
        for (Eigen::Index d : P.soc_dims)
        {
            out(k) += alpha;
            k += d;
        }
    }

    bool update_scalings()
    {
        for (Eigen::Index i = 0; i < nlp; ++i)
        {
            if (s(i) <= 0.0 || z(i) <= 0.0)
                return false;
            lp_v(i) = s(i) / z(i);
            lp_w(i) = std::sqrt(lp_v(i));
        }
        Eigen::Index k = nlp;
        for (size_t ic = 0; ic < P.soc_dims.size(); ++ic)
        {
            const Eigen::Index d = P.soc_dims[ic];
            const double sres = s(k) * s(k) - s.segment(k + 1, d - 1).squaredNorm();
            const double zres = z(k) * z(k) - z.segment(k + 1, d - 1).squaredNorm();
            if (sres <= 0.0 || zres <= 0.0)
                return false;
            const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
            VectorXd sb = s.segment(k, d) / snorm;
            VectorXd zb = z.segment(k, d) / znorm;
            const double eta2 = snorm / znorm;
            const double gam = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
            SocScaling &sc = socs[ic];
            sc.eta = std::sqrt(eta2);
            sc.w0 = (sb(0) + zb(0)) / (2.0 * gam);
            sc.w1 = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gam);
            // W^2 = eta^2 (2 wb wb' - J), J = diag(1, -I).
            VectorXd wb(d);
            wb(0) = sc.w0;
            wb.tail(d - 1) = sc.w1;
            sc.W2 = eta2 * 2.0 * wb * wb.transpose();
            sc.W2(0, 0) -= eta2;
            sc.W2.bottomRightCorner(d - 1, d - 1) += eta2 * MatrixXd::Identity(d - 1, d - 1);
            k += d;
        }
        identity_scaling = false;
        return true;
    }

    // lambda = W v (NT scaling applied to a cone vector).
    void scale_w(const VectorXd &v, VectorXd &out) const
    {
        out.resize(m);
        if (identity_scaling)
        {
            out = v;
            return;
        }
        out.head(nlp) = lp_w.cwiseProduct(v.head(nlp));
        Eigen::Index k = nlp;
        for (const SocScaling &sc : socs)
        {
            const Eigen::Index d = sc.w1.size() + 1;
            const double zeta = sc.w1.dot(v.segment(k + 1, d - 1));
            out(k) = sc.eta * (sc.w0 * v(k) + zeta);
            out.segment(k + 1, d - 1) =
                sc.eta * (v.segment(k + 1, d - 1) + (v(k) + zeta / (1.0 + sc.w0)) * sc.w1);
            k += d;
        }
    }

    // w = u o v (Jordan product per cone block).
    void conic_product(const VectorXd &u, const VectorXd &v, VectorXd &w) const
    {
        w.resize(m);
        w.head(nlp) = u.head(nlp).cwiseProduct(v.head(nlp));
        Eigen::Index k = nlp;
        for (Eigen::Index d : P.soc_dims)
        {
            const double u0 = u(k), v0 = v(k);
            w(k) = u.segment(k, d).dot(v.segment(k, d));
            w.segment(k + 1, d - 1) =
                u0 * v.segment(k + 1, d - 1) + v0 * u.segment(k + 1, d - 1);
            k += d;
        }
    }

    // v = u \ w (inverse Jordan product).
    void conic_division(const VectorXd &u, const VectorXd &w, VectorXd &v) const
    {
        v.resize(m);
        v.head(nlp) = w.head(nlp).cwiseQuotient(u.head(nlp));
        Eigen::Index k = nlp;
        for (Eigen::Index d : P.soc_dims)
        {
            const double u0 = u(k), w0 = w(k);
            const double rho = u0 * u0 - u.segment(k + 1, d - 1).squaredNorm();
            const double zeta = u.segment(k + 1, d - 1).dot(w.segment(k + 1, d - 1));
            v(k) = (u0 * w0 - zeta) / rho;
            v.segment(k + 1, d - 1) = ((zeta / u0 - w0) / rho) * u.segment(k + 1, d - 1) +
                                      w.segment(k + 1, d - 1) / u0;
            k += d;
        }
    }

    // v += offset on the cone identity element e.
    void add_cone_identity(VectorXd &v, double offset) const
    {
        v.head(nlp).array() += offset;
        Eigen::Index k = nlp;
        for (Eigen::Index d : P.soc_dims)
        {
            v(k) += offset;
            k += d;
        }
    }

    // Largest step alpha with (lambda + alpha ds, lambda + alpha dz) in the
    // cone and tau/kap positive, in the lambda-scaled frame.
    double line_search(const VectorXd &lam, const VectorXd &ds, const VectorXd &dz, double dtau,
                       double dkap) const
    {
        double alpha = 1.0 / kStepMin;
        if (nlp > 0)
        {
            const double rhomin = (ds.head(nlp).cwiseQuotient(lam.head(nlp))).minCoeff();
            const double sigmin = (dz.head(nlp).cwiseQuotient(lam.head(nlp))).minCoeff();
            const double worst = std::min(rhomin, sigmin);
            if (worst < 0.0)
                alpha = 1.0 / (-worst);
        }
        if (dtau < 0.0)
            alpha = std::min(alpha, -tau / dtau);
        if (dkap < 0.0)
            alpha = std::min(alpha, -kap / dkap);

        double conic_step = 0.0;
        Eigen::Index k = nlp;
        for (Eigen::Index d : P.soc_dims)
        {
            const double lk2 = lam(k) * lam(k) - lam.segment(k + 1, d - 1).squaredNorm();
            if (lk2 <= 0.0)
            {
                k += d;
                continue;
            }
            const double lknorm = std::sqrt(lk2);
            VectorXd lkbar = lam.segment(k, d) / lknorm;
            const double inv = 1.0 / lknorm;
            auto block_step = [&](const VectorXd &dv) {
                const double lk_dv =
                    lkbar(0) * dv(k) - lkbar.tail(d - 1).dot(dv.segment(k + 1, d - 1));
                const double r0 = inv * lk_dv;
                const double factor = (lk_dv + dv(k)) / (lkbar(0) + 1.0);
                const VectorXd r1 =
                    inv * (dv.segment(k + 1, d - 1) - factor * lkbar.tail(d - 1));
                return r1.norm() - r0;
            };
            conic_step = std::max({conic_step, block_step(ds), block_step(dz)});
            k += d;
        }
        if (conic_step > 0.0)
            alpha = std::min(alpha, 1.0 / conic_step);
        return std::clamp(alpha, kStepMin, kStepMax);
    }

    // --- KKT machinery ------------------------------------------------------

    // Solves (W^2 + delta I) out = B blockwise.
    MatrixXd apply_winv_sq(const MatrixXd &B) const
    {
        MatrixXd out(B.rows(), B.cols());
        if (identity_scaling)
        {
            out = B / (1.0 + delta);
            return out;
        }
        out.topRows(nlp) = (lp_v.array() + delta).inverse().matrix().asDiagonal() * B.topRows(nlp);
        Eigen::Index k = nlp;
        for (const SocScaling &sc : socs)
        {
            const Eigen::Index d = sc.w1.size() + 1;
            out.middleRows(k, d) = sc.reg_llt.solve(B.middleRows(k, d));
            k += d;
        }
        return out;
    }

    // out = W^2 v (no regularization; used by iterative refinement).
    VectorXd apply_wsq(const VectorXd &v) const
    {
        VectorXd out(m);
        if (identity_scaling)
            return v;
        out.head(nlp) = lp_v.cwiseProduct(v.head(nlp));
        Eigen::Index k = nlp;
        for (const SocScaling &sc : socs)
        {
            const Eigen::Index d = sc.w1.size() + 1;
            out.segment(k, d) = sc.W2 * v.segment(k, d);
            k += d;
        }
        return out;
    }

    bool factorize()
    {
        delta = kStaticReg;
        for (int attempt = 0; attempt < 5; ++attempt)
        {
            bool ok = true;
            for (SocScaling &sc : socs)
            {
                const Eigen::Index d = sc.w1.size() + 1;
                MatrixXd R = sc.W2 + delta * MatrixXd::Identity(d, d);
                sc.reg_llt.compute(R);
                if (sc.reg_llt.info() != Eigen::Success)
                {
                    ok = false;
                    break;
                }
            }
            if (ok)
            {
                MatrixXd H = P.G.transpose() * apply_winv_sq(P.G);
                H.diagonal().array() += delta;
                H = ((H + H.transpose()) * 0.5).eval();
                H_llt.compute(H);
                ok = H_llt.info() == Eigen::Success;
                if (ok && neq)
                {
                    HinvAt = H_llt.solve(P.A.transpose());
                    MatrixXd Meq = P.A * HinvAt;
                    Meq.diagonal().array() += delta;
                    Meq = ((Meq + Meq.transpose()) * 0.5).eval();
                    Meq_llt.compute(Meq);
                    ok = Meq_llt.info() == Eigen::Success;
                }
            }
            if (ok)
                return true;
            delta *= 100.0;
        }
        return false;
    }

    void base_solve(const VectorXd &bx, const VectorXd &by, const VectorXd &bz, VectorXd &dx,
                    VectorXd &dy, VectorXd &dz) const
    {
        VectorXd t = apply_winv_sq(bz);
        VectorXd rhs = bx + P.G.transpose() * t;
        if (neq)
        {
            VectorXd u = H_llt.solve(rhs);
            dy = Meq_llt.solve(P.A * u - by);
            dx = u - HinvAt * dy;
        }
        else
        {
            dy.resize(0);
            dx = H_llt.solve(rhs);
        }
        dz = apply_winv_sq(P.G * dx - bz);
    }

    void kkt_solve(const VectorXd &bx, const VectorXd &by, const VectorXd &bz, VectorXd &dx,
                   VectorXd &dy, VectorXd &dz) const
    {
        base_solve(bx, by, bz, dx, dy, dz);

        const double rhs_norm = 1.0 + inf_norm(bx) + inf_norm(by) + inf_norm(bz);
        double prev_err = std::numeric_limits<double>::infinity();
        VectorXd ex(nvar), ey(neq), ez(m), cx_(nvar), cy_(neq), cz_(m);
        for (int ref = 0; ref < kRefinementSteps; ++ref)
        {
            ex = bx - P.G.transpose() * dz;
            if (neq)
            {
                ex -= P.A.transpose() * dy;
                ey = by - P.A * dx;
            }
            const double err = std::max({inf_norm(ex), inf_norm(ey),
                                         inf_norm(ez = bz - P.G * dx + apply_wsq(dz))});
            if (err < 1e-14 * rhs_norm || err >= prev_err)
                break;
            prev_err = err;
            base_solve(ex, ey, ez, cx_, cy_, cz_);
            dx += cx_;
            if (neq)
                dy += cy_;
            dz += cz_;
        }
    }

    void finalize_certificate(SolverResult &res) const
    {
        const double qnan = std::numeric_limits<double>::quiet_NaN();
        res.x = VectorXd::Constant(nvar, qnan);
        res.objective = qnan;
        if (res.status == SolveStatus::infeasible)
        {
            // Farkas certificate: A'y + G'z ~ 0, z in K*, b'y + h'z = -1.
            const double scale = -(by_ + hz);
            res.y_eq = y / scale;
            res.z_cone = z / scale;
        }
        else
        {
            // Unboundedness certificate: ray with c'x = -1.
            res.x = x / (-cx);
            res.objective = -std::numeric_limits<double>::infinity();
        }
        res.kkt = {qnan, qnan, qnan};
    }
};

void check_lp_shapes(const LinearProgram &lp)
{
    const Eigen::Index n = lp.c.size();
    require(n >= 1, ErrorKind::shape, "solver: empty objective");
    require(lp.A_ineq.rows() == lp.b_ineq.size(), ErrorKind::shape,
            "solver: A_ineq/b_ineq row mismatch");
    require(lp.A_ineq.rows() == 0 || lp.A_ineq.cols() == n, ErrorKind::shape,
            "solver: A_ineq column count differs from variable count");
    require(lp.A_eq.rows() == lp.b_eq.size(), ErrorKind::shape, "solver: A_eq/b_eq row mismatch");
    require(lp.A_eq.rows() == 0 || lp.A_eq.cols() == n, ErrorKind::shape,
            "solver: A_eq column count differs from variable count");
    require(lp.nonneg_mask.empty() || lp.nonneg_mask.size() == static_cast<size_t>(n),
            ErrorKind::shape, "solver: nonneg_mask length differs from variable count");
}

} // namespace

StandardConeProblem to_standard_form(const SecondOrderConeProgram &socp)
{
    const LinearProgram &lp = socp.lp;
    check_lp_shapes(lp);
    const Eigen::Index n = lp.c.size();

    Eigen::Index num_nonneg = 0;
    for (bool f : lp.nonneg_mask)
        num_nonneg += f ? 1 : 0;

    Eigen::Index cone_rows = 0;
    std::vector<Eigen::Index> soc_dims;
    for (const ConeBlock &cb : socp.cone_blocks)
    {
        require(cb.t_idx >= 0 && cb.t_idx < n, ErrorKind::shape, "solver: cone t index out of range");
        require(!cb.x_idx.empty(), ErrorKind::shape, "solver: empty cone block");
        for (Eigen::Index j : cb.x_idx)
            require(j >= 0 && j < n, ErrorKind::shape, "solver: cone index out of range");
        cone_rows += static_cast<Eigen::Index>(cb.x_idx.size()) + 1;
        soc_dims.push_back(static_cast<Eigen::Index>(cb.x_idx.size()) + 1);
    }

    Eigen::Index nlp = num_nonneg + lp.A_ineq.rows();
    const bool dummy = (nlp + cone_rows == 0);
    if (dummy)
        nlp = 1; // keep the cone nonempty: 0'x <= 1

    StandardConeProblem P;
    P.c = lp.c;
    P.A = lp.A_eq;
    P.b = lp.b_eq;
    P.num_lp_rows = nlp;
    P.soc_dims = soc_dims;
    P.G = MatrixXd::Zero(nlp + cone_rows, n);
    P.h = VectorXd::Zero(nlp + cone_rows);

    Eigen::Index r = 0;
    if (dummy)
    {
        P.h(r++) = 1.0;
    }
    else
    {
        for (Eigen::Index j = 0; j < n; ++j)
            if (!lp.nonneg_mask.empty() && lp.nonneg_mask[static_cast<size_t>(j)])
                P.G(r++, j) = -1.0;
        if (lp.A_ineq.rows())
        {
            P.G.middleRows(r, lp.A_ineq.rows()) = lp.A_ineq;
            P.h.segment(r, lp.A_ineq.rows()) = lp.b_ineq;
            r += lp.A_ineq.rows();
        }
    }
    for (const ConeBlock &cb : socp.cone_blocks)
    {
        P.G(r++, cb.t_idx) = -1.0;
        for (Eigen::Index j : cb.x_idx)
            P.G(r++, j) = -1.0;
    }
    return P;
}

KktRecord evaluate_kkt(const StandardConeProblem &P, const VectorXd &x, const VectorXd &y,
                       const VectorXd &z)
{
    KktRecord rec;
    double pres = cone_violation(P, P.h - P.G * x);
    if (P.b.size())
        pres = std::max(pres, inf_norm(P.A * x - P.b));
    rec.primal_residual = pres;

    VectorXd dres_vec = P.c + P.G.transpose() * z;
    if (P.b.size())
        dres_vec += P.A.transpose() * y;
    rec.dual_residual = std::max(inf_norm(dres_vec), cone_violation(P, z));

    rec.gap = std::abs(P.c.dot(x) + (P.b.size() ? P.b.dot(y) : 0.0) + P.h.dot(z));
    return rec;
}

SolverResult solve_standard(const StandardConeProblem &P, const SolverOptions &options)
{
    require(options.tol > 0.0, ErrorKind::parse, "solver: tol must be positive");
    if (options.method == SolverOptions::Method::admm)
        return solve_admm(P, options);
    InteriorPoint ipm(P, options);
    return ipm.run();
}

SolverResult solve_lp(const LinearProgram &lp, const SolverOptions &options)
{
    SecondOrderConeProgram socp;
    socp.lp = lp;
    return solve_standard(to_standard_form(socp), options);
}

SolverResult solve_lp(const LinearProgram &lp, double tol)
{
    SolverOptions opt;
    opt.tol = tol;
    return solve_lp(lp, opt);
}

SolverResult solve_socp(const SecondOrderConeProgram &socp, const SolverOptions &options)
{
    return solve_standard(to_standard_form(socp), options);
}

SolverResult solve_socp(const SecondOrderConeProgram &socp, double tol)
{
    SolverOptions opt;
    opt.tol = tol;
    return solve_socp(socp, opt);
}

std::string dump_standard_form(const StandardConeProblem &P)
{
    std::ostringstream os;
    os.precision(17);
    os << "min c'x s.t. Ax=b, Gx+s=h, s in R+^" << P.num_lp_rows;
    for (Eigen::Index d : P.soc_dims)
        os << " x SOC(" << d << ")";
    os << "\nc = " << P.c.transpose() << "\n";
    os << "A (" << P.A.rows() << "x" << P.A.cols() << "):\n" << P.A << "\nb = " << P.b.transpose()
       << "\n";
    os << "G (" << P.G.rows() << "x" << P.G.cols() << "):\n" << P.G << "\nh = " << P.h.transpose()
       << "\n";
    return os.str();
}

} // namespace eiv
