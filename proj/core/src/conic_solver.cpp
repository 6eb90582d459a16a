#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <iostream>
#include <limits>

#include "cmbf/conic.hpp"
#include "sym_util.hpp"

// Homogeneous self-dual primal-dual interior-point method with
// Nesterov-Todd scaling over the product cone
// K = nonneg^l x SOC(q_1)... x PSD(d_1)...
// Mehrotra predictor-corrector; KKT solves via sparse LDLT with static
// regularization and iterative refinement.

namespace cmbf::conic {

namespace {

using detail::smat;
using detail::svec;
using detail::svec_len;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kStepFraction = 0.99;
constexpr double kStaticReg = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConeLayout {
  int l = 0;
  std::vector<int> soc_dims;
  std::vector<int> psd_dims;
  std::vector<int> soc_offsets;
  std::vector<int> psd_offsets;
  int rows = 0;
  double degree = 0.0;

  static ConeLayout from(const ConicProblem::StandardForm& f) {
    ConeLayout c;
    c.l = f.nonneg;
    c.soc_dims = f.soc_dims;
    c.psd_dims = f.psd_dims;
    int off = c.l;
    for (int q : c.soc_dims) {
      c.soc_offsets.push_back(off);
      off += q;
    }
    for (int d : c.psd_dims) {
      c.psd_offsets.push_back(off);
      off += svec_len(d);
    }
    c.rows = off;
    c.degree = c.l + static_cast<double>(c.soc_dims.size());
    for (int d : c.psd_dims) c.degree += d;
    return c;
  }

  VectorXd unit() const {
    VectorXd e = VectorXd::Zero(rows);
    e.head(l).setOnes();
    for (std::size_t i = 0; i < soc_dims.size(); ++i) e(soc_offsets[i]) = 1.0;
    for (std::size_t i = 0; i < psd_dims.size(); ++i) {
      const int d = psd_dims[i];
      for (int k = 0; k < d; ++k)
        e(psd_offsets[i] + detail::svec_index(k, k, d)) = 1.0;
    }
    return e;
  }
};

struct SocScale {
  double eta = 1.0;
  VectorXd wbar;
};
struct PsdScale {
  MatrixXd R, Rinv;
  VectorXd sigma;
};

struct Scaling {
  VectorXd w_lp;  // W = diag(w) on the nonneg part
  std::vector<SocScale> soc;
  std::vector<PsdScale> psd;
  VectorXd lambda;  // scaled point, ambient coordinates
};

// W_bar u for the SOC scaling matrix [w0 w1'; w1 I + w1 w1'/(1+w0)]
VectorXd soc_wbar_apply(const VectorXd& wbar, const VectorXd& u) {
  const double w0 = wbar(0);
  const auto w1 = wbar.tail(wbar.size() - 1);
  const auto u1 = u.tail(u.size() - 1);
  VectorXd r(u.size());
  const double dot = w1.dot(u1);
  r(0) = w0 * u(0) + dot;
  r.tail(u.size() - 1) = u1 + (u(0) + dot / (1.0 + w0)) * w1;
  return r;
}

bool compute_scaling(const ConeLayout& cone, const VectorXd& s,
                     const VectorXd& z, Scaling& out) {
  out.lambda.resize(cone.rows);
  // nonneg
  out.w_lp.resize(cone.l);
  for (int i = 0; i < cone.l; ++i) {
    if (s(i) <= 0.0 || z(i) <= 0.0) return false;
    out.w_lp(i) = std::sqrt(s(i) / z(i));
    out.lambda(i) = std::sqrt(s(i) * z(i));
  }
  // SOC
  out.soc.assign(cone.soc_dims.size(), {});
  for (std::size_t ci = 0; ci < cone.soc_dims.size(); ++ci) {
    const int q = cone.soc_dims[ci];
    const int o = cone.soc_offsets[ci];
    const VectorXd sb = s.segment(o, q);
    const VectorXd zb = z.segment(o, q);
    const double sres = sb(0) * sb(0) - sb.tail(q - 1).squaredNorm();
    const double zres = zb(0) * zb(0) - zb.tail(q - 1).squaredNorm();
    if (sres <= 0.0 || zres <= 0.0 || sb(0) <= 0.0 || zb(0) <= 0.0)
      return false;
    const double snorm = std::sqrt(sres);
    const double znorm = std::sqrt(zres);
    VectorXd sbar = sb / snorm, zbar = zb / znorm;
    const double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
    SocScale sc;
    sc.eta = std::sqrt(snorm / znorm);
    sc.wbar.resize(q);
    sc.wbar(0) = (sbar(0) + zbar(0)) / (2.0 * gamma);
    sc.wbar.tail(q - 1) =
        (sbar.tail(q - 1) - zbar.tail(q - 1)) / (2.0 * gamma);
    // lambda = W z
    out.lambda.segment(o, q) = sc.eta * soc_wbar_apply(sc.wbar, zb);
    out.soc[ci] = std::move(sc);
  }
  // PSD
  out.psd.assign(cone.psd_dims.size(), {});
  for (std::size_t ci = 0; ci < cone.psd_dims.size(); ++ci) {
    const int d = cone.psd_dims[ci];
    const int o = cone.psd_offsets[ci];
    const MatrixXd S = smat(s.segment(o, svec_len(d)), d);
    const MatrixXd Z = smat(z.segment(o, svec_len(d)), d);
    Eigen::LLT<MatrixXd> ls(S), lz(Z);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
      return false;
    const MatrixXd Ls = ls.matrixL();
    const MatrixXd Lz = lz.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd sig = svd.singularValues();
    if (sig.minCoeff() <= 0.0) return false;
    PsdScale ps;
    ps.sigma = sig;
    const VectorXd isqrt = sig.cwiseSqrt().cwiseInverse();
    ps.R = Ls * svd.matrixV() * isqrt.asDiagonal();
    ps.Rinv = (Lz * svd.matrixU() * isqrt.asDiagonal()).transpose();
    // lambda = diag(sigma)
    VectorXd lam = VectorXd::Zero(svec_len(d));
    for (int k = 0; k < d; ++k) lam(detail::svec_index(k, k, d)) = sig(k);
    out.lambda.segment(o, svec_len(d)) = lam;
    out.psd[ci] = std::move(ps);
  }
  return true;
}

enum class Op { W, WT, WinvT };

// apply the NT scaling (or its transpose / inverse-transpose) blockwise
VectorXd apply_scaling(const ConeLayout& cone, const Scaling& sc,
                       const VectorXd& u, Op op) {
  VectorXd r(cone.rows);
  for (int i = 0; i < cone.l; ++i)
    r(i) = (op == Op::WinvT ? u(i) / sc.w_lp(i) : u(i) * sc.w_lp(i));
  for (std::size_t ci = 0; ci < cone.soc_dims.size(); ++ci) {
    const int q = cone.soc_dims[ci];
    const int o = cone.soc_offsets[ci];
    const auto& s = sc.soc[ci];
    VectorXd ub = u.segment(o, q);
    if (op == Op::WinvT) {
      // W^{-1} = (1/eta) J Wbar J
      ub(0) = ub(0);
      VectorXd ju = ub;
      ju.tail(q - 1) *= -1.0;
      VectorXd t = soc_wbar_apply(s.wbar, ju);
      t.tail(q - 1) *= -1.0;
      r.segment(o, q) = t / s.eta;
    } else {
      r.segment(o, q) = s.eta * soc_wbar_apply(s.wbar, ub);
    }
  }
  for (std::size_t ci = 0; ci < cone.psd_dims.size(); ++ci) {
    const int d = cone.psd_dims[ci];
    const int o = cone.psd_offsets[ci];
    const auto& p = sc.psd[ci];
    const MatrixXd U = smat(u.segment(o, svec_len(d)), d);
    MatrixXd V;
    switch (op) {
      case Op::W:
        V = p.R.transpose() * U * p.R;
        break;
      case Op::WT:
        V = p.R * U * p.R.transpose();
        break;
      case Op::WinvT:
        V = p.Rinv * U * p.Rinv.transpose();
        break;
    }
    r.segment(o, svec_len(d)) = svec(0.5 * (V + V.transpose()));
  }
  return r;
}

// Jordan product u o v in the ambient (scaled-space) coordinates
VectorXd jordan_mul(const ConeLayout& cone, const VectorXd& u,
                    const VectorXd& v) {
  VectorXd r(cone.rows);
  for (int i = 0; i < cone.l; ++i) r(i) = u(i) * v(i);
  for (std::size_t ci = 0; ci < cone.soc_dims.size(); ++ci) {
    const int q = cone.soc_dims[ci];
    const int o = cone.soc_offsets[ci];
    const auto ub = u.segment(o, q);
    const auto vb = v.segment(o, q);
    r(o) = ub.dot(vb);
    r.segment(o + 1, q - 1) =
        ub(0) * vb.tail(q - 1) + vb(0) * ub.tail(q - 1);
  }
  for (std::size_t ci = 0; ci < cone.psd_dims.size(); ++ci) {
    const int d = cone.psd_dims[ci];
    const int o = cone.psd_offsets[ci];
    const MatrixXd U = smat(u.segment(o, svec_len(d)), d);
    const MatrixXd V = smat(v.segment(o, svec_len(d)), d);
    r.segment(o, svec_len(d)) = svec(0.5 * (U * V + V * U));
  }
  return r;
}

// solve lambda o u = d where lambda is the scaled point of `sc`
VectorXd jordan_solve(const ConeLayout& cone, const Scaling& sc,
                      const VectorXd& d_vec) {
  VectorXd r(cone.rows);
  for (int i = 0; i < cone.l; ++i) r(i) = d_vec(i) / sc.lambda(i);
  for (std::size_t ci = 0; ci < cone.soc_dims.size(); ++ci) {
    const int q = cone.soc_dims[ci];
    const int o = cone.soc_offsets[ci];
    const auto lb = sc.lambda.segment(o, q);
    const auto db = d_vec.segment(o, q);
    const double l0 = lb(0);
    const auto l1 = lb.tail(q - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * db(0) - l1.dot(db.tail(q - 1))) / det;
    r(o) = u0;
    r.segment(o + 1, q - 1) = (db.tail(q - 1) - u0 * l1) / l0;
  }
  for (std::size_t ci = 0; ci < cone.psd_dims.size(); ++ci) {
    const int d = cone.psd_dims[ci];
    const int o = cone.psd_offsets[ci];
    const auto& sig = sc.psd[ci].sigma;
    const MatrixXd D = smat(d_vec.segment(o, svec_len(d)), d);
    MatrixXd U(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) U(a, b) = 2.0 * D(a, b) / (sig(a) + sig(b));
    r.segment(o, svec_len(d)) = svec(U);
  }
  return r;
}

// largest alpha with lambda + alpha u in K (lambda interior)
double max_step(const ConeLayout& cone, const Scaling& sc, const VectorXd& u) {
  double alpha = kInf;
  for (int i = 0; i < cone.l; ++i)
    if (u(i) < 0.0) alpha = std::min(alpha, -sc.lambda(i) / u(i));
  for (std::size_t ci = 0; ci < cone.soc_dims.size(); ++ci) {
    const int q = cone.soc_dims[ci];
    const int o = cone.soc_offsets[ci];
    const auto lb = sc.lambda.segment(o, q);
    const auto ub = u.segment(o, q);
    // boundary: (l0 + a u0)^2 = ||l1 + a u1||^2
    const double a = ub(0) * ub(0) - ub.tail(q - 1).squaredNorm();
    const double b =
        2.0 * (lb(0) * ub(0) - lb.tail(q - 1).dot(ub.tail(q - 1)));
    const double c = lb(0) * lb(0) - lb.tail(q - 1).squaredNorm();
    double root = kInf;
    const double disc = b * b - 4.0 * a * c;
    if (std::abs(a) < 1e-300) {
      if (b < 0.0) root = -c / b;
    } else if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double r1 = (-b - sq) / (2.0 * a);
      const double r2 = (-b + sq) / (2.0 * a);
      for (double rr : {std::min(r1, r2), std::max(r1, r2)})
        if (rr > 0.0) {
          root = rr;
          break;
        }
    }
    // also keep the head positive
    if (ub(0) < 0.0) alpha = std::min(alpha, -lb(0) / ub(0));
    alpha = std::min(alpha, root);
  }
  for (std::size_t ci = 0; ci < cone.psd_dims.size(); ++ci) {
    const int d = cone.psd_dims[ci];
    const int o = cone.psd_offsets[ci];
    const auto& sig = sc.psd[ci].sigma;
    const MatrixXd U = smat(u.segment(o, svec_len(d)), d);
    const VectorXd isq = sig.cwiseSqrt().cwiseInverse();
    const MatrixXd M = isq.asDiagonal() * U * isq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

class HsdSolver {
 public:
  HsdSolver(const ConicProblem::StandardForm& f, const SolveOptions& opts)
      : f_(f), cone_(ConeLayout::from(f)), opts_(opts) {
    nx_ = f.nx;
    p_ = static_cast<int>(f.A.rows());
    m_ = cone_.rows;
    if (m_ != f.G.rows())
      throw SolverError("internal: cone layout / G row mismatch");
    N_ = nx_ + p_ + m_;
    cnorm_ = std::max(1.0, f.c.norm());
    bnorm_ = std::max(1.0, f.b.norm());
    hnorm_ = std::max(1.0, f.h.norm());
  }

  ConicSolution run() {
    ConicSolution sol;
    if (m_ == 0) {
      sol.status = SolveStatus::numerical_failure;
      return sol;
    }
    x_ = VectorXd::Zero(nx_);
    y_ = VectorXd::Zero(p_);
    s_ = cone_.unit();
    z_ = cone_.unit();
    tau_ = 1.0;
    kappa_ = 1.0;

    Scaling sc;
    double mu0 = -1.0;
    for (int iter = 0; iter < opts_.max_iters; ++iter) {
      // residuals of the homogeneous embedding
      const VectorXd rx = f_.A.transpose() * y_ + f_.G.transpose() * z_ +
                          f_.c * tau_;
      const VectorXd ry = f_.A * x_ - f_.b * tau_;
      const VectorXd rz = f_.G * x_ + s_ - f_.h * tau_;
      const double rtau =
          f_.c.dot(x_) + f_.b.dot(y_) + f_.h.dot(z_) + kappa_;
      const double mu = (s_.dot(z_) + tau_ * kappa_) / (cone_.degree + 1.0);
      if (mu0 < 0.0) mu0 = mu;

      const double pcost = f_.c.dot(x_) / tau_;
      const double gap = s_.dot(z_) / (tau_ * tau_);
      const double relgap = gap / std::max(1.0, std::abs(pcost));
      const double pres =
          std::max(ry.norm() / bnorm_, rz.norm() / hnorm_) / tau_;
      const double dres = rx.norm() / (cnorm_ * tau_);
      last_pres_ = pres;
      last_dres_ = dres;
      last_relgap_ = relgap;
      last_gap_ = gap;
      // near its numerical floor the iteration can bounce while mu keeps
      // shrinking; remember the best iterate for breakdown classification
      const double merit = std::max({pres, dres, relgap});
      if (std::isfinite(merit) && merit < best_merit_) {
        best_merit_ = merit;
        best_x_ = x_;
        best_tau_ = tau_;
        best_pres_ = pres;
        best_dres_ = dres;
        best_gap_ = gap;
      }
      if (opts_.verbose)
        std::cerr << "iter " << iter << " pres " << pres << " dres " << dres
                  << " gap " << relgap << " tau " << tau_ << " kappa "
                  << kappa_ << "\n";

      if (pres <= opts_.tol && dres <= opts_.tol && relgap <= opts_.tol) {
        sol.status = SolveStatus::optimal;
        finalize(sol, iter, pres, dres, gap);
        return sol;
      }
      // infeasibility certificates
      const double by_hz = f_.b.dot(y_) + f_.h.dot(z_);
      if (by_hz < 0.0) {
        const double cert =
            (f_.A.transpose() * y_ + f_.G.transpose() * z_).norm() /
            (-by_hz);
        if (cert <= opts_.tol * 1e-2 ||
            (cert <= opts_.tol && tau_ < 1e-8 * std::max(1.0, kappa_))) {
          sol.status = SolveStatus::infeasible;
          sol.iterations = iter;
          return sol;
        }
      }
      const double cx = f_.c.dot(x_);
      if (cx < 0.0) {
        const double cert =
            std::max((f_.A * x_).norm(), (f_.G * x_ + s_).norm()) / (-cx);
        if (cert <= opts_.tol * 1e-2 ||
            (cert <= opts_.tol && tau_ < 1e-8 * std::max(1.0, kappa_))) {
          sol.status = SolveStatus::unbounded;
          sol.iterations = iter;
          return sol;
        }
      }
      if (mu < 1e-15 * mu0 || tau_ < 1e-12) {
        classify_failure(sol, iter);
        return sol;
      }

      if (!compute_scaling(cone_, s_, z_, sc)) {
        classify_failure(sol, iter);
        return sol;
      }
      if (!factorize(sc)) {
        classify_failure(sol, iter);
        return sol;
      }

      // constant-rhs solve used by the tau recovery
      VectorXd u1 = solve_kkt(-f_.c, f_.b, f_.h);
      const auto x1 = u1.head(nx_);
      const auto y1 = u1.segment(nx_, p_);
      const auto z1 = u1.tail(m_);
      const double denom = f_.c.dot(x1) + f_.b.dot(y1) + f_.h.dot(z1) -
                           kappa_ / tau_;
      if (!std::isfinite(denom) || std::abs(denom) < 1e-300) {
        classify_failure(sol, iter);
        return sol;
      }

      auto direction = [&](double sigma, const VectorXd& ds_corr,
                           double dkappa_corr, VectorXd& dx, VectorXd& dy,
                           VectorXd& dz, VectorXd& ds, double& dtau,
                           double& dkappa) {
        // ds_rhs: lambda o (W^{-T} ds + W dz) = d_s
        VectorXd d_s = -jordan_mul(cone_, sc.lambda, sc.lambda) - ds_corr;
        d_s += sigma * mu * cone_.unit();
        const double d_k = -tau_ * kappa_ - dkappa_corr + sigma * mu;
        const VectorXd lam_inv_ds = jordan_solve(cone_, sc, d_s);
        const VectorXd wt_lam_ds = apply_scaling(cone_, sc, lam_inv_ds, Op::WT);
        const double r_scale = 1.0 - sigma;
        VectorXd u2 = solve_kkt(-r_scale * rx, -r_scale * ry,
                                -r_scale * rz - wt_lam_ds);
        const auto x2 = u2.head(nx_);
        const auto y2 = u2.segment(nx_, p_);
        const auto z2 = u2.tail(m_);
        dtau = (-r_scale * rtau - d_k / tau_ - f_.c.dot(x2) - f_.b.dot(y2) -
                f_.h.dot(z2)) /
               denom;
        dx = x2 + dtau * x1;
        dy = y2 + dtau * y1;
        dz = z2 + dtau * z1;
        ds = wt_lam_ds - apply_scaling(
                             cone_, sc,
                             apply_scaling(cone_, sc, dz, Op::W), Op::WT);
        dkappa = (d_k - kappa_ * dtau) / tau_;
      };

      // predictor
      VectorXd dx, dy, dz, ds;
      double dtau, dkappa;
      direction(0.0, VectorXd::Zero(m_), 0.0, dx, dy, dz, ds, dtau, dkappa);
      VectorXd ds_sc = apply_scaling(cone_, sc, ds, Op::WinvT);
      VectorXd dz_sc = apply_scaling(cone_, sc, dz, Op::W);
      double alpha = step_length(sc, ds_sc, dz_sc, dtau, dkappa);
      const double mu_aff =
          ((s_ + alpha * ds).dot(z_ + alpha * dz) +
           (tau_ + alpha * dtau) * (kappa_ + alpha * dkappa)) /
          (cone_.degree + 1.0);
      double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

      // corrector
      const VectorXd corr = jordan_mul(cone_, ds_sc, dz_sc);
      const double kcorr = dtau * dkappa;
      direction(sigma, corr, kcorr, dx, dy, dz, ds, dtau, dkappa);
      ds_sc = apply_scaling(cone_, sc, ds, Op::WinvT);
      dz_sc = apply_scaling(cone_, sc, dz, Op::W);
      alpha = step_length(sc, ds_sc, dz_sc, dtau, dkappa);

      x_ += alpha * dx;
      y_ += alpha * dy;
      z_ += alpha * dz;
      s_ += alpha * ds;
      tau_ += alpha * dtau;
      kappa_ += alpha * dkappa;
    }
    // out of iterations: the iterate may still be good to a looser
    // tolerance, or carry a certificate
    classify_failure(sol, opts_.max_iters);
    if (sol.status == SolveStatus::numerical_failure) {
      sol.status = SolveStatus::iteration_limit;
      finalize(sol, opts_.max_iters, last_pres_, last_dres_, last_gap_);
    }
    return sol;
  }

 private:
  // Called when the iteration cannot continue (scaling or factorization
  // breakdown, direction collapse).  The iterate usually still carries a
  // verdict: residuals within a looser tolerance mean the problem is solved
  // to near machine limits, and a vanishing tau with bounded kappa signals
  // an infeasibility/unboundedness certificate.
  void classify_failure(ConicSolution& sol, int iter) {
    sol.iterations = iter;
    const double loose = std::max(opts_.tol * 1e2, 1e-6);
    if (best_merit_ <= loose) {
      x_ = best_x_;
      tau_ = best_tau_;
      sol.status = SolveStatus::optimal;
      finalize(sol, iter, best_pres_, best_dres_, best_gap_);
      return;
    }
    const double cert_tol = 1e-4;
    if (tau_ <= 1e-6 * std::max(1.0, kappa_)) {
      const double by_hz = f_.b.dot(y_) + f_.h.dot(z_);
      if (by_hz < 0.0 &&
          (f_.A.transpose() * y_ + f_.G.transpose() * z_).norm() <=
              cert_tol * (-by_hz)) {
        sol.status = SolveStatus::infeasible;
        return;
      }
      const double cx = f_.c.dot(x_);
      if (cx < 0.0 &&
          std::max((f_.A * x_).norm(), (f_.G * x_ + s_).norm()) <=
              cert_tol * (-cx)) {
        sol.status = SolveStatus::unbounded;
        return;
      }
    }
    sol.status = SolveStatus::numerical_failure;
  }

  double step_length(const Scaling& sc, const VectorXd& ds_sc,
                     const VectorXd& dz_sc, double dtau, double dkappa) {
    double amax = std::min(max_step(cone_, sc, ds_sc),
                           max_step(cone_, sc, dz_sc));
    if (dtau < 0.0) amax = std::min(amax, -tau_ / dtau);
    if (dkappa < 0.0) amax = std::min(amax, -kappa_ / dkappa);
    return std::min(1.0, kStepFraction * amax);
  }

  bool factorize_with_reg(const Scaling& sc) {
    // lower triangle of [ dI  .   .  ; A  -dI  .  ; G  .  -W'W - dI ]
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(f_.A.nonZeros() + f_.G.nonZeros()) +
              N_ + 4096);
    for (int i = 0; i < nx_; ++i) t.emplace_back(i, i, reg_);
    for (int i = 0; i < p_; ++i)
      t.emplace_back(nx_ + i, nx_ + i, -reg_);
    for (int k = 0; k < f_.A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(f_.A, k); it; ++it)
        t.emplace_back(nx_ + static_cast<int>(it.row()),
                       static_cast<int>(it.col()), it.value());
    const int zoff = nx_ + p_;
    for (int k = 0; k < f_.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(f_.G, k); it; ++it)
        t.emplace_back(zoff + static_cast<int>(it.row()),
                       static_cast<int>(it.col()), it.value());
    // -W'W blocks
    for (int i = 0; i < cone_.l; ++i)
      t.emplace_back(zoff + i, zoff + i,
                     -sc.w_lp(i) * sc.w_lp(i) - reg_);
    for (std::size_t ci = 0; ci < cone_.soc_dims.size(); ++ci) {
      const int q = cone_.soc_dims[ci];
      const int o = zoff + cone_.soc_offsets[ci];
      const auto& scs = sc.soc[ci];
      // W'W = eta^2 (2 wbar wbar' - J)
      const double e2 = scs.eta * scs.eta;
      for (int r = 0; r < q; ++r)
        for (int c = 0; c <= r; ++c) {
          double v = 2.0 * e2 * scs.wbar(r) * scs.wbar(c);
          if (r == c) v -= e2 * (r == 0 ? 1.0 : -1.0);
          t.emplace_back(o + r, o + c, -v - (r == c ? reg_ : 0.0));
        }
    }
    for (std::size_t ci = 0; ci < cone_.psd_dims.size(); ++ci) {
      const int d = cone_.psd_dims[ci];
      const int o = zoff + cone_.psd_offsets[ci];
      const MatrixXd H = sc.psd[ci].R * sc.psd[ci].R.transpose();
      // columns of symkron(H): svec(H B_t H)
      const int sl = svec_len(d);
      const double is2 = 1.0 / std::sqrt(2.0);
      for (int cc = 0; cc < d; ++cc)
        for (int rr = 0; rr <= cc; ++rr) {
          const int col = detail::svec_index(rr, cc, d);
          MatrixXd M;
          if (rr == cc)
            M = H.col(rr) * H.col(cc).transpose();
          else
            M = is2 * (H.col(rr) * H.col(cc).transpose() +
                       H.col(cc) * H.col(rr).transpose());
          const VectorXd colv = svec(0.5 * (M + M.transpose()));
          for (int r2 = col; r2 < sl; ++r2)
            t.emplace_back(o + r2, o + col,
                           -colv(r2) - (r2 == col ? reg_ : 0.0));
        }
    }
    Eigen::SparseMatrix<double> K(N_, N_);
    K.setFromTriplets(t.begin(), t.end());
    if (!pattern_done_) {
      ldlt_.analyzePattern(K);
      pattern_done_ = true;
    }
    ldlt_.factorize(K);
    if (ldlt_.info() != Eigen::Success) return false;
    K_ = std::move(K);
    return true;
  }

  // Near convergence the KKT system becomes extremely ill-conditioned and
  // the pivot-free LDLT can break down; retry with a larger shift.  The
  // iterative refinement in solve_kkt corrects against the unshifted matrix,
  // so accuracy is preserved.
  bool factorize(const Scaling& sc) {
    sc_ = &sc;
    for (double reg : {kStaticReg, 1e-7, 1e-4}) {
      reg_ = reg;
      if (factorize_with_reg(sc)) return true;
    }
    return false;
  }

  // A factorization can succeed yet be numerically worthless (near-zero
  // pivots); bump the shift and refactorize so solve_kkt can retry.
  bool escalate_reg() {
    for (double reg : {1e-7, 1e-4}) {
      if (reg <= reg_) continue;
      reg_ = reg;
      if (factorize_with_reg(*sc_)) return true;
    }
    return false;
  }

  VectorXd kkt_mul(const VectorXd& u) const {
    // multiply by the full (unregularized) KKT matrix
    VectorXd r = K_.selfadjointView<Eigen::Lower>() * u;
    r.head(nx_) -= reg_ * u.head(nx_);
    r.tail(p_ + m_) += reg_ * u.tail(p_ + m_);
    return r;
  }

  VectorXd solve_kkt(const VectorXd& r1, const VectorXd& r2,
                     const VectorXd& r3) {
    VectorXd rhs(N_);
    rhs << r1, r2, r3;
    const double scale = std::max(1.0, rhs.norm());
    // a plausible-looking factorization can still return a garbage solve
    // when pivots are near zero; verify the achieved residual and retry
    // with a stronger shift before accepting an inaccurate direction
    for (;;) {
      VectorXd u = ldlt_.solve(rhs);
      VectorXd best = u;
      double best_res = (rhs - kkt_mul(u)).norm();
      for (int ref = 0; ref < 8 && best_res > 1e-10 * scale; ++ref) {
        u += ldlt_.solve(rhs - kkt_mul(u));
        const double res = (rhs - kkt_mul(u)).norm();
        if (!(res < best_res)) break;  // refinement stalled or diverged
        best = u;
        best_res = res;
      }
      if (best_res <= 1e-6 * scale || !escalate_reg()) return best;
    }
  }

  void finalize(ConicSolution& sol, int iters, double pres, double dres,
                double gap) {
    sol.x = x_ / tau_;
    sol.objective = f_.c.dot(sol.x);
    sol.iterations = iters;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = gap;
  }

  const ConicProblem::StandardForm& f_;
  ConeLayout cone_;
  SolveOptions opts_;
  int nx_ = 0, p_ = 0, m_ = 0, N_ = 0;
  double cnorm_ = 1.0, bnorm_ = 1.0, hnorm_ = 1.0;
  VectorXd x_, y_, s_, z_;
  double tau_ = 1.0, kappa_ = 1.0;
  double reg_ = kStaticReg;
  const Scaling* sc_ = nullptr;
  double last_pres_ = kInf, last_dres_ = kInf, last_relgap_ = kInf,
         last_gap_ = kInf;
  double best_merit_ = kInf, best_tau_ = 1.0, best_pres_ = kInf,
         best_dres_ = kInf, best_gap_ = kInf;
  VectorXd best_x_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  Eigen::SparseMatrix<double> K_;
  bool pattern_done_ = false;
};

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolveOptions& opts) {
  if (!opts.dump_path.empty()) problem.dump(opts.dump_path);
  const auto& f = problem.standard_form();
  HsdSolver solver(f, opts);
  return solver.run();
}

}  // namespace cmbf::conic
