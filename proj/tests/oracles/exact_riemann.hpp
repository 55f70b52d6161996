#pragma once

// Exact Riemann solver for the 1D Euler equations (Toro, "Riemann Solvers and
// Numerical Methods for Fluid Dynamics", ch. 4): Newton iteration on the star
// pressure, then self-similar sampling. Test oracle only; shares nothing with
// the finite-volume implementation it validates.

#include <cmath>
#include <stdexcept>

namespace oracle {

struct PrimState {
    double rho, u, p;
};

class ExactRiemann {
  public:
    ExactRiemann(PrimState left, PrimState right, double gamma = 1.4)
        : L_(left), R_(right), g_(gamma) {
        cL_ = std::sqrt(g_ * L_.p / L_.rho);
        cR_ = std::sqrt(g_ * R_.p / R_.rho);
        solve_star();
    }

    double p_star() const { return ps_; }
    double u_star() const { return us_; }

    /// Sample the solution at similarity coordinate xi = x / t.
    PrimState sample(double xi) const {
        if (xi < us_) return sample_left(xi);
        return sample_right(xi);
    }

  private:
    PrimState L_, R_;
    double g_, cL_, cR_, ps_ = 0, us_ = 0;

    double fK(double p, const PrimState& s, double c) const {
        if (p > s.p) {
            const double A = 2.0 / ((g_ + 1.0) * s.rho);
            const double B = (g_ - 1.0) / (g_ + 1.0) * s.p;
            return (p - s.p) * std::sqrt(A / (p + B));
        }
        return 2.0 * c / (g_ - 1.0) * (std::pow(p / s.p, (g_ - 1.0) / (2.0 * g_)) - 1.0);
    }
    double dfK(double p, const PrimState& s, double c) const {
        if (p > s.p) {
            const double A = 2.0 / ((g_ + 1.0) * s.rho);
            const double B = (g_ - 1.0) / (g_ + 1.0) * s.p;
            return std::sqrt(A / (B + p)) * (1.0 - (p - s.p) / (2.0 * (B + p)));
        }
        return 1.0 / (s.rho * c) * std::pow(p / s.p, -(g_ + 1.0) / (2.0 * g_));
    }

    void solve_star() {
        double p = 0.5 * (L_.p + R_.p) -
                   0.125 * (R_.u - L_.u) * (L_.rho + R_.rho) * (cL_ + cR_) / 2.0;
        p = std::max(p, 1e-10);
        for (int it = 0; it < 100; ++it) {
            const double f = fK(p, L_, cL_) + fK(p, R_, cR_) + (R_.u - L_.u);
            const double df = dfK(p, L_, cL_) + dfK(p, R_, cR_);
            double pn = p - f / df;
            if (pn < 0.0) pn = 1e-12;
            if (std::abs(pn - p) < 1e-14 * pn) {
                p = pn;
                break;
            }
            p = pn;
        }
        ps_ = p;
        us_ = 0.5 * (L_.u + R_.u) + 0.5 * (fK(ps_, R_, cR_) - fK(ps_, L_, cL_));
    }

    PrimState sample_left(double xi) const {
        if (ps_ > L_.p) { // left shock
            const double SL =
                L_.u - cL_ * std::sqrt((g_ + 1.0) / (2.0 * g_) * ps_ / L_.p + (g_ - 1.0) / (2.0 * g_));
            if (xi < SL) return L_;
            const double r =
                L_.rho * ((ps_ / L_.p + (g_ - 1.0) / (g_ + 1.0)) /
                          ((g_ - 1.0) / (g_ + 1.0) * ps_ / L_.p + 1.0));
            return {r, us_, ps_};
        }
        const double SH = L_.u - cL_;
        const double csL = cL_ * std::pow(ps_ / L_.p, (g_ - 1.0) / (2.0 * g_));
        const double ST = us_ - csL;
        if (xi < SH) return L_;
        if (xi > ST) return {L_.rho * std::pow(ps_ / L_.p, 1.0 / g_), us_, ps_};
        const double u = 2.0 / (g_ + 1.0) * (cL_ + (g_ - 1.0) / 2.0 * L_.u + xi);
        const double c = 2.0 / (g_ + 1.0) * (cL_ + (g_ - 1.0) / 2.0 * (L_.u - xi));
        return {L_.rho * std::pow(c / cL_, 2.0 / (g_ - 1.0)), u,
                L_.p * std::pow(c / cL_, 2.0 * g_ / (g_ - 1.0))};
    }

    PrimState sample_right(double xi) const {
        if (ps_ > R_.p) { // right shock
            const double SR =
                R_.u + cR_ * std::sqrt((g_ + 1.0) / (2.0 * g_) * ps_ / R_.p + (g_ - 1.0) / (2.0 * g_));
            if (xi > SR) return R_;
            const double r =
                R_.rho * ((ps_ / R_.p + (g_ - 1.0) / (g_ + 1.0)) /
                          ((g_ - 1.0) / (g_ + 1.0) * ps_ / R_.p + 1.0));
            return {r, us_, ps_};
        }
        const double SH = R_.u + cR_;
        const double csR = cR_ * std::pow(ps_ / R_.p, (g_ - 1.0) / (2.0 * g_));
        const double ST = us_ + csR;
        if (xi > SH) return R_;
        if (xi < ST) return {R_.rho * std::pow(ps_ / R_.p, 1.0 / g_), us_, ps_};
        const double u = 2.0 / (g_ + 1.0) * (-cR_ + (g_ - 1.0) / 2.0 * R_.u + xi);
        const double c = 2.0 / (g_ + 1.0) * (cR_ - (g_ - 1.0) / 2.0 * (R_.u - xi));
        return {R_.rho * std::pow(c / cR_, 2.0 / (g_ - 1.0)), u,
                R_.p * std::pow(c / cR_, 2.0 * g_ / (g_ - 1.0))};
    }
};

}  // namespace oracle
