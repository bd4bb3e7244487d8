#pragma once

#include <vector>

namespace hemisel {

/// Surface area of the unit sphere in R^d (|S^{d-1}|); |S^0| = 2 by convention.
double sphere_area(int d);

/// Dimension of the space of degree-k spherical harmonics on S^{d-1}.
/// Equals (2k+d-2)(k+d-3)! / (k!(d-2)!) for d >= 2; this is the factor L(k,d)
/// in the zonal kernel q_{k,d}.
double harmonic_dim(int k, int d);

/// Gegenbauer polynomials C_k^mu with mu = (d-2)/2, evaluated by the
/// three-term recursion (k+2)C_{k+2} = 2(mu+k+1) t C_{k+1} - (2mu+k) C_k.
///
/// For d = 3 (mu = 1/2) these are the Legendre polynomials. For d = 2 the
/// mu -> 0 limit family is used: C_0^0 = 1 and C_k^0(t) = (2/k) T_k(t) for
/// k >= 1 (Chebyshev), which the recursion reproduces for k >= 1; the k = 2
/// value is seeded directly since the k=0 step of the recursion degenerates
/// at mu = 0.
class GegenbauerBasis {
public:
    GegenbauerBasis(int d, int kmax);

    int dimension() const { return d_; }
    double mu() const { return mu_; }
    int kmax() const { return kmax_; }

    /// C_k^mu(t) for |t| <= 1, k <= kmax.
    double eval(int k, double t) const;

    /// All degrees 0..kmax at once (one pass of the recursion).
    std::vector<double> eval_all(double t) const;

    /// Zonal kernel q_{k,d}(t) = L(k,d) C_k^mu(t) / (|S^{d-1}| C_k^mu(1)),
    /// defined for odd k only (the inversion uses odd degrees).
    double q(int k, double t) const;

private:
    int d_;
    double mu_;
    int kmax_;
};

/// Hemispherical-transform multiplier on odd harmonics:
///   lambda_{1,d}    = |S^{d-2}| / (d-1)
///   lambda_{2p+1,d} = (-1)^p |S^{d-2}| 1*3***(2p-1) / ((d-1)(d+1)***(d+2p-1)).
double lambda_coeff(int d, int p);

/// Multipliers lambda_{2p+1,d} for p = 0..pmax; signs alternate and
/// magnitudes decrease strictly.
struct SeriesCoefficients {
    int d;
    std::vector<double> values;
};

SeriesCoefficients lambda_series(int d, int pmax);

} // namespace hemisel
