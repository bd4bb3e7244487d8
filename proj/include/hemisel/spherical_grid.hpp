#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

namespace hemisel {

/// Quadrature node on S^{d-1}; for d = 2 the third coordinate is zero.
using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// Quadrature grid on the unit sphere S^{d-1}, d in {2, 3}.
///
/// The node set is closed under the antipodal map theta -> -theta and the
/// index of each node's antipode is precomputed, so odd/even decompositions
/// are exact. Weights are in units of the surface measure sigma and sum to
/// |S^{d-1}| (full-sphere grids) or |S^{d-1}|/2 (hemisphere grids, which have
/// no antipode map).
struct SphericalGrid {
    int d = 2;
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    std::vector<std::size_t> antipode; // empty for hemisphere grids
    bool hemisphere = false;

    std::size_t size() const { return nodes.size(); }

    /// Gauss-Legendre polar levels (d = 3 grids): distinct values of node[0]
    /// paired with their one-dimensional weights; used by spectral transforms.
    std::vector<double> polar_t;  // empty for d = 2
    std::vector<double> polar_w;
    std::size_t n_azimuth = 0;
};

using GridPtr = std::shared_ptr<const SphericalGrid>;

/// Full-sphere grid. d = 2: uniform midpoint angular grid with n nodes
/// (n rounded up to even) and weights 2*pi/n. d = 3: Gauss-Legendre x uniform
/// product grid with `resolution` polar levels and 2*resolution azimuths,
/// oriented with the polar axis along e1 so the hemisphere H+ = {s_1 >= 0}
/// splits the polar nodes cleanly.
GridPtr build_grid(int d, int resolution);

/// Quadrature grid covering H+ = {s : s_1 >= 0} only; Gauss-Legendre in the
/// angle (d = 2) or in s_1 over [0, 1] (d = 3). Weights sum to |S^{d-1}|/2.
GridPtr build_hemisphere_grid(int d, int resolution);

/// Quadrature of a per-node integrand over the whole grid.
double integrate(const SphericalGrid& grid, const std::vector<double>& values);

/// Nodes and weights of the n-point Gauss-Legendre rule on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x,
                    std::vector<double>& w);

/// Scalar function on S^{d-1}, represented by its values at grid nodes.
struct SphericalFunction {
    GridPtr grid;
    std::vector<double> values;
    bool is_density = false;         // asserts values >= 0, integral ~ 1
    bool antipodal_fallback = false; // set when odd_part had to interpolate

    double integral() const { return integrate(*grid, values); }
};

/// f must be nonnegative and integrate to 1 within tol; throws data_error if not.
void validate_density(const SphericalFunction& f, double tol = 1e-6);

/// Plot-ready CSV: node coordinates, weight, value.
void write_spherical_csv(std::ostream& os, const SphericalFunction& f);

} // namespace hemisel
