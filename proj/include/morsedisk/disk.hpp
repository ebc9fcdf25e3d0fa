#pragma once

#include "morsedisk/moduli.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace morsedisk {

/// phi(t) = s(t) / (s(t) + s(1 - t)) with s(t) = exp(-1/t) for t > 0, else 0.
/// Smooth, 0 on (-inf, 0], 1 on [1, inf), and phi(t) + phi(1 - t) = 1.
double smooth_step(double t);
double smooth_step_derivative(double t);

/// rho_l(s) = phi(l) phi(s) phi(l - s).
double cutoff_rho(double l, double s);
/// rho(s) = phi(-s) on an external strip.
double cutoff_rho_external(double s);
/// d rho_l(s) / dl.
double cutoff_rho_dl(double l, double s);

/// int_0^l rho_l(s) ds. Equals l - 1 exactly for l >= 2.
double strip_integral(double l);

/// The l with eps * strip_integral(l) = R, by bisection to 1e-12.
/// Throws Error("disk") unless R > 0 and eps > 0.
double strip_length_from_edge(double R, double eps);

/// eps * int_a^b rho_l by composite Gauss-Legendre; l < 0 means external.
double cutoff_integral(double l, double a, double b, double eps);

inline constexpr double kEpsilonMax = 0.25;

struct DiskGrid
{
    int s_per_unit = 200;  // strip nodes per unit of s
    int t_nodes = 17;      // strip nodes across [0, 1]
    int radial_nodes = 17;
    int angular_per_arc = 24;
};

/// One strip, [0, 1] x [s0, s1] in (t, s). Values are stored s-major:
/// column j * nt + i holds node (t_i, s_j). q is a continuous lift.
struct Strip
{
    enum class Kind { Internal, External, Neck };

    int edge = -1;
    Kind kind = Kind::Internal;
    double s0 = 0.0, s1 = 0.0;
    double length = 0.0;        // l_e; S_max for external strips; 0 for a neck
    double morse_length = 0.0;  // R_e; for external strips the backward time reached
    double length_gap = 0.0;    // |l(s1) - R_e| (internal)
    double end_gap = 0.0;       // distance of the far end from p_e (external)
    int start_half_edge = -1;   // half-edge whose vertex sits at s0, -1 if free
    int end_half_edge = -1;     // half-edge whose vertex sits at s1
    ScalarFunction function;
    std::vector<double> t, s, l, rho;
    Matrix q, p;

    int nt() const { return static_cast<int>(t.size()); }
    int ns() const { return static_cast<int>(s.size()); }
    int column(int i, int j) const { return j * nt() + i; }
};

/// Polar model of a vertex region: the unit disk, nodes (r_k, theta_m) stored
/// at column k * ntheta + m. The circle is cut into 2|v| equal arcs; arc 2i
/// is glued to the strip end of half-edge cyclic_order[i], arc 2i + 1 lies
/// on the outer boundary.
struct VertexRegion
{
    int vertex = -1;
    Vector position;
    std::vector<int> half_edges;
    std::vector<bool> arc_reversed;  // strip t runs against theta on this arc
    int nr = 0, ntheta = 0, per_arc = 0;
    Matrix q, p;

    int column(int k, int m) const { return k * ntheta + m; }
    double radius(int k) const { return static_cast<double>(k) / (nr - 1); }
    double angle(int m) const;
    /// Strip parameter t of theta on the arc of half-edge slot i.
    double arc_parameter(int slot, double theta) const;
};

struct DiskMap
{
    int n = 1;
    double epsilon = 0.1;
    Vector vertex_moduli;
    std::vector<Strip> strips;  // by edge id
    std::vector<VertexRegion> vertices;
};

/// u(t, s) = gamma_e(l(s)), l(s) = eps int rho, p = 0, vertex regions
/// constant. Zero-length internal edges become necks: l = 0, rho = 0 and u
/// constant over a unit-width strip. External strips reach S_max = tau / eps
/// + 1/2 (at least 2), tau the backward time at which the trajectory is
/// within 1e-8 of p_e, or its closest approach within 3 T_back.
/// Throws Error("disk") for eps outside (0, kEpsilonMax] or a vertex-moduli
/// vector whose size differs from sum of |v| - 3.
DiskMap build_solution(const TreeProblem& problem, const GradientTree& g, double eps,
                       const Vector& vertex_moduli, const DiskGrid& grid = {});

/// Both equation components at interior nodes, 2n rows per node:
/// d_s q + d_t p - eps rho grad f(q) and d_t q - d_s p, centered differences.
struct StripResidual
{
    Matrix values;
    double max_norm = 0.0;
};

StripResidual strip_residual(const DiskMap& u, int strip);

/// Max norm of d_r u + (1/r) J d_theta u at interior nodes of a vertex region.
double vertex_residual(const DiskMap& u, int vertex);

/// beta(s) = 1/2 int |p|^2 dt, its s-derivatives by differences, and
/// flux(s) = int <p, d_t q> dt, all by trapezoid in t.
struct BetaSeries
{
    std::vector<double> s, beta, beta_dot, beta_ddot, flux;
};

BetaSeries beta(const Strip& strip);

/// Sum over all region boundaries of the integral of <p, dq>.
struct EnergyReport
{
    std::vector<double> strip_terms, vertex_terms;
    double total = 0.0;
    double defect = 0.0;  // |total|
};

EnergyReport energy_identity_check(const DiskMap& u);

/// Adds a random smooth perturbation of (q, p) that keeps p = 0 on the outer
/// boundary and agrees on every glued contour.
void perturb_lagrangian(DiskMap& u, std::uint64_t seed, double amplitude);

/// Contour integral of <p, dq> around a vertex region against the area
/// integral of dp ^ dq, each by its own quadrature.
struct StokesCheck
{
    double contour = 0.0;
    double area = 0.0;
};

StokesCheck vertex_stokes(const VertexRegion& region);

/// "t,s,q0,..,p0,.." one line per node, s-major.
void write_strip_csv(std::ostream& os, const Strip& strip);
/// "s,beta,beta_dot,beta_ddot,flux".
void write_beta_csv(std::ostream& os, const BetaSeries& b);
/// Writes strip_<e>.csv, beta_<e>.csv, residuals.csv and manifest.json.
void export_disk(const DiskMap& u, const std::filesystem::path& dir);

} // namespace morsedisk
