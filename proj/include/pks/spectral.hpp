#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "pks/errors.hpp"
#include "pks/threshold.hpp"

namespace pks {

using cplx = std::complex<double>;

// Periodic box [0, lx) x [0, ly) sampled on nx x ny points.
struct GridSpec {
    int nx = 128;
    int ny = 128;
    double lx = 32 * 3.14159265358979323846;
    double ly = 32 * 3.14159265358979323846;
    double dealias_fraction = 2.0 / 3.0;

    int nkx() const { return nx / 2 + 1; }
    std::size_t spectral_size() const { return static_cast<std::size_t>(nkx()) * ny; }
    std::size_t physical_size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * ny + j; }
    // Signed vertical index of storage row j.
    int signed_j(int j) const { return j <= ny / 2 ? j : j - ny; }
    int storage_j(int js) const { return js >= 0 ? js : js + ny; }
    double kx(int i) const;
    // Vertical wavenumber of comoving row j at shear phase `phase` (in units of one
    // lattice shift per horizontal index).
    double ky(int i, int j, double phase = 0.0) const;
    int keep_i() const;  // largest retained |i| under the dealias mask
    int keep_j() const;
    bool retained(int i, int j) const;
    double dx_min() const;
    bool operator==(const GridSpec& o) const {
        return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly && dealias_fraction == o.dealias_fraction;
    }
};

void validate(const GridSpec& g);
void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

// Fourier coefficients of a real field, half-spectrum in the horizontal
// direction: column i in [0, nx/2], row j in [0, ny) (FFT order), stored
// column-major in i (index i*ny + j). The (0,0) coefficient is the mean.
struct SpectralField {
    GridSpec grid;
    std::vector<cplx> coeffs;

    SpectralField() = default;
    explicit SpectralField(const GridSpec& g) : grid(g), coeffs(g.spectral_size(), cplx(0, 0)) {}

    cplx& at(int i, int j) { return coeffs[grid.index(i, j)]; }
    const cplx& at(int i, int j) const { return coeffs[grid.index(i, j)]; }
    // Coefficient of (k, xi) for any sign of k, using conjugate symmetry.
    cplx mode(int i_signed, int j_signed) const;
    void set_mode(int i_signed, int j_signed, cplx v);  // also sets the conjugate partner
    double mean() const { return coeffs[0].real(); }
};

// 1 for the self-conjugate columns (0 and nx/2), 2 otherwise.
inline double column_multiplicity(const GridSpec& g, int i) { return (i == 0 || 2 * i == g.nx) ? 1.0 : 2.0; }

// FFTW-backed transform pair with private work buffers; one instance per thread.
class Transform {
public:
    explicit Transform(const GridSpec& g);
    ~Transform();
    Transform(const Transform&) = delete;
    Transform& operator=(const Transform&) = delete;

    const GridSpec& grid() const { return grid_; }
    void forward(const std::vector<double>& phys, SpectralField& out);
    void inverse(const SpectralField& f, std::vector<double>& phys);
    SpectralField forward(const std::vector<double>& phys);
    std::vector<double> inverse(const SpectralField& f);

private:
    struct Plans;
    GridSpec grid_;
    std::unique_ptr<Plans> plans_;
};

SpectralField forward_transform(const GridSpec& g, const std::vector<double>& phys);
std::vector<double> inverse_transform(const SpectralField& f);

// Sample coordinates of grid point (ix, iy).
inline double grid_x(const GridSpec& g, int ix) { return g.lx * ix / g.nx; }
inline double grid_y(const GridSpec& g, int iy) { return g.ly * iy / g.ny; }

double l2_norm_sq(const SpectralField& f);          // from coefficients
double l2_norm_sq(const GridSpec& g, const std::vector<double>& phys);  // by quadrature
double hermitian_defect(const SpectralField& f);
void enforce_hermitian(SpectralField& f);
void apply_dealias(SpectralField& f);
// Fraction of the non-mean energy carried by modes outside two thirds of the
// retained band (elliptic radius in index space).
double tail_fraction(const SpectralField& f);

// Weights and multipliers.
double multiplier_m1(double k, double xi, double amplitude);
double multiplier_m2(double k, double xi);
double multiplier_m(double k, double xi, double amplitude, const NormParams& p);

struct SymbolCheck {
    double lhs = 0;
    double rhs = 0;
};
// Both sides multiplied by 2 pi / Xi: k d/dxi (M1 + M2) against the lower bound.
SymbolCheck dissipation_symbol_check(double k, double xi, double amplitude, const NormParams& p);

// <k>^(2m) <1/k>^(2 eps) for k != 0.
double y_weight_sq(double k, double m, double eps);

struct YNorm {
    double value = 0;      // over k != 0 columns
    double k0_l2 = 0;      // L2 norm of the horizontally averaged part
    bool singular = false; // eps > 0 with nonzero k = 0 content: the full norm is infinite
};
YNorm y_norm_report(const SpectralField& f, double m, double eps, double extra_dx_power = 0.0);
double y_norm(const SpectralField& f, double m, double eps);

enum class AccumulatorWeight { plain, dx13 };

class NormAccumulator {
public:
    NormAccumulator() = default;
    NormAccumulator(const NormParams& p, double amplitude, AccumulatorWeight w = AccumulatorWeight::plain);

    // Left-endpoint update with the field at time t; phase gives the sheared
    // vertical wavenumbers.
    void accumulate(const SpectralField& f, double t, double dt, double phase = 0.0);
    // Sup piece only (e.g. the final state).
    void observe(const SpectralField& f, double t, double phase = 0.0);

    struct Pieces {
        double sup = 0;   // sup_t of the weighted L2 norm squared
        double dy = 0;    // integrals of the weighted norms squared
        double dx13 = 0;
        double dx = 0;
        double ghost = 0;
    };
    Pieces raw() const { return raw_; }
    // Coefficient-weighted pieces as they enter the X norm squared.
    Pieces weighted() const;
    double x_norm_sq() const;
    double x_norm() const;
    double t_last() const { return t_last_; }

    // Instantaneous weighted squares of a field (no time integration).
    Pieces instantaneous(const SpectralField& f, double t, double phase) const;

private:
    NormParams p_;
    double amplitude_ = 1;
    AccumulatorWeight weight_ = AccumulatorWeight::plain;
    Pieces raw_;
    double t_last_ = 0;
    bool started_ = false;
};

// Checkpoint files: "PKSC", u32 version, u32 nx, u32 ny, f64 lx, f64 ly, then
// for i = 0..nx/2 and j = 0..ny-1 (FFT order) the pair (re, im), all little-endian.
void write_checkpoint(const std::string& path, const SpectralField& f);
SpectralField read_checkpoint(const std::string& path);

}  // namespace pks
