#include "pks/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>

namespace pks {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

double GridSpec::kx(int i) const { return 2 * kPi * i / lx; }

double GridSpec::ky(int i, int j, double phase) const {
    return 2 * kPi / ly * (signed_j(j) - i * phase);
}

int GridSpec::keep_i() const {
    return std::min(nx / 2, static_cast<int>(std::floor(dealias_fraction * nx / 2 + 1e-9)));
}

int GridSpec::keep_j() const {
    return std::min(ny / 2, static_cast<int>(std::floor(dealias_fraction * ny / 2 + 1e-9)));
}

bool GridSpec::retained(int i, int j) const {
    int js = signed_j(j);
    return i <= keep_i() && std::abs(js) <= keep_j();
}

double GridSpec::dx_min() const { return std::min(lx / nx, ly / ny); }

void validate(const GridSpec& g) {
    if (!is_pow2(g.nx) || !is_pow2(g.ny) || g.nx < 2 || g.ny < 2)
        throw ParameterError("grid: nx and ny must be powers of two >= 2");
    if (!(g.lx >= 2 * kPi * (1 - 1e-12)) || !(g.ly >= 2 * kPi * (1 - 1e-12)) || !std::isfinite(g.lx) ||
        !std::isfinite(g.ly))
        throw ParameterError("grid: lx and ly must be finite and >= 2 pi");
    if (!(g.dealias_fraction > 0 && g.dealias_fraction <= 1))
        throw ParameterError("grid: dealias_fraction must lie in (0, 1]");
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
    if (!(a == b)) throw ShapeError(std::string(where) + ": fields live on different grids");
}

cplx SpectralField::mode(int i_signed, int j_signed) const {
    int ny = grid.ny;
    if (i_signed >= 0) return at(i_signed, ((j_signed % ny) + ny) % ny);
    return std::conj(at(-i_signed, ((-j_signed % ny) + ny) % ny));
}

void SpectralField::set_mode(int i_signed, int j_signed, cplx v) {
    int ny = grid.ny;
    auto wrap = [ny](int j) { return ((j % ny) + ny) % ny; };
    if (i_signed < 0) {
        i_signed = -i_signed;
        j_signed = -j_signed;
        v = std::conj(v);
    }
    at(i_signed, wrap(j_signed)) = v;
    if (i_signed == 0 || 2 * i_signed == grid.nx) at(i_signed, wrap(-j_signed)) = std::conj(v);
}

// ---- transforms ----

struct Transform::Plans {
    double* phys = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan r2c = nullptr;   // rows along x
    fftw_plan cfwd = nullptr;  // columns along y
    fftw_plan cbwd = nullptr;
    fftw_plan c2r = nullptr;

    ~Plans() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        for (fftw_plan p : {r2c, cfwd, cbwd, c2r})
            if (p) fftw_destroy_plan(p);
        fftw_free(phys);
        fftw_free(spec);
    }
};

Transform::Transform(const GridSpec& g) : grid_(g), plans_(std::make_unique<Plans>()) {
    validate(g);
    const int nx = g.nx, ny = g.ny, nk = g.nkx();
    std::lock_guard<std::mutex> lock(planner_mutex());
    plans_->phys = fftw_alloc_real(g.physical_size());
    plans_->spec = fftw_alloc_complex(g.spectral_size());
    int nxa[1] = {nx};
    int nya[1] = {ny};
    // Row iy of the physical array (length nx) maps to spec[i*ny + iy].
    plans_->r2c = fftw_plan_many_dft_r2c(1, nxa, ny, plans_->phys, nullptr, 1, nx, plans_->spec, nullptr, ny, 1,
                                         FFTW_ESTIMATE);
    plans_->c2r = fftw_plan_many_dft_c2r(1, nxa, ny, plans_->spec, nullptr, ny, 1, plans_->phys, nullptr, 1, nx,
                                         FFTW_ESTIMATE);
    plans_->cfwd = fftw_plan_many_dft(1, nya, nk, plans_->spec, nullptr, 1, ny, plans_->spec, nullptr, 1, ny,
                                      FFTW_FORWARD, FFTW_ESTIMATE);
    plans_->cbwd = fftw_plan_many_dft(1, nya, nk, plans_->spec, nullptr, 1, ny, plans_->spec, nullptr, 1, ny,
                                      FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plans_->r2c || !plans_->c2r || !plans_->cfwd || !plans_->cbwd)
        throw InternalError("fftw: plan creation failed");
}

Transform::~Transform() = default;

void Transform::forward(const std::vector<double>& phys, SpectralField& out) {
    if (phys.size() != grid_.physical_size())
        throw ShapeError("forward_transform: sample array has " + std::to_string(phys.size()) + " entries, grid needs " +
                         std::to_string(grid_.physical_size()));
    std::copy(phys.begin(), phys.end(), plans_->phys);
    fftw_execute(plans_->r2c);
    fftw_execute(plans_->cfwd);
    if (!(out.grid == grid_) || out.coeffs.size() != grid_.spectral_size()) out = SpectralField(grid_);
    const double scale = 1.0 / (static_cast<double>(grid_.nx) * grid_.ny);
    const std::size_t n = grid_.spectral_size();
    for (std::size_t q = 0; q < n; ++q) out.coeffs[q] = cplx(plans_->spec[q][0] * scale, plans_->spec[q][1] * scale);
}

void Transform::inverse(const SpectralField& f, std::vector<double>& phys) {
    require_same_grid(f.grid, grid_, "inverse_transform");
    if (f.coeffs.size() != grid_.spectral_size()) throw ShapeError("inverse_transform: coefficient array size");
    const std::size_t n = grid_.spectral_size();
    for (std::size_t q = 0; q < n; ++q) {
        plans_->spec[q][0] = f.coeffs[q].real();
        plans_->spec[q][1] = f.coeffs[q].imag();
    }
    // The self-conjugate columns must be exactly Hermitian in y for c2r to see real data;
    // the y-transform below produces that as long as the input is.
    fftw_execute(plans_->cbwd);
    fftw_execute(plans_->c2r);
    phys.assign(plans_->phys, plans_->phys + grid_.physical_size());
}

SpectralField Transform::forward(const std::vector<double>& phys) {
    SpectralField out(grid_);
    forward(phys, out);
    return out;
}

std::vector<double> Transform::inverse(const SpectralField& f) {
    std::vector<double> out;
    inverse(f, out);
    return out;
}

SpectralField forward_transform(const GridSpec& g, const std::vector<double>& phys) {
    Transform t(g);
    return t.forward(phys);
}

std::vector<double> inverse_transform(const SpectralField& f) {
    Transform t(f.grid);
    return t.inverse(f);
}

// ---- field utilities ----

double l2_norm_sq(const SpectralField& f) {
    const GridSpec& g = f.grid;
    double s = 0;
    for (int i = 0; i < g.nkx(); ++i) {
        double col = 0;
        for (int j = 0; j < g.ny; ++j) col += std::norm(f.at(i, j));
        s += column_multiplicity(g, i) * col;
    }
    return s * g.lx * g.ly;
}

double l2_norm_sq(const GridSpec& g, const std::vector<double>& phys) {
    if (phys.size() != g.physical_size()) throw ShapeError("l2_norm_sq: sample array size");
    double s = 0;
    for (double v : phys) s += v * v;
    return s * g.lx * g.ly / static_cast<double>(g.physical_size());
}

double hermitian_defect(const SpectralField& f) {
    const GridSpec& g = f.grid;
    double d = 0;
    for (int i : {0, g.nx / 2}) {
        for (int j = 0; j < g.ny; ++j) {
            int jm = (g.ny - j) % g.ny;
            d = std::max(d, std::abs(f.at(i, j) - std::conj(f.at(i, jm))));
        }
    }
    return d;
}

void enforce_hermitian(SpectralField& f) {
    const GridSpec& g = f.grid;
    for (int i : {0, g.nx / 2}) {
        for (int j = 0; j <= g.ny / 2; ++j) {
            int jm = (g.ny - j) % g.ny;
            cplx avg = 0.5 * (f.at(i, j) + std::conj(f.at(i, jm)));
            f.at(i, j) = avg;
            f.at(i, jm) = std::conj(avg);
        }
    }
}

void apply_dealias(SpectralField& f) {
    const GridSpec& g = f.grid;
    const int ki = g.keep_i(), kj = g.keep_j();
    for (int i = 0; i < g.nkx(); ++i) {
        cplx* col = &f.coeffs[g.index(i, 0)];
        if (i > ki) {
            std::fill(col, col + g.ny, cplx(0, 0));
            continue;
        }
        for (int j = kj + 1; j < g.ny - kj; ++j) col[j] = 0;
    }
}

double tail_fraction(const SpectralField& f) {
    const GridSpec& g = f.grid;
    const double ri = std::max(1, g.keep_i()), rj = std::max(1, g.keep_j());
    const double cut = (2.0 / 3.0) * (2.0 / 3.0);
    double total = 0, tail = 0;
    for (int i = 0; i < g.nkx(); ++i) {
        const double w = column_multiplicity(g, i);
        const double u = i / ri;
        for (int j = 0; j < g.ny; ++j) {
            if (i == 0 && j == 0) continue;
            const double e = w * std::norm(f.at(i, j));
            const double v = g.signed_j(j) / rj;
            total += e;
            if (u * u + v * v > cut) tail += e;
        }
    }
    return total > 0 ? tail / total : 0.0;
}

// ---- multipliers ----

double multiplier_m1(double k, double xi, double amplitude) {
    if (k == 0) return kPi / 2;
    const double sg = k > 0 ? 1.0 : -1.0;
    return std::atan(std::pow(amplitude, -1.0 / 3.0) * std::pow(std::abs(k), -1.0 / 3.0) * sg * xi) + kPi / 2;
}

double multiplier_m2(double k, double xi) {
    if (k == 0) return kPi / 2;
    return std::atan(xi / k) + kPi / 2;
}

double multiplier_m(double k, double xi, double amplitude, const NormParams& p) {
    return (multiplier_m1(k, xi, amplitude) + multiplier_m2(k, xi)) / (2 * kPi / p.xi) + 1;
}

SymbolCheck dissipation_symbol_check(double k, double xi, double amplitude, const NormParams& p) {
    SymbolCheck r;
    if (k == 0) {
        r.lhs = 0;
        r.rhs = -p.theta2 / amplitude * xi * xi;
        return r;
    }
    const double ak = std::abs(k);
    const double a13 = std::pow(amplitude, -1.0 / 3.0);
    const double k23 = std::pow(ak, 2.0 / 3.0);
    const double z = a13 * std::pow(ak, -1.0 / 3.0) * xi;
    const double ghost = k * k / (k * k + xi * xi);
    r.lhs = a13 * k23 / (1 + z * z) + ghost;
    r.rhs = p.theta1 * a13 * k23 - p.theta2 / amplitude * xi * xi + ghost;
    return r;
}

// ---- norms ----

double y_weight_sq(double k, double m, double eps) {
    const double k2 = k * k;
    return std::pow(1 + k2, m) * std::pow(1 + 1 / k2, eps);
}

YNorm y_norm_report(const SpectralField& f, double m, double eps, double extra_dx_power) {
    const GridSpec& g = f.grid;
    YNorm r;
    double s = 0;
    for (int i = 1; i < g.nkx(); ++i) {
        const double k = g.kx(i);
        double w = y_weight_sq(k, m, eps);
        if (extra_dx_power != 0) w *= std::pow(std::abs(k), 2 * extra_dx_power);
        double col = 0;
        for (int j = 0; j < g.ny; ++j) col += std::norm(f.at(i, j));
        s += column_multiplicity(g, i) * w * col;
    }
    double k0 = 0;
    for (int j = 0; j < g.ny; ++j) k0 += std::norm(f.at(0, j));
    r.value = std::sqrt(s * g.lx * g.ly);
    r.k0_l2 = std::sqrt(k0 * g.lx * g.ly);
    r.singular = eps > 0 && k0 > 0;
    return r;
}

double y_norm(const SpectralField& f, double m, double eps) { return y_norm_report(f, m, eps).value; }

NormAccumulator::NormAccumulator(const NormParams& p, double amplitude, AccumulatorWeight w)
    : p_(p), amplitude_(amplitude), weight_(w) {}

NormAccumulator::Pieces NormAccumulator::instantaneous(const SpectralField& f, double t, double phase) const {
    const GridSpec& g = f.grid;
    Pieces q;
    const double a13 = std::pow(amplitude_, -1.0 / 3.0);
    for (int i = 1; i < g.nkx(); ++i) {
        const double k = g.kx(i);
        const double k2 = k * k;
        const double k23 = std::pow(k, 2.0 / 3.0);
        double w = y_weight_sq(k, p_.m, p_.eps) * std::exp(2 * p_.a * a13 * k23 * t);
        if (weight_ == AccumulatorWeight::dx13) w *= k23;
        w *= column_multiplicity(g, i);
        double s = 0, sy = 0, sg = 0;
        for (int j = 0; j < g.ny; ++j) {
            const double e = std::norm(f.at(i, j));
            if (e == 0) continue;
            const double xi = g.ky(i, j, phase);
            s += e;
            sy += xi * xi * e;
            sg += k2 / (k2 + xi * xi) * e;
        }
        q.sup += w * s;
        q.dy += w * sy;
        q.dx13 += w * k23 * s;
        q.dx += w * k2 * s;
        q.ghost += w * sg;
    }
    const double area = g.lx * g.ly;
    q.sup *= area;
    q.dy *= area;
    q.dx13 *= area;
    q.dx *= area;
    q.ghost *= area;
    return q;
}

void NormAccumulator::accumulate(const SpectralField& f, double t, double dt, double phase) {
    if (!(dt >= 0)) throw ParameterError("x_norm_accumulate: negative dt");
    if (started_ && t < t_last_ - 1e-12 * std::max(1.0, std::abs(t_last_)))
        throw ParameterError("x_norm_accumulate: time moved backwards");
    Pieces q = instantaneous(f, t, phase);
    raw_.sup = std::max(raw_.sup, q.sup);
    raw_.dy += dt * q.dy;
    raw_.dx13 += dt * q.dx13;
    raw_.dx += dt * q.dx;
    raw_.ghost += dt * q.ghost;
    t_last_ = t + dt;
    started_ = true;
}

void NormAccumulator::observe(const SpectralField& f, double t, double phase) {
    Pieces q = instantaneous(f, t, phase);
    raw_.sup = std::max(raw_.sup, q.sup);
    t_last_ = std::max(t_last_, t);
    started_ = true;
}

NormAccumulator::Pieces NormAccumulator::weighted() const {
    Pieces w;
    const double tau = 2 * kPi;
    w.sup = raw_.sup;
    w.dy = (2 - p_.theta2 * p_.xi / tau) / amplitude_ * raw_.dy;
    w.dx13 = (p_.theta1 * p_.xi / tau - 2 * p_.a) / std::cbrt(amplitude_) * raw_.dx13;
    w.dx = 2 / amplitude_ * raw_.dx;
    w.ghost = p_.xi / tau * raw_.ghost;
    return w;
}

double NormAccumulator::x_norm_sq() const {
    Pieces w = weighted();
    return w.sup + w.dy + w.dx13 + w.dx + w.ghost;
}

double NormAccumulator::x_norm() const { return std::sqrt(x_norm_sq()); }

// ---- checkpoints ----

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& path) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw ParameterError("checkpoint " + path + ": truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const SpectralField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParameterError("checkpoint " + path + ": cannot open for writing");
    os.write("PKSC", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.nx));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.ny));
    put<double>(os, f.grid.lx);
    put<double>(os, f.grid.ly);
    for (const cplx& c : f.coeffs) {
        put<double>(os, c.real());
        put<double>(os, c.imag());
    }
    if (!os) throw ParameterError("checkpoint " + path + ": write failed");
}

SpectralField read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParameterError("checkpoint " + path + ": cannot open");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "PKSC", 4) != 0)
        throw ParameterError("checkpoint " + path + ": bad magic");
    auto version = get<std::uint32_t>(is, path);
    if (version != 1) throw ParameterError("checkpoint " + path + ": unsupported version " + std::to_string(version));
    GridSpec g;
    g.nx = static_cast<int>(get<std::uint32_t>(is, path));
    g.ny = static_cast<int>(get<std::uint32_t>(is, path));
    g.lx = get<double>(is, path);
    g.ly = get<double>(is, path);
    validate(g);
    SpectralField f(g);
    for (cplx& c : f.coeffs) {
        double re = get<double>(is, path);
        double im = get<double>(is, path);
        c = cplx(re, im);
    }
    char extra;
    if (is.read(&extra, 1)) throw ParameterError("checkpoint " + path + ": trailing bytes");
    return f;
}

}  // namespace pks
