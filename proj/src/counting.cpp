#include "diolab/counting.hpp"

#include <algorithm>
#include <cmath>

namespace diolab {

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb, double fm, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, fm, flm, left, tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, fb, frm, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12) {
    if (!(b > a)) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fb, fm, whole, tol, 48);
}

// Integers p in (a, b) resp. [a, b].
inline std::int64_t interval_count(double a, double b, Boundary boundary) {
    std::int64_t cnt;
    if (boundary == Boundary::Strict)
        cnt = static_cast<std::int64_t>(std::ceil(b)) - static_cast<std::int64_t>(std::floor(a)) - 1;
    else
        cnt = static_cast<std::int64_t>(std::floor(b)) - static_cast<std::int64_t>(std::ceil(a)) + 1;
    return std::max<std::int64_t>(cnt, 0);
}

// Cached per-radius data: x-interval halfwidths and shell index.
struct RadiusTable {
    std::vector<std::vector<double>> halfwidth;  // [i][r]
    std::vector<int> shell;                      // [r]

    RadiusTable(const DioInstance& inst, std::int64_t rmax) {
        halfwidth.assign(inst.m, std::vector<double>(rmax + 1, 0.0));
        shell.assign(rmax + 1, 0);
        for (std::int64_t r = 1; r <= rmax; ++r) {
            double lr = std::log(static_cast<double>(r));
            shell[r] = static_cast<int>(std::floor(lr));
            for (int i = 0; i < inst.m; ++i)
                halfwidth[i][r] = inst.vartheta[i] * std::exp(-inst.weights.w[i] * lr);
        }
    }
};

// Visits every q in Z^n with 1 <= ||q||_inf <= rmax, passing the sup norm.
template <typename Fn>
void for_each_q(int n, std::int64_t rmax, std::int64_t budget, Fn&& leaf) {
    std::vector<std::int64_t> q(n, 0);
    std::int64_t used = 0;
    std::function<void(int, std::int64_t)> rec = [&](int i, std::int64_t cur) {
        if (i == n) {
            if (cur >= 1) {
                if (++used > budget) throw BudgetExceeded("count: q-loop budget exceeded");
                leaf(q, cur);
            }
            return;
        }
        for (std::int64_t qi = -rmax; qi <= rmax; ++qi) {
            q[i] = qi;
            rec(i + 1, std::max<std::int64_t>(cur, std::llabs(qi)));
        }
    };
    rec(0, 0);
}

}  // namespace

DioInstance::DioInstance(int m_, int n_, std::vector<double> vartheta_, Weights weights_,
                         std::vector<double> xi_, Boundary boundary_)
    : m(m_), n(n_), vartheta(std::move(vartheta_)), weights(std::move(weights_)),
      xi(std::move(xi_)), boundary(boundary_) {
    if (m <= 0 || n <= 0) throw ConfigError("DioInstance: m and n must be positive");
    if (static_cast<int>(vartheta.size()) != m)
        throw ConfigError("DioInstance: vartheta must have m entries");
    for (double v : vartheta)
        if (!(v > 0.0)) throw ConfigError("DioInstance: vartheta entries must be positive");
    if (static_cast<int>(xi.size()) != m) throw ConfigError("DioInstance: xi must have m entries");
    if (weights.m != m || weights.n != n) throw ConfigError("DioInstance: weights shape mismatch");
    if (std::abs(weights.expansion_sum() - n) > 1e-12)
        throw ConfigError("DioInstance: expansion weights must sum to n");
}

double smooth_ramp(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double t4 = t * t * t * t;
    return t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}

double eta_cutoff(double alpha, const TruncationSpec& trunc) {
    if (alpha <= 0.0) return 1.0;
    return smooth_ramp((std::log(trunc.c * trunc.L) - std::log(alpha)) /
                       (2.0 * std::log(trunc.c)));
}

TruncationSpec::TruncationSpec(double L_, double c_) : L(L_), c(c_) {
    if (!(L >= 1.0)) throw ConfigError("TruncationSpec: L must be >= 1");
    if (!(c > 1.0)) throw ConfigError("TruncationSpec: c must be > 1");
}

std::int64_t count_solutions_bruteforce(const DioInstance& instance, const ShiftMatrix& theta,
                                        double T, std::int64_t budget) {
    if (!(T >= 1.0)) throw ConfigError("count_solutions_bruteforce: T must be >= 1");
    if (theta.m() != instance.m || theta.n() != instance.n)
        throw ConfigError("count_solutions_bruteforce: theta dimension mismatch");
    const auto rmax = static_cast<std::int64_t>(std::floor(T));
    RadiusTable table(instance, rmax);
    std::int64_t total = 0;
    for_each_q(instance.n, rmax, budget, [&](const std::vector<std::int64_t>& q, std::int64_t r) {
        std::int64_t prod = 1;
        for (int i = 0; i < instance.m && prod > 0; ++i) {
            double t = instance.xi[i];
            for (int j = 0; j < instance.n; ++j) t += theta.entries(i, j) * q[j];
            double h = table.halfwidth[i][r];
            prod *= interval_count(-t - h, -t + h, instance.boundary);
        }
        total += prod;
    });
    return total;
}

CountSeries count_solutions_shells(const DioInstance& instance, const ShiftMatrix& theta, int N,
                                   std::int64_t budget) {
    if (N < 0) throw ConfigError("count_solutions_shells: N must be >= 0");
    if (theta.m() != instance.m || theta.n() != instance.n)
        throw ConfigError("count_solutions_shells: theta dimension mismatch");
    CountSeries series;
    series.theta = theta;
    series.N = N;
    series.per_shell.assign(N, 0);
    if (N == 0) return series;
    // integers r with r < e^N
    const auto rmax = static_cast<std::int64_t>(std::ceil(std::exp(static_cast<double>(N)))) - 1;
    RadiusTable table(instance, rmax);
    for_each_q(instance.n, rmax, budget, [&](const std::vector<std::int64_t>& q, std::int64_t r) {
        std::int64_t prod = 1;
        for (int i = 0; i < instance.m && prod > 0; ++i) {
            double t = instance.xi[i];
            for (int j = 0; j < instance.n; ++j) t += theta.entries(i, j) * q[j];
            double h = table.halfwidth[i][r];
            prod *= interval_count(-t - h, -t + h, instance.boundary);
        }
        series.per_shell[table.shell[r]] += prod;
    });
    for (auto c : series.per_shell) series.total += c;
    return series;
}

TestFunction TestFunction::chi(const DioInstance& inst) {
    TestFunction f;
    f.kind = TestFunctionKind::BoxIndicatorChi;
    f.instance = inst;
    return f;
}

TestFunction TestFunction::smoothed(const DioInstance& inst, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("TestFunction: eps must be in (0, 0.5)");
    TestFunction f;
    f.kind = TestFunctionKind::SmoothedBoxFeps;
    f.instance = inst;
    f.eps = eps;
    return f;
}

double TestFunction::evaluate(const Vector& point) const {
    const int m = instance.m, n = instance.n;
    if (point.size() != m + n) throw ConfigError("TestFunction: point dimension mismatch");
    double r = point.tail(n).lpNorm<Eigen::Infinity>();
    switch (kind) {
        case TestFunctionKind::BoxIndicatorChi: {
            if (!(r >= 1.0 && r < std::exp(1.0))) return 0.0;
            for (int i = 0; i < m; ++i) {
                double h = instance.vartheta[i] * std::pow(r, -instance.weights.w[i]);
                double xi_abs = std::abs(point[i]);
                bool ok = instance.boundary == Boundary::Strict ? xi_abs < h : xi_abs <= h;
                if (!ok) return 0.0;
            }
            return 1.0;
        }
        case TestFunctionKind::SmoothedBoxFeps: {
            // 1 - smooth_ramp is 1 on (-inf,0], 0 on [1,inf)
            double a = (1.0 - smooth_ramp((1.0 - r) / eps)) *
                       (1.0 - smooth_ramp((r - std::exp(1.0)) / eps));
            if (a == 0.0) return 0.0;
            double val = a;
            for (int i = 0; i < m; ++i) {
                double h = instance.vartheta[i] * std::pow(r, -instance.weights.w[i]);
                val *= 1.0 - smooth_ramp((std::abs(point[i]) - h) / eps);
                if (val == 0.0) return 0.0;
            }
            return val;
        }
        case TestFunctionKind::RadialOfLambda1:
            throw ConfigError("TestFunction: radial probe is not a point function");
    }
    return 0.0;
}

double TestFunction::integral() const {
    const int m = instance.m, n = instance.n;
    const double e = std::exp(1.0);
    double prod_theta = 1.0;
    for (double v : instance.vartheta) prod_theta *= v;
    switch (kind) {
        case TestFunctionKind::BoxIndicatorChi:
            // vol(Omega_e) = 2^m prod(vartheta) omega_n since sum w_i = n
            return std::ldexp(prod_theta, m) * omega_n(n);
        case TestFunctionKind::SmoothedBoxFeps: {
            // Radial form: the x-integral at ||y|| = r is
            // prod_i (2 vartheta_i r^{-w_i} + eps), the sup-norm co-area factor
            // is n 2^n r^{n-1}, all damped by the radial ramp a(r).
            auto integrand = [&](double r) -> double {
                if (r <= 0.0) return 0.0;
                double a = (1.0 - smooth_ramp((1.0 - r) / eps)) *
                           (1.0 - smooth_ramp((r - e) / eps));
                if (a == 0.0) return 0.0;
                double xprod = 1.0;
                for (int i = 0; i < m; ++i)
                    xprod *= 2.0 * instance.vartheta[i] * std::pow(r, -instance.weights.w[i]) + eps;
                return a * xprod * n * std::ldexp(1.0, n) * std::pow(r, n - 1);
            };
            double total = 0.0;
            const double pts[] = {1.0 - eps, 1.0, e, e + eps};
            for (int k = 0; k + 1 < 4; ++k)
                total += integrate(integrand, pts[k], pts[k + 1]);
            return total;
        }
        case TestFunctionKind::RadialOfLambda1:
            throw ConfigError("TestFunction: radial probe has no Lebesgue integral");
    }
    return 0.0;
}

void TestFunction::support_box(Vector& lo, Vector& hi) const {
    const int m = instance.m, n = instance.n;
    lo.resize(m + n);
    hi.resize(m + n);
    double slack = kind == TestFunctionKind::SmoothedBoxFeps ? eps : 0.0;
    double rmin = 1.0 - slack;
    for (int i = 0; i < m; ++i) {
        double h = instance.vartheta[i] * std::pow(rmin, -instance.weights.w[i]) + slack;
        lo[i] = -h;
        hi[i] = h;
    }
    for (int j = 0; j < n; ++j) {
        lo[m + j] = -(std::exp(1.0) + slack);
        hi[m + j] = std::exp(1.0) + slack;
    }
}

double siegel_transform(const TestFunction& f, const AffineLattice& L, std::int64_t budget) {
    Vector lo, hi;
    f.support_box(lo, hi);
    if (L.dim != lo.size()) throw ConfigError("siegel_transform: dimension mismatch");
    double sum = 0.0;
    visit_points_in_box(L, lo, hi, Boundary::Closed, budget,
                        [&](const Vector& x) { sum += f.evaluate(x); });
    return sum;
}

double truncated_siegel(const TestFunction& f, const AffineLattice& L,
                        const TruncationSpec& trunc, std::int64_t budget) {
    AlphaResult alpha = alpha_height(L.basis, /*allow_approximate=*/L.dim > 3);
    double eta = eta_cutoff(alpha.value, trunc);
    if (eta == 0.0) return 0.0;
    return eta * siegel_transform(f, L, budget);
}

double mean_shell(const DioInstance& instance, int s) {
    if (s < 0) throw ConfigError("mean_shell: s must be >= 0");
    const int n = instance.n;
    const auto rlo = s == 0 ? std::int64_t{1}
                            : static_cast<std::int64_t>(std::ceil(std::exp(static_cast<double>(s))));
    const auto rhi =
        static_cast<std::int64_t>(std::ceil(std::exp(static_cast<double>(s + 1)))) - 1;
    double sum = 0.0;
    for (std::int64_t r = rlo; r <= rhi; ++r) {
        double shell_count =
            std::pow(2.0 * r + 1.0, n) - std::pow(2.0 * r - 1.0, n);  // #{||q||_inf = r}
        sum += shell_count * std::pow(static_cast<double>(r), -n);
    }
    double prod_theta = 1.0;
    for (double v : instance.vartheta) prod_theta *= v;
    return std::ldexp(prod_theta, instance.m) * sum;
}

double omega_n(int n) {
    if (n < 1) throw ConfigError("omega_n: n must be >= 1");
    return n * std::ldexp(1.0, n);
}

double variance_sigma2(const DioInstance& instance) {
    double prod_theta = 1.0;
    for (double v : instance.vartheta) prod_theta *= v;
    return std::ldexp(prod_theta, instance.m) * omega_n(instance.n);
}

double theta_infty(const DioInstance& instance, int s) {
    if (s < 0) throw ConfigError("theta_infty: s must be >= 0");
    if (s >= 1) return 0.0;  // the shells 1 <= ||y|| < e and e^s <= ||y|| < e^{s+1} are disjoint
    const int m = instance.m, n = instance.n;
    auto integrand = [&](double r) {
        double xprod = 1.0;
        for (int i = 0; i < m; ++i)
            xprod *= 2.0 * instance.vartheta[i] * std::pow(r, -instance.weights.w[i]);
        return xprod * n * std::ldexp(1.0, n) * std::pow(r, n - 1);
    };
    return integrate(integrand, 1.0, std::exp(1.0));
}

NormalizedStatistic normalized_statistic(const CountSeries& series, const DioInstance& instance) {
    if (series.N < 1) throw ConfigError("normalized_statistic: N must be >= 1");
    NormalizedStatistic out;
    const double sqrtN = std::sqrt(static_cast<double>(series.N));
    out.theorem_form =
        (static_cast<double>(series.total) - variance_sigma2(instance) * series.N) / sqrtN;
    double centered = 0.0;
    for (int s = 0; s < series.N; ++s)
        centered += static_cast<double>(series.per_shell[s]) - mean_shell(instance, s);
    out.birkhoff_form = centered / sqrtN;
    return out;
}

}  // namespace diolab
