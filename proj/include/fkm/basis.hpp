#pragma once

// Basis systems on the unit interval: an orthonormal Fourier family and
// clamped B-splines with equispaced interior knots, together with the
// curvature penalty matrix R, R(a,b) = integral of phi_a'' * phi_b'' over [0,1].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkm {

enum class BasisKind { Fourier, BSpline };

struct BasisSpec {
  BasisKind kind = BasisKind::Fourier;
  int m = 15;
  int order = 4;  // B-spline only; 4 = cubic
};

namespace detail {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSqrt2 = 1.414213562373095048801688724209698079;

// Tolerance for accepting times that land a rounding error outside [0,1].
inline constexpr double kDomainSlack = 1e-12;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// Legendre recurrence; accurate to machine precision for modest n.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(i)] = -x;
    nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
}

}  // namespace detail

class BasisSystem {
 public:
  // Defaults to the single-function constant Fourier basis.
  BasisSystem() : roughness_(Eigen::MatrixXd::Zero(1, 1)) {}

  static BasisSystem fourier(int m) {
    if (m < 1) throw std::invalid_argument("Fourier basis needs m >= 1");
    BasisSystem b;
    b.kind_ = BasisKind::Fourier;
    b.m_ = m;
    b.order_ = 0;
    b.compute_roughness();
    return b;
  }

  // m - order equispaced interior knots; boundary knots 0 and 1 carry
  // multiplicity `order` (clamped).
  static BasisSystem bspline(int m, int order = 4) {
    if (order < 1) throw std::invalid_argument("B-spline order must be positive");
    if (m < order) throw std::invalid_argument("B-spline basis needs m >= order");
    BasisSystem b;
    b.kind_ = BasisKind::BSpline;
    b.m_ = m;
    b.order_ = order;
    const int interior = m - order;
    b.knots_.reserve(static_cast<std::size_t>(m + order));
    for (int i = 0; i < order; ++i) b.knots_.push_back(0.0);
    for (int i = 1; i <= interior; ++i) {
      b.knots_.push_back(static_cast<double>(i) / static_cast<double>(interior + 1));
    }
    for (int i = 0; i < order; ++i) b.knots_.push_back(1.0);
    if (order >= 3) {
      b.compute_roughness();
    } else {
      b.roughness_.resize(0, 0);  // curvature penalty undefined below order 3
    }
    return b;
  }

  static BasisSystem make(const BasisSpec& spec) {
    return spec.kind == BasisKind::Fourier ? fourier(spec.m) : bspline(spec.m, spec.order);
  }

  BasisKind kind() const { return kind_; }
  int size() const { return m_; }
  int order() const { return order_; }
  const std::vector<double>& knots() const { return knots_; }

  BasisSpec spec() const { return BasisSpec{kind_, m_, order_}; }

  // Basis values phi(t); t must lie in [0,1] up to a rounding slack.
  Eigen::VectorXd evaluate(double t) const {
    const double u = clamp_domain(t);
    Eigen::VectorXd v(m_);
    if (kind_ == BasisKind::Fourier) {
      v[0] = 1.0;
      for (int j = 1; j < m_; ++j) {
        const double freq = detail::kTwoPi * static_cast<double>((j + 1) / 2);
        v[j] = (j % 2 == 1) ? detail::kSqrt2 * std::sin(freq * u) : detail::kSqrt2 * std::cos(freq * u);
      }
    } else {
      v.setZero();
      const int span = find_span(u);
      std::vector<double> vals(static_cast<std::size_t>(order_));
      basis_funs(span, u, vals);
      for (int r = 0; r < order_; ++r) v[span - order_ + 1 + r] = vals[static_cast<std::size_t>(r)];
    }
    return v;
  }

  // Second derivatives phi''(t).
  Eigen::VectorXd second_derivative(double t) const {
    const double u = clamp_domain(t);
    Eigen::VectorXd v(m_);
    if (kind_ == BasisKind::Fourier) {
      v[0] = 0.0;
      for (int j = 1; j < m_; ++j) {
        const double freq = detail::kTwoPi * static_cast<double>((j + 1) / 2);
        const double base = (j % 2 == 1) ? std::sin(freq * u) : std::cos(freq * u);
        v[j] = -detail::kSqrt2 * freq * freq * base;
      }
    } else {
      if (order_ < 3) throw std::invalid_argument("second derivative needs B-spline order >= 3");
      v.setZero();
      const int span = find_span(u);
      std::vector<std::vector<double>> ders;
      ders_basis_funs(span, u, 2, ders);
      for (int r = 0; r < order_; ++r) v[span - order_ + 1 + r] = ders[2][static_cast<std::size_t>(r)];
    }
    return v;
  }

  // N x m matrix with row j = phi(times[j])^T.
  Eigen::MatrixXd design_matrix(const std::vector<double>& times) const {
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(times.size()), m_);
    for (std::size_t j = 0; j < times.size(); ++j) {
      phi.row(static_cast<Eigen::Index>(j)) = evaluate(times[j]).transpose();
    }
    return phi;
  }

  // Curvature penalty matrix; unsupported for B-spline order < 3.
  const Eigen::MatrixXd& roughness() const {
    if (roughness_.size() == 0) {
      throw std::invalid_argument("roughness penalty unsupported: B-spline order < 3");
    }
    return roughness_;
  }

 private:
  double clamp_domain(double t) const {
    if (t < -detail::kDomainSlack || t > 1.0 + detail::kDomainSlack) {
      throw std::domain_error("basis evaluation outside [0,1]: t = " + std::to_string(t));
    }
    return std::min(1.0, std::max(0.0, t));
  }

  // Index s with knots_[s] <= u < knots_[s+1], s in [order-1, m-1].
  int find_span(double u) const {
    if (u >= knots_[static_cast<std::size_t>(m_)]) return m_ - 1;
    const auto begin = knots_.begin() + (order_ - 1);
    const auto end = knots_.begin() + m_;
    return static_cast<int>(std::upper_bound(begin, end, u) - knots_.begin()) - 1;
  }

  // Cox-de Boor recurrence for the `order` non-vanishing functions at u.
  void basis_funs(int span, double u, std::vector<double>& vals) const {
    std::vector<double> left(static_cast<std::size_t>(order_));
    std::vector<double> right(static_cast<std::size_t>(order_));
    vals.assign(static_cast<std::size_t>(order_), 0.0);
    vals[0] = 1.0;
    for (int j = 1; j < order_; ++j) {
      left[static_cast<std::size_t>(j)] = u - knots_[static_cast<std::size_t>(span + 1 - j)];
      right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double den = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
        const double temp = vals[static_cast<std::size_t>(r)] / den;
        vals[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
        saved = left[static_cast<std::size_t>(j - r)] * temp;
      }
      vals[static_cast<std::size_t>(j)] = saved;
    }
  }

  // Values and derivatives up to order `nd` of the non-vanishing functions
  // at u (the standard triangular-table derivative algorithm).
  void ders_basis_funs(int span, double u, int nd, std::vector<std::vector<double>>& ders) const {
    const int k = order_;
    std::vector<std::vector<double>> ndu(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k)));
    std::vector<double> left(static_cast<std::size_t>(k)), right(static_cast<std::size_t>(k));
    ndu[0][0] = 1.0;
    for (int j = 1; j < k; ++j) {
      left[static_cast<std::size_t>(j)] = u - knots_[static_cast<std::size_t>(span + 1 - j)];
      right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        ndu[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)] =
            right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
        const double temp = ndu[static_cast<std::size_t>(r)][static_cast<std::size_t>(j - 1)] /
                            ndu[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
        ndu[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] =
            saved + right[static_cast<std::size_t>(r + 1)] * temp;
        saved = left[static_cast<std::size_t>(j - r)] * temp;
      }
      ndu[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = saved;
    }
    ders.assign(static_cast<std::size_t>(nd + 1), std::vector<double>(static_cast<std::size_t>(k), 0.0));
    for (int j = 0; j < k; ++j) {
      ders[0][static_cast<std::size_t>(j)] = ndu[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)];
    }
    std::vector<std::vector<double>> a(2, std::vector<double>(static_cast<std::size_t>(k)));
    for (int r = 0; r < k; ++r) {
      int s1 = 0, s2 = 1;
      a[0].assign(static_cast<std::size_t>(k), 0.0);
      a[1].assign(static_cast<std::size_t>(k), 0.0);
      a[0][0] = 1.0;
      for (int d = 1; d <= nd; ++d) {
        double value = 0.0;
        const int rk = r - d;
        const int pk = k - 1 - d;
        if (r >= d) {
          const double den = ndu[static_cast<std::size_t>(pk + 1)][static_cast<std::size_t>(rk)];
          a[static_cast<std::size_t>(s2)][0] = den == 0.0 ? 0.0 : a[static_cast<std::size_t>(s1)][0] / den;
          value = a[static_cast<std::size_t>(s2)][0] * ndu[static_cast<std::size_t>(rk)][static_cast<std::size_t>(pk)];
        }
        const int j_lo = rk >= -1 ? 1 : -rk;
        const int j_hi = r - 1 <= pk ? d - 1 : k - 1 - r;
        for (int j = j_lo; j <= j_hi; ++j) {
          const double den = ndu[static_cast<std::size_t>(pk + 1)][static_cast<std::size_t>(rk + j)];
          a[static_cast<std::size_t>(s2)][static_cast<std::size_t>(j)] =
              den == 0.0 ? 0.0
                         : (a[static_cast<std::size_t>(s1)][static_cast<std::size_t>(j)] -
                            a[static_cast<std::size_t>(s1)][static_cast<std::size_t>(j - 1)]) /
                               den;
          value += a[static_cast<std::size_t>(s2)][static_cast<std::size_t>(j)] *
                   ndu[static_cast<std::size_t>(rk + j)][static_cast<std::size_t>(pk)];
        }
        if (r <= pk) {
          const double den = ndu[static_cast<std::size_t>(pk + 1)][static_cast<std::size_t>(r)];
          a[static_cast<std::size_t>(s2)][static_cast<std::size_t>(d)] =
              den == 0.0 ? 0.0 : -a[static_cast<std::size_t>(s1)][static_cast<std::size_t>(d - 1)] / den;
          value += a[static_cast<std::size_t>(s2)][static_cast<std::size_t>(d)] *
                   ndu[static_cast<std::size_t>(r)][static_cast<std::size_t>(pk)];
        }
        ders[static_cast<std::size_t>(d)][static_cast<std::size_t>(r)] = value;
        std::swap(s1, s2);
      }
    }
    double factor = static_cast<double>(k - 1);
    for (int d = 1; d <= nd; ++d) {
      for (int j = 0; j < k; ++j) ders[static_cast<std::size_t>(d)][static_cast<std::size_t>(j)] *= factor;
      factor *= static_cast<double>(k - 1 - d);
    }
  }

  void compute_roughness() {
    roughness_ = Eigen::MatrixXd::Zero(m_, m_);
    if (kind_ == BasisKind::Fourier) {
      // phi'' = -(2*pi*l)^2 phi for each sin/cos pair; the family stays
      // orthogonal, so R is diagonal with entries (2*pi*l)^4.
      for (int j = 1; j < m_; ++j) {
        const double freq = detail::kTwoPi * static_cast<double>((j + 1) / 2);
        roughness_(j, j) = freq * freq * freq * freq;
      }
      return;
    }
    // Per-span Gauss-Legendre on phi'' phi''^T; the integrand is a
    // polynomial of degree 2*(order-3) on each span, so npts keeps it exact.
    const int npts = std::max(5, order_ - 2);
    std::vector<double> nodes, weights;
    detail::gauss_legendre(npts, nodes, weights);
    std::vector<std::vector<double>> ders;
    for (int span = order_ - 1; span < m_; ++span) {
      const double a = knots_[static_cast<std::size_t>(span)];
      const double b = knots_[static_cast<std::size_t>(span + 1)];
      if (b - a <= 0.0) continue;
      const double half = 0.5 * (b - a);
      const double mid = 0.5 * (a + b);
      for (int g = 0; g < npts; ++g) {
        const double u = mid + half * nodes[static_cast<std::size_t>(g)];
        const double w = half * weights[static_cast<std::size_t>(g)];
        ders_basis_funs(span, u, 2, ders);
        for (int r = 0; r < order_; ++r) {
          const int gr = span - order_ + 1 + r;
          for (int c = 0; c <= r; ++c) {
            const int gc = span - order_ + 1 + c;
            const double add = w * ders[2][static_cast<std::size_t>(r)] * ders[2][static_cast<std::size_t>(c)];
            roughness_(gr, gc) += add;
            if (gr != gc) roughness_(gc, gr) += add;
          }
        }
      }
    }
  }

  BasisKind kind_ = BasisKind::Fourier;
  int m_ = 1;
  int order_ = 0;
  std::vector<double> knots_;
  Eigen::MatrixXd roughness_;
};

}  // namespace fkm
