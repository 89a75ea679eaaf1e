#ifndef MVHEDGE_QUADRATURE_HPP
#define MVHEDGE_QUADRATURE_HPP

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>

namespace mvhedge {

/// Nodes and weights for  int_0^inf e^{-y} g(y) dy ~ sum_k w_k g(y_k).
template <typename Scalar>
struct GaussLaguerre {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  template <typename F>
  Scalar integrate(F&& g) const {
    Scalar sum(0);
    for (Eigen::Index k = 0; k < nodes.size(); ++k) sum += weights[k] * g(nodes[k]);
    return sum;
  }
};

/// Golub-Welsch: eigen-decomposition of the Laguerre Jacobi matrix
/// (diagonal 2k+1, off-diagonal k).
template <typename Scalar = double>
GaussLaguerre<Scalar> gauss_laguerre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_laguerre: n must be >= 1");
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat J = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    J(k, k) = Scalar(2 * k + 1);
    if (k + 1 < n) J(k, k + 1) = J(k + 1, k) = Scalar(k + 1);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  GaussLaguerre<Scalar> rule;
  rule.nodes = es.eigenvalues();
  rule.weights = es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar, typename F>
void gk15(F& f, Scalar a, Scalar b, Scalar& kronrod, Scalar& error) {
  const Scalar c = (a + b) / 2, h = (b - a) / 2;
  const Scalar fc = f(c);
  Scalar k = fc * Scalar(kKronrodWeights[7]);
  Scalar g = fc * Scalar(kGaussWeights[3]);
  for (int i = 0; i < 7; ++i) {
    const Scalar dx = h * Scalar(kKronrodNodes[i]);
    const Scalar s = f(c - dx) + f(c + dx);
    k += Scalar(kKronrodWeights[i]) * s;
    if (i % 2 == 1) g += Scalar(kGaussWeights[i / 2]) * s;
  }
  kronrod = k * h;
  error = std::abs((k - g) * h);
}

template <typename Scalar, typename F>
Scalar adaptive(F& f, Scalar a, Scalar b, Scalar whole, Scalar tol, int depth) {
  const Scalar m = (a + b) / 2;
  Scalar left, el, right, er;
  gk15(f, a, m, left, el);
  gk15(f, m, b, right, er);
  const Scalar refined = left + right;
  if (depth <= 0 || el + er <= tol || std::abs(refined - whole) <= tol / 100) return refined;
  return adaptive(f, a, m, left, tol / 2, depth - 1) + adaptive(f, m, b, right, tol / 2, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) with recursive bisection. The tolerance is
/// max(abs_tol, rel_tol * |estimate|).
template <typename Scalar, typename F>
Scalar integrate_gauss_kronrod(F&& f, Scalar a, Scalar b, Scalar rel_tol = Scalar(1e-10),
                               Scalar abs_tol = Scalar(0), int max_depth = 30) {
  if (a == b) return Scalar(0);
  Scalar whole, err;
  detail::gk15(f, a, b, whole, err);
  const Scalar tol = std::max(abs_tol, rel_tol * std::abs(whole));
  if (err <= tol / 10) return whole;
  return detail::adaptive(f, a, b, whole, tol, max_depth);
}

}  // namespace mvhedge

#endif  // MVHEDGE_QUADRATURE_HPP
