#include "bosecone/kac.hpp"

#include <algorithm>
#include <cmath>

namespace bosecone {

namespace {

BigInt big_binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc *= (n - k + i);
    acc /= i;
  }
  return acc;
}

BigInt big_pow2(int e) { return BigInt(1) << e; }

}  // namespace

KacSystem make_kac_system(int m) {
  if (m < 1 || m > 60) throw ValidationError("kac system: requires 1 <= M <= 60");
  KacSystem sys;
  sys.m = m;
  const int n = m + 1;
  sys.symmetric = Eigen::MatrixXd::Zero(n, n);
  sys.sylvester = Eigen::MatrixXd::Zero(n, n);
  sys.weights = Eigen::VectorXd::Zero(n);
  for (int r = 0; r <= m; ++r) {
    sys.weights(r) = std::sqrt(static_cast<double>(binomial(m, r)));
    if (r >= 1) {
      sys.symmetric(r, r - 1) = std::sqrt(static_cast<double>(r) * (m - r + 1));
      sys.sylvester(r, r - 1) = m - r + 1;
    }
    if (r < m) {
      sys.symmetric(r, r + 1) = std::sqrt(static_cast<double>(r + 1) * (m - r));
      sys.sylvester(r, r + 1) = r + 1;
    }
  }
  return sys;
}

Eigen::VectorXd kac_spectrum(const KacSystem& sys) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.symmetric);
  if (es.info() != Eigen::Success) throw NumericalError("kac spectrum: eigensolver failed");
  return es.eigenvalues();
}

double kac_spectrum_defect(const KacSystem& sys) {
  Eigen::VectorXd lam = kac_spectrum(sys);
  double worst = 0.0;
  for (int i = 0; i <= sys.m; ++i)
    worst = std::max(worst, std::abs(lam(i) - (-sys.m + 2.0 * i)));
  return worst;
}

std::vector<std::vector<BigInt>> kac_right_eigenvectors(int m) {
  if (m < 1) throw ValidationError("kac eigenvectors: requires M >= 1");
  std::vector<std::vector<BigInt>> rows(m + 1, std::vector<BigInt>(m + 1));
  for (int k = 0; k <= m; ++k)
    for (int comp = 0; comp <= m; ++comp) {
      BigInt acc = 0;
      for (int i = std::max(0, comp - k); i <= std::min(comp, m - k); ++i) {
        BigInt term = big_binomial(k, comp - i) * big_binomial(m - k, i);
        if ((comp - i) % 2 != 0) term = -term;
        acc += term;
      }
      rows[k][comp] = acc;
    }
  return rows;
}

std::vector<std::vector<BigInt>> kac_left_eigenvectors_scaled(int m) {
  if (m < 1) throw ValidationError("kac eigenvectors: requires M >= 1");
  std::vector<std::vector<BigInt>> rows(m + 1, std::vector<BigInt>(m + 1));
  for (int k = 0; k <= m; ++k)
    for (int comp = 0; comp <= m; ++comp) {
      BigInt acc = 0;
      for (int i = std::max(0, k - comp); i <= std::min(k, m - comp); ++i) {
        BigInt term = big_binomial(comp, k - i) * big_binomial(m - comp, i);
        if ((k - i) % 2 != 0) term = -term;
        acc += term;
      }
      rows[k][comp] = acc;
    }
  return rows;
}

BigInt kac_eigen_residual(int m) {
  auto right = kac_right_eigenvectors(m);
  // integer tridiagonal action: (S v)_r = (M - r + 1) v_{r-1} + (r + 1) v_{r+1}
  BigInt worst = 0;
  for (int k = 0; k <= m; ++k) {
    const auto& v = right[k];
    for (int r = 0; r <= m; ++r) {
      BigInt lhs = 0;
      if (r >= 1) lhs += BigInt(m - r + 1) * v[r - 1];
      if (r < m) lhs += BigInt(r + 1) * v[r + 1];
      BigInt defect = lhs - BigInt(m - 2 * k) * v[r];
      if (defect < 0) defect = -defect;
      worst = std::max(worst, defect);
    }
  }
  return worst;
}

BigInt kac_biorthogonality_defect(int m) {
  auto right = kac_right_eigenvectors(m);
  auto left = kac_left_eigenvectors_scaled(m);
  const BigInt two_m = big_pow2(m);
  BigInt worst = 0;
  for (int j = 0; j <= m; ++j)
    for (int k = 0; k <= m; ++k) {
      BigInt dot = 0;
      for (int comp = 0; comp <= m; ++comp) dot += left[j][comp] * right[k][comp];
      BigInt defect = dot - (j == k ? two_m : BigInt(0));
      if (defect < 0) defect = -defect;
      worst = std::max(worst, defect);
    }
  return worst;
}

std::complex<double> kac_corner_amplitude(const KacSystem& sys) {
  if (sys.m < 2) throw ValidationError("corner amplitude: requires M >= 2");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.symmetric);
  if (es.info() != Eigen::Success) throw NumericalError("corner amplitude: eigensolver failed");
  const Eigen::MatrixXd& vec = es.eigenvectors();
  const Eigen::VectorXd& lam = es.eigenvalues();
  std::complex<double> corner(0.0, 0.0);
  const double half_pi = std::acos(0.0);
  for (int i = 0; i <= sys.m; ++i) {
    std::complex<double> phase = std::exp(std::complex<double>(0.0, -half_pi * lam(i)));
    corner += phase * vec(1, i) * vec(sys.m - 1, i);
  }
  return corner;
}

BigInt binomial_identity_defect(int m) {
  if (m < 2) throw ValidationError("binomial identities: requires M >= 2");
  BigInt s0 = 0, s1 = 0, s2 = 0;
  for (int k = 0; k < m; ++k) {
    BigInt c = big_binomial(m, k);
    s0 += c;
    s1 += BigInt(k) * c;
    s2 += BigInt(k) * BigInt(k - 1) * c;
  }
  const BigInt mm = m;
  BigInt d0 = s0 - (big_pow2(m) - 1);
  BigInt d1 = s1 - (mm * big_pow2(m - 1) - mm);
  BigInt d2 = s2 - (mm * (mm - 1) * big_pow2(m - 2) - mm * (mm - 1));
  for (BigInt* d : {&d0, &d1, &d2})
    if (*d < 0) *d = -*d;
  return std::max({d0, d1, d2});
}

BlockadeSpectrum blockade_limit_spectrum(int m, int k, double j, double u) {
  if (m < 3) throw ValidationError("blockade spectrum: requires M >= 3");
  if (k < 1 || k > m) throw ValidationError("blockade spectrum: requires 1 <= k <= M");
  if (!(j > 0.0) || !(u > 0.0))
    throw ValidationError("blockade spectrum: requires J > 0 and U > 0");
  const int n = m + 1;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd diag(n);
  for (int r = 0; r <= m; ++r) {
    diag(r) = static_cast<double>(m - r) * (m + r - 2 * k + 1);
    g(r, r) = u * diag(r);
    if (r >= 1) g(r, r - 1) = j * m * std::sqrt(static_cast<double>(r) * (m - r + 1));
    if (r < m) g(r, r + 1) = j * m * std::sqrt(static_cast<double>(r + 1) * (m - r));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success) throw NumericalError("blockade spectrum: eigensolver failed");
  const Eigen::MatrixXd& vec = es.eigenvectors();
  const Eigen::VectorXd& lam = es.eigenvalues();

  // pair eigenvalues with unperturbed indices: the two eigenvectors carrying
  // the most weight on components {k-1, k} form the resonant pair; everything
  // else is assigned by its dominant component.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    auto mass = [&](int c) {
      return vec(k - 1, c) * vec(k - 1, c) + vec(k, c) * vec(k, c);
    };
    return mass(a) > mass(b);
  });
  int res_a = order[0], res_b = order[1];
  if (lam(res_a) < lam(res_b)) std::swap(res_a, res_b);  // res_a: upper level

  BlockadeSpectrum out;
  out.shifted = Eigen::VectorXd::Zero(n);
  out.target_gap = 2.0 * j * m * std::sqrt(static_cast<double>(k) * (m - k + 1));
  out.resonant_gap = lam(res_a) - lam(res_b);
  out.shifted(k - 1) = lam(res_a) - u * diag(k - 1);
  out.shifted(k) = lam(res_b) - u * diag(k);

  std::vector<bool> used(n, false);
  used[res_a] = used[res_b] = true;
  for (int r = 0; r <= m; ++r) {
    if (r == k - 1 || r == k) continue;
    int best = -1;
    double best_w = -1.0;
    for (int c = 0; c < n; ++c) {
      if (used[c]) continue;
      double w = vec(r, c) * vec(r, c);
      if (w > best_w) {
        best_w = w;
        best = c;
      }
    }
    used[best] = true;
    out.shifted(r) = lam(best) - u * diag(r);
    out.off_pair_max = std::max(out.off_pair_max, std::abs(out.shifted(r)));
  }

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  double ov_sym = std::abs(inv_sqrt2 * (vec(k - 1, res_a) + vec(k, res_a)));
  double ov_asym = std::abs(inv_sqrt2 * (vec(k - 1, res_b) - vec(k, res_b)));
  out.pair_overlap_defect =
      std::max(1.0 - ov_sym * ov_sym, 1.0 - ov_asym * ov_asym);
  return out;
}

}  // namespace bosecone
