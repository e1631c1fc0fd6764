#pragma once

// Two-site hopping band structure: the (M+1)-level single-band reduction of M
// bosons hopping between two sites, its integer-spectrum tridiagonal form, the
// closed-form eigenvector families, and the strong-interaction (blockade)
// two-level resonance. Everything here admits exact integer certificates,
// which the checks exploit via arbitrary-precision arithmetic.

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "bosecone/common.hpp"

namespace bosecone {

using BigInt = boost::multiprecision::cpp_int;

// Tridiagonal pair: the symmetric hop matrix G over the two-site number basis
// |m, M-m>, m = 0..M, and its integer similarity transform
// S = P G P^{-1}, P = diag(sqrt(C(M,m))), with sub-diagonal M-m+1 and
// super-diagonal m+1. Both share the exactly integer spectrum {M - 2k}.
struct KacSystem {
  int m = 0;                  // boson count M; matrices are (M+1) x (M+1)
  Eigen::MatrixXd symmetric;  // G, off-diagonals sqrt(m(M-m+1))
  Eigen::MatrixXd sylvester;  // S, integer entries
  Eigen::VectorXd weights;    // gamma_m = sqrt(C(M,m))
};

KacSystem make_kac_system(int m);

// Eigenvalues of the symmetric form, ascending (exact values -M, -M+2, .., M).
Eigen::VectorXd kac_spectrum(const KacSystem& sys);
// max_i | lambda_i - (-M + 2i) | over the computed ascending spectrum.
double kac_spectrum_defect(const KacSystem& sys);

// Closed-form right eigenvectors of the integer form, normalized to integer
// entries with v_{k0} = 1: v_{km} = sum_i (-1)^{m-i} C(k, m-i) C(M-k, i).
// Row k is the eigenvector for eigenvalue M - 2k.
std::vector<std::vector<BigInt>> kac_right_eigenvectors(int m);

// Left eigenvectors scaled by 2^M so entries are integers:
// L_{km} = sum_i (-1)^{k-i} C(m, k-i) C(M-m, i); <L_k, R_j> = 2^M delta_{kj}.
std::vector<std::vector<BigInt>> kac_left_eigenvectors_scaled(int m);

// Exact certificates (all should be identically zero):
// max-norm of S R_k - (M - 2k) R_k over all k, in exact integers.
BigInt kac_eigen_residual(int m);
// max | <L_j, R_k> - 2^M delta_{jk} | over all pairs, in exact integers.
BigInt kac_biorthogonality_defect(int m);

// Transfer amplitude [exp(-i pi G / 2)]_{1, M-1}: modulus one for all M >= 3,
// and exactly (-1)^{Mbar} i for odd M = 2 Mbar - 1 (purely imaginary); real
// +-1 for even M.
std::complex<double> kac_corner_amplitude(const KacSystem& sys);

// The three weighted binomial sums that force the corner amplitude onto the
// unit circle; returns the max absolute defect against the closed forms
// (exactly zero):
//   sum_{k<M} C(M,k)        = 2^M - 1
//   sum_{k<M} k C(M,k)      = M 2^{M-1} - M
//   sum_{k<M} k(k-1) C(M,k) = M(M-1) 2^{M-2} - M(M-1)
BigInt binomial_identity_defect(int m);

// Strong-interaction resonance: the (M+1)-level matrix with hop elements
// J M sqrt(m(M-m+1)) and diagonal U (M-m)(M+m-2k+1) develops, as U grows, an
// isolated two-level resonance between m = k-1 and m = k with splitting
// 2 J M sqrt(k(M-k+1)); all other levels pin to their diagonal values.
struct BlockadeSpectrum {
  Eigen::VectorXd shifted;     // lambda_m - U * diag_m, paired by index m
  double resonant_gap = 0.0;   // lambda_{k-1} - lambda_k (paired)
  double target_gap = 0.0;     // 2 J M sqrt(k(M-k+1))
  double off_pair_max = 0.0;   // max |shifted_m| over m != k-1, k
  double pair_overlap_defect = 0.0;  // 1 - |<w, (e_{k-1} +/- e_k)/sqrt2>|^2
};

BlockadeSpectrum blockade_limit_spectrum(int m, int k, double j, double u);

}  // namespace bosecone
