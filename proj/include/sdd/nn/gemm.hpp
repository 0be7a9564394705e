#pragma once

#include <Eigen/Core>

namespace sdd::nn {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// C(m,n) = A(m,k) * B(k,n), row-major buffers. accumulate adds into C.
template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate = false) {
  ConstMatMap<T> ma(a, m, k), mb(b, k, n);
  MatMap<T> mc(c, m, n);
  if (accumulate)
    mc.noalias() += ma * mb;
  else
    mc.noalias() = ma * mb;
}

// C(m,n) = A(m,k) * B(n,k)^T
template <typename T>
void gemm_bt(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate = false) {
  ConstMatMap<T> ma(a, m, k), mb(b, n, k);
  MatMap<T> mc(c, m, n);
  if (accumulate)
    mc.noalias() += ma * mb.transpose();
  else
    mc.noalias() = ma * mb.transpose();
}

// C(m,n) = A(k,m)^T * B(k,n)
template <typename T>
void gemm_at(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate = false) {
  ConstMatMap<T> ma(a, k, m), mb(b, k, n);
  MatMap<T> mc(c, m, n);
  if (accumulate)
    mc.noalias() += ma.transpose() * mb;
  else
    mc.noalias() = ma.transpose() * mb;
}

}  // namespace sdd::nn
