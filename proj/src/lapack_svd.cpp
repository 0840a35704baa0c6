#include "lapack_svd.hpp"

#include <algorithm>
#include <complex>
#include <string>

#include "recoil/errors.hpp"

extern "C" void zgesdd_(const char* jobz, const int* m, const int* n, std::complex<double>* a,
                        const int* lda, double* s, std::complex<double>* u, const int* ldu,
                        std::complex<double>* vt, const int* ldvt, std::complex<double>* work,
                        const int* lwork, double* rwork, int* iwork, int* info);

namespace recoil::detail {

SvdFactors svd(Eigen::MatrixXcd&& a, bool vectors) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  const int k = std::min(m, n);
  const int mx = std::max(m, n);
  const char jobz = vectors ? 'S' : 'N';

  SvdFactors out;
  out.singular_values.resize(static_cast<std::size_t>(k));
  if (vectors) {
    out.u.resize(m, k);
    out.vh.resize(k, n);
  }
  const int ldu = std::max(1, m);
  const int ldvt = std::max(1, k);
  std::complex<double> dummy{};
  std::complex<double>* u = vectors ? out.u.data() : &dummy;
  std::complex<double>* vt = vectors ? out.vh.data() : &dummy;

  const std::size_t lrwork = vectors
      ? static_cast<std::size_t>(k) * std::max(5 * k + 7, 2 * mx + 2 * k + 1)
      : static_cast<std::size_t>(7 * k);
  std::vector<double> rwork(std::max<std::size_t>(lrwork, 1));
  std::vector<int> iwork(static_cast<std::size_t>(8 * k));

  int info = 0;
  int lwork = -1;
  std::complex<double> query;
  zgesdd_(&jobz, &m, &n, a.data(), &m, out.singular_values.data(), u, &ldu, vt, &ldvt, &query,
          &lwork, rwork.data(), iwork.data(), &info);
  if (info != 0) throw DegeneracyError("zgesdd workspace query failed, info = " + std::to_string(info));
  lwork = static_cast<int>(query.real());
  std::vector<std::complex<double>> work(static_cast<std::size_t>(std::max(lwork, 1)));
  zgesdd_(&jobz, &m, &n, a.data(), &m, out.singular_values.data(), u, &ldu, vt, &ldvt,
          work.data(), &lwork, rwork.data(), iwork.data(), &info);
  if (info != 0) throw DegeneracyError("SVD failed to converge, zgesdd info = " + std::to_string(info));
  return out;
}

}  // namespace recoil::detail
