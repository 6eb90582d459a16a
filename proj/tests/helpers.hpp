#pragma once

#include <doctest.h>

#include "cmbf/model.hpp"
#include "cmbf/scenario.hpp"

namespace cmbf::test {

// identical covariance R for every (j,i,k) link
inline SystemModel uniform_model(int I, int K, const CMat& R, double gamma,
                                 double sigma2) {
  std::vector<CMat> covs(static_cast<std::size_t>(I) * I * K, R);
  return SystemModel(I, K, static_cast<int>(R.rows()), std::move(covs),
                     Eigen::ArrayXXd::Constant(I, K, gamma),
                     Eigen::ArrayXXd::Constant(I, K, sigma2));
}

inline SampleDatabase single_sample_db(int num_bs, double a, double b,
                                       double e) {
  SampleDatabase db;
  db.num_bs = num_bs;
  RandomState s;
  s.bs.assign(num_bs, BsState{a, b, e});
  db.samples.push_back(std::move(s));
  db.max_buy_price = a;
  return db;
}

}  // namespace cmbf::test
