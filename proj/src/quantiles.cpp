#include "coxerr/quantiles.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "coxerr/error.hpp"

namespace coxerr {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
}

boost::math::chi_squared chi2(int dof) {
  if (dof < 1) throw Error(ErrorCode::InvalidArgument, "chi-square degrees of freedom must be >= 1");
  return boost::math::chi_squared(dof);
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma shape must be > 0");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(a, x);
}

double chi2_cdf(double x, int dof) {
  const auto law = chi2(dof);
  return x <= 0.0 ? 0.0 : boost::math::cdf(law, x);
}

double chi2_upper_quantile(double alpha, int dof) {
  check_alpha(alpha);
  return boost::math::quantile(boost::math::complement(chi2(dof), alpha));
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }

double normal_upper_quantile(double alpha) {
  check_alpha(alpha);
  return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha));
}

}  // namespace coxerr
