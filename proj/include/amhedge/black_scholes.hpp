// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace amh::bs {

struct Inputs {
  double s;
  double k;
  double r;
  double sigma;
  double tau;
};

/// Standard normal CDF, 0.5 * erfc(-x / sqrt(2)).
double norm_cdf(double x);

/// European put Delta N(d1) - 1. At tau <= 0 the limit is used:
/// -1 below the strike, 0 above, -0.5 exactly at the money.
double put_delta(const Inputs& in);

/// European put price; intrinsic value at tau == 0.
double put_price(const Inputs& in);

}  // namespace amh::bs
