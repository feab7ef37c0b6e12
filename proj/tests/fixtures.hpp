#pragma once

#include "relu_lab/relu_lab.hpp"

#include <cmath>

namespace fx {

using namespace relu_lab;

// Two points {(1,0), (0.8,0.6)} with teacher e1. Worked by hand:
// second moment [[0.82,0.24],[0.24,0.18]], alpha = (0.9, 0.1).
inline Dataset tiny() {
  Mat P(2, 2);
  P << 1.0, 0.0, 0.8, 0.6;
  return make_dataset(P, Vec::Unit(2, 0));
}

// First centred dataset from `seed` onwards whose points are pairwise
// positively correlated, as the analysis assumes.
inline Dataset valid_centred(int d, int n, std::uint64_t seed) {
  for (;; ++seed) {
    Dataset ds = generate_centred(d, n, seed);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      for (int k = i + 1; k < n && ok; ++k) ok = ds.point(i).dot(ds.point(k)) > 0.0;
    if (ok) return ds;
  }
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace fx
