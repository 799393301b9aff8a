#include "coord/post_process.hpp"

#include <algorithm>

#include "coord/errors.hpp"

namespace coord::agent {

sim::SchedulingTensor post_process(const sim::ActionTensor& raw,
                                   const topo::ActionMask& mask, double threshold) {
  if (raw.n != mask.n || raw.v_max != mask.v_max)
    throw ContractViolation("action and mask shapes disagree");
  if (threshold <= 0.0 || threshold > 1.0)
    throw ContractViolation("scheduling threshold must be in (0, 1]");

  const int v = mask.num_nodes;
  sim::SchedulingTensor out = sim::SchedulingTensor::zeros(raw.n, raw.v_max);

  std::vector<double> work(static_cast<size_t>(v));
  std::vector<int> survivors;
  for (int i = 0; i < raw.n; ++i) {
    for (int j = 0; j < v; ++j) {
      for (int k = 0; k < v; ++k) work[static_cast<size_t>(k)] = raw.at(i, j, k);

      survivors.clear();
      for (int k = 0; k < v; ++k)
        if (work[static_cast<size_t>(k)] >= threshold) survivors.push_back(k);

      // renormalize, evicting the smallest entry while any falls back below
      // the threshold (large survivor mass shrinks everything when divided out)
      bool done = false;
      while (!done && !survivors.empty()) {
        double sum = 0.0;
        for (int k : survivors) sum += work[static_cast<size_t>(k)];
        int worst = -1;
        double worst_val = 0.0;
        for (int k : survivors) {
          const double val = work[static_cast<size_t>(k)] / sum;
          if (val < threshold && (worst == -1 || val < worst_val)) {
            worst_val = val;  // strict compare keeps the lowest id on ties
            worst = k;
          }
        }
        if (worst == -1) {
          for (int k : survivors) out.at(i, j, k) = work[static_cast<size_t>(k)] / sum;
          done = true;
        } else {
          survivors.erase(std::find(survivors.begin(), survivors.end(), worst));
        }
      }
      if (!done) {
        // no survivor: one-hot at the raw argmax, lowest id on ties
        int best = 0;
        for (int k = 1; k < v; ++k)
          if (work[static_cast<size_t>(k)] > work[static_cast<size_t>(best)]) best = k;
        out.at(i, j, best) = 1.0;
      }
    }
  }
  return out;
}

}  // namespace coord::agent
