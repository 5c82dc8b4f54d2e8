#include "kd_tree.hpp"

namespace ust::detail {

// No FMA in either clone: fused products would round differently from a
// plain scalar loop.
__attribute__((target_clones("avx2", "default"))) unsigned block_distances(const double* q,
                                                                              const double* block,
                                                                              std::size_t dim,
                                                                              double bound,
                                                                              double* out) {
  typedef double v4d __attribute__((vector_size(32)));
  v4d acc = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t d = 0; d < dim; ++d) {
    v4d p;
    __builtin_memcpy(&p, block + d * kLanes, sizeof p);
    const v4d t = q[d] - p;
    acc += t * t;
    if ((d & 3) == 3 && acc[0] > bound && acc[1] > bound && acc[2] > bound && acc[3] > bound) {
      return 0;
    }
  }
  __builtin_memcpy(out, &acc, sizeof acc);
  return unsigned{acc[0] <= bound} | unsigned{acc[1] <= bound} << 1 |
         unsigned{acc[2] <= bound} << 2 | unsigned{acc[3] <= bound} << 3;
}

}  // namespace ust::detail
