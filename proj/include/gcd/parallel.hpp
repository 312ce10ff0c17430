#pragma once

#include <cstddef>

namespace gcd {

/// Execution policy for the data-parallel kernels. Serial runs the exact same
/// per-index bodies in index order and is kept as the reference the OpenMP
/// path is tested against; every kernel must give bit-identical results under
/// both policies.
enum class Exec { Serial, Parallel };

int max_threads();

/// Calls body(i) for every i in [0, n). Bodies must write only to slots owned
/// by i and must not throw.
template <class Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
  const auto count = static_cast<long long>(n);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
  } else {
    for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
  }
}

/// Same as for_each_index with dynamic scheduling, for triangular or uneven work.
template <class Body>
void for_each_index_dynamic(std::size_t n, Exec exec, Body&& body) {
  const auto count = static_cast<long long>(n);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
  } else {
    for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
  }
}

}  // namespace gcd
