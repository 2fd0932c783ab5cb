#include <cassert>
#include <cstdlib>
#include <cstring>

#include "inkwell/kernels.hpp"

namespace inkwell::kernels {
namespace {

constexpr KernelTable kScalarTable{scalar::dot, scalar::sum_squares, scalar::squared_distance,
                                   scalar::axpy};

#ifdef INKWELL_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2Table{avx2::dot, avx2::sum_squares, avx2::squared_distance,
                                 avx2::axpy};
#endif

bool force_scalar() {
  const char* env = std::getenv("INKWELL_FORCE_SCALAR");
  return env != nullptr && std::strcmp(env, "0") != 0 && *env != '\0';
}

Isa detect_isa() {
  if (force_scalar()) return Isa::Scalar;
  return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

const KernelTable& active_table() {
  static const KernelTable& table = table_for(detect_isa());
  return table;
}

}  // namespace

bool avx2_available() {
#if defined(INKWELL_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table_for(Isa isa) {
#ifdef INKWELL_HAVE_AVX2_KERNELS
  if (isa == Isa::Avx2) return kAvx2Table;
#endif
  (void)isa;
  return kScalarTable;
}

Isa active_isa() {
  static const Isa isa = detect_isa();
  return isa;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      return "avx2";
    case Isa::Scalar:
      break;
  }
  return "scalar";
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active_table().dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) {
  return active_table().sum_squares(a.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active_table().squared_distance(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active_table().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace inkwell::kernels
