#pragma once

// Data-parallel inner loops used by the residual energy, template averaging
// and nearest-neighbour search. Each kernel has a scalar reference version
// and, on x86-64, an AVX2/FMA version; the active implementation is chosen
// once at first use from the CPU feature flags.
//
// Setting INKWELL_FORCE_SCALAR=1 in the environment pins the scalar kernels.

#include <cstddef>
#include <span>
#include <string_view>

namespace inkwell::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

// True when the AVX2 kernels were compiled in and the CPU supports AVX2+FMA.
bool avx2_available();

const KernelTable& table_for(Isa isa);
Isa active_isa();
std::string_view isa_name(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double sum_squares(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace inkwell::kernels
