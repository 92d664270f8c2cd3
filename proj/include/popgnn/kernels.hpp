#pragma once

#include <cstddef>
#include <string_view>

// Dense f64 inner-loop kernels with runtime ISA dispatch.
//
// Scalar reference implementations always exist and define the semantics.
// AVX2 variants are compiled on x86-64 and selected at startup when the CPU
// supports AVX2+FMA. The environment variable POPGNN_ISA=scalar|avx2
// overrides the selection (an unsupported request falls back to scalar).
// Within one process the active ISA is fixed unless force_isa() is called,
// so repeated runs on the same machine are bit-reproducible.

namespace popgnn::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
bool isa_supported(Isa isa);
void force_isa(Isa isa);  // test hook; unsupported requests select scalar
std::string_view isa_name(Isa isa);

double dot(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);  // y += a*x
void ewise_mul(const double* x, const double* y, double* out, std::size_t n);
void ewise_add(const double* x, const double* y, double* out, std::size_t n);
void scale(double a, double* x, std::size_t n);

// c = a*b, all row-major: a is m x k, b is k x n, c is m x n.
// c must not alias a or b.
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void ewise_mul(const double* x, const double* y, double* out, std::size_t n);
void ewise_add(const double* x, const double* y, double* out, std::size_t n);
void scale(double a, double* x, std::size_t n);
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);
}  // namespace scalar

#if defined(POPGNN_HAVE_AVX2)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void ewise_mul(const double* x, const double* y, double* out, std::size_t n);
void ewise_add(const double* x, const double* y, double* out, std::size_t n);
void scale(double a, double* x, std::size_t n);
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);
}  // namespace avx2
#endif

}  // namespace popgnn::kernels
