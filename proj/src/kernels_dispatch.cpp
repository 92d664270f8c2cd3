#include "popgnn/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace popgnn::kernels {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*ewise_mul)(const double*, const double*, double*, std::size_t);
  void (*ewise_add)(const double*, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*matmul)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
};

constexpr Table kScalarTable{scalar::dot,       scalar::sum,       scalar::axpy,
                             scalar::ewise_mul, scalar::ewise_add, scalar::scale,
                             scalar::matmul};

#if defined(POPGNN_HAVE_AVX2)
constexpr Table kAvx2Table{avx2::dot,       avx2::sum,       avx2::axpy,
                           avx2::ewise_mul, avx2::ewise_add, avx2::scale,
                           avx2::matmul};
#endif

bool cpu_has_avx2() {
#if defined(POPGNN_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect_isa() {
  if (const char* env = std::getenv("POPGNN_ISA")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Isa::avx2;
    return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

const Table* table_for(Isa isa) {
#if defined(POPGNN_HAVE_AVX2)
  if (isa == Isa::avx2) return &kAvx2Table;
#else
  (void)isa;
#endif
  return &kScalarTable;
}

Isa g_isa = detect_isa();
const Table* g_table = table_for(g_isa);

}  // namespace

Isa active_isa() { return g_isa; }

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  return cpu_has_avx2();
}

void force_isa(Isa isa) {
  g_isa = isa_supported(isa) ? isa : Isa::scalar;
  g_table = table_for(g_isa);
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

double dot(const double* x, const double* y, std::size_t n) { return g_table->dot(x, y, n); }
double sum(const double* x, std::size_t n) { return g_table->sum(x, n); }
void axpy(double a, const double* x, double* y, std::size_t n) { g_table->axpy(a, x, y, n); }
void ewise_mul(const double* x, const double* y, double* out, std::size_t n) {
  g_table->ewise_mul(x, y, out, n);
}
void ewise_add(const double* x, const double* y, double* out, std::size_t n) {
  g_table->ewise_add(x, y, out, n);
}
void scale(double a, double* x, std::size_t n) { g_table->scale(a, x, n); }
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
  g_table->matmul(a, b, c, m, k, n);
}

}  // namespace popgnn::kernels
