#ifndef TCEMU_FOLD_H
#define TCEMU_FOLD_H

#include <stddef.h>
#include <stdint.h>

#define TC_FOLD_FMA 0
#define TC_FOLD_KAHAN 1
#define TC_FOLD_HALF_ACC 2

/* C[i][j] <- fold over k ascending of fl32(C[i][j] + A[i][k] * B[k][j]).
 * Returns 0 on success, -1 on allocation failure. */
int tc_gemm_fold(ptrdiff_t m, ptrdiff_t n, ptrdiff_t k,
                 const float *a, ptrdiff_t lda,
                 const float *b, ptrdiff_t ldb,
                 float *c, ptrdiff_t ldc, int mode);

/* Same fold for `count` independent 16x16x16 problems stored contiguously. */
void tc_gemm_batched16(ptrdiff_t count, const float *a, const float *b, float *c);

void tc_round_half(const float *src, uint16_t *dst, ptrdiff_t n);
void tc_widen_half(const uint16_t *src, float *dst, ptrdiff_t n);

const char *tc_simd_name(void);

#endif
