/* Ordered-fold GEMM kernels.
 *
 * Every output entry is accumulated over k in ascending order, one rounding
 * per step.  Blocking only changes when C is spilled to memory, never the
 * order of the fold, so results are independent of the block sizes.
 *
 * Must be compiled with -ffp-contract=off: the Kahan kernel and the scalar
 * paths rely on every operation being rounded separately.
 */
#include "fold.h"

#include <math.h>
#include <stdlib.h>
#include <string.h>

#if defined(__AVX512F__)
#include <immintrin.h>
typedef __m512 vf;
#define VL 16
#define VLOAD _mm512_loadu_ps
#define VSTORE _mm512_storeu_ps
#define VBCAST _mm512_set1_ps
#define VFMA _mm512_fmadd_ps
#define VMUL _mm512_mul_ps
#define VADD _mm512_add_ps
#define VSUB _mm512_sub_ps
#define SIMD_NAME "avx512"
#elif defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
typedef __m256 vf;
#define VL 8
#define VLOAD _mm256_loadu_ps
#define VSTORE _mm256_storeu_ps
#define VBCAST _mm256_set1_ps
#define VFMA _mm256_fmadd_ps
#define VMUL _mm256_mul_ps
#define VADD _mm256_add_ps
#define VSUB _mm256_sub_ps
#define SIMD_NAME "avx2"
#else
#define VL 8
#define SIMD_NAME "scalar"
#endif

#define MR 6
#define NR (2 * VL)
#define KC 256
#define MC (MR * 16)
#define NC (NR * 64)

/* ---------------------------------------------------------------- half */

static inline uint16_t f32_to_f16(float f)
{
    uint32_t x, ax, sign;
    memcpy(&x, &f, sizeof x);
    sign = (x >> 16) & 0x8000u;
    ax = x & 0x7fffffffu;
    if (ax > 0x7f800000u)
        return 0x7e00u;
    if (ax >= 0x477ff000u) /* |f| >= 65520 */
        return (uint16_t)(sign | 0x7c00u);
    if (ax >= 0x38800000u) { /* normal half range, |f| >= 2^-14 */
        uint32_t h = ((((ax >> 23) - 112u) << 10) | ((ax >> 13) & 0x3ffu));
        uint32_t rem = ax & 0x1fffu;
        if (rem > 0x1000u || (rem == 0x1000u && (h & 1u)))
            h++;
        return (uint16_t)(sign | h);
    }
    if (ax <= 0x33000000u) /* |f| <= 2^-25 rounds to zero (tie goes to even 0) */
        return (uint16_t)sign;
    {
        uint32_t mant = (ax & 0x7fffffu) | 0x800000u;
        uint32_t shift = 126u - (ax >> 23);
        uint32_t h = mant >> shift;
        uint32_t rem = mant & ((1u << shift) - 1u);
        uint32_t halfway = 1u << (shift - 1u);
        if (rem > halfway || (rem == halfway && (h & 1u)))
            h++;
        return (uint16_t)(sign | h);
    }
}

static inline float f16_to_f32(uint16_t h)
{
    uint32_t sign = ((uint32_t)h & 0x8000u) << 16;
    uint32_t e = (h >> 10) & 0x1fu;
    uint32_t m = h & 0x3ffu;
    uint32_t x;
    float f;
    if (e == 0) {
        if (m == 0) {
            x = sign;
        } else {
            uint32_t sh = 0;
            while (!(m & 0x400u)) {
                m <<= 1;
                sh++;
            }
            x = sign | ((113u - sh) << 23) | ((m & 0x3ffu) << 13);
        }
    } else if (e == 31) {
        x = m ? 0x7fc00000u : (sign | 0x7f800000u);
    } else {
        x = sign | ((e + 112u) << 23) | (m << 13);
    }
    memcpy(&f, &x, sizeof f);
    return f;
}

void tc_round_half(const float *src, uint16_t *dst, ptrdiff_t n)
{
    for (ptrdiff_t i = 0; i < n; i++)
        dst[i] = f32_to_f16(src[i]);
}

void tc_widen_half(const uint16_t *src, float *dst, ptrdiff_t n)
{
    for (ptrdiff_t i = 0; i < n; i++)
        dst[i] = f16_to_f32(src[i]);
}

const char *tc_simd_name(void) { return SIMD_NAME; }

/* ------------------------------------------------------------- packing */

/* apack[strip][p][r], zero padded to MR rows */
static void pack_a(ptrdiff_t mc, ptrdiff_t kc, const float *a, ptrdiff_t lda, float *apack)
{
    for (ptrdiff_t i0 = 0; i0 < mc; i0 += MR) {
        ptrdiff_t mr = mc - i0 < MR ? mc - i0 : MR;
        for (ptrdiff_t p = 0; p < kc; p++) {
            for (ptrdiff_t r = 0; r < mr; r++)
                apack[p * MR + r] = a[(i0 + r) * lda + p];
            for (ptrdiff_t r = mr; r < MR; r++)
                apack[p * MR + r] = 0.0f;
        }
        apack += MR * kc;
    }
}

/* bpack[strip][p][j], zero padded to NR columns */
static void pack_b(ptrdiff_t kc, ptrdiff_t nc, const float *b, ptrdiff_t ldb, float *bpack)
{
    for (ptrdiff_t j0 = 0; j0 < nc; j0 += NR) {
        ptrdiff_t nr = nc - j0 < NR ? nc - j0 : NR;
        for (ptrdiff_t p = 0; p < kc; p++) {
            const float *row = b + p * ldb + j0;
            for (ptrdiff_t j = 0; j < nr; j++)
                bpack[p * NR + j] = row[j];
            for (ptrdiff_t j = nr; j < NR; j++)
                bpack[p * NR + j] = 0.0f;
        }
        bpack += NR * kc;
    }
}

/* -------------------------------------------------------- microkernels */


#if VL == 16 || (defined(__AVX2__) && defined(__FMA__))

#define ROW_FMA(r)                                  \
    do {                                            \
        vf ar = VBCAST(a[r]);                       \
        c##r##0 = VFMA(ar, b0, c##r##0);            \
        c##r##1 = VFMA(ar, b1, c##r##1);            \
    } while (0)

static void ukr_fma(ptrdiff_t kc, const float *a, const float *b, float *c, ptrdiff_t ldc)
{
    vf c00 = VLOAD(c), c01 = VLOAD(c + VL);
    vf c10 = VLOAD(c + ldc), c11 = VLOAD(c + ldc + VL);
    vf c20 = VLOAD(c + 2 * ldc), c21 = VLOAD(c + 2 * ldc + VL);
    vf c30 = VLOAD(c + 3 * ldc), c31 = VLOAD(c + 3 * ldc + VL);
    vf c40 = VLOAD(c + 4 * ldc), c41 = VLOAD(c + 4 * ldc + VL);
    vf c50 = VLOAD(c + 5 * ldc), c51 = VLOAD(c + 5 * ldc + VL);
    for (ptrdiff_t p = 0; p < kc; p++) {
        vf b0 = VLOAD(b), b1 = VLOAD(b + VL);
        ROW_FMA(0);
        ROW_FMA(1);
        ROW_FMA(2);
        ROW_FMA(3);
        ROW_FMA(4);
        ROW_FMA(5);
        a += MR;
        b += NR;
    }
    VSTORE(c, c00);
    VSTORE(c + VL, c01);
    VSTORE(c + ldc, c10);
    VSTORE(c + ldc + VL, c11);
    VSTORE(c + 2 * ldc, c20);
    VSTORE(c + 2 * ldc + VL, c21);
    VSTORE(c + 3 * ldc, c30);
    VSTORE(c + 3 * ldc + VL, c31);
    VSTORE(c + 4 * ldc, c40);
    VSTORE(c + 4 * ldc + VL, c41);
    VSTORE(c + 5 * ldc, c50);
    VSTORE(c + 5 * ldc + VL, c51);
}

#define KAHAN_STEP(s, e, prod)          \
    do {                                \
        vf y_ = VSUB(prod, e);          \
        vf t_ = VADD(s, y_);            \
        e = VSUB(VSUB(t_, s), y_);      \
        s = t_;                         \
    } while (0)

/* Three rows per pass keeps twelve independent compensation chains in flight. */
static void ukr_kahan(ptrdiff_t kc, const float *a, const float *b, float *c, ptrdiff_t ldc,
                      float *e, ptrdiff_t lde)
{
    for (ptrdiff_t r = 0; r < MR; r += 3) {
        float *c0 = c + r * ldc, *c1 = c0 + ldc, *c2 = c1 + ldc;
        float *e0 = e + r * lde, *e1 = e0 + lde, *e2 = e1 + lde;
        vf s00 = VLOAD(c0), s01 = VLOAD(c0 + VL), s10 = VLOAD(c1), s11 = VLOAD(c1 + VL);
        vf s20 = VLOAD(c2), s21 = VLOAD(c2 + VL);
        vf q00 = VLOAD(e0), q01 = VLOAD(e0 + VL), q10 = VLOAD(e1), q11 = VLOAD(e1 + VL);
        vf q20 = VLOAD(e2), q21 = VLOAD(e2 + VL);
        const float *ap = a + r, *bp = b;
        for (ptrdiff_t p = 0; p < kc; p++) {
            vf b0 = VLOAD(bp), b1 = VLOAD(bp + VL);
            vf a0 = VBCAST(ap[0]), a1 = VBCAST(ap[1]), a2 = VBCAST(ap[2]);
            KAHAN_STEP(s00, q00, VMUL(a0, b0));
            KAHAN_STEP(s01, q01, VMUL(a0, b1));
            KAHAN_STEP(s10, q10, VMUL(a1, b0));
            KAHAN_STEP(s11, q11, VMUL(a1, b1));
            KAHAN_STEP(s20, q20, VMUL(a2, b0));
            KAHAN_STEP(s21, q21, VMUL(a2, b1));
            ap += MR;
            bp += NR;
        }
        VSTORE(c0, s00);
        VSTORE(c0 + VL, s01);
        VSTORE(c1, s10);
        VSTORE(c1 + VL, s11);
        VSTORE(c2, s20);
        VSTORE(c2 + VL, s21);
        VSTORE(e0, q00);
        VSTORE(e0 + VL, q01);
        VSTORE(e1, q10);
        VSTORE(e1 + VL, q11);
        VSTORE(e2, q20);
        VSTORE(e2 + VL, q21);
    }
}

#else

static void ukr_fma(ptrdiff_t kc, const float *a, const float *b, float *c, ptrdiff_t ldc)
{
    float acc[MR][NR];
    for (int r = 0; r < MR; r++)
        for (int j = 0; j < NR; j++)
            acc[r][j] = c[r * ldc + j];
    for (ptrdiff_t p = 0; p < kc; p++) {
        for (int r = 0; r < MR; r++) {
            float ar = a[p * MR + r];
            for (int j = 0; j < NR; j++)
                acc[r][j] = fmaf(ar, b[p * NR + j], acc[r][j]);
        }
    }
    for (int r = 0; r < MR; r++)
        for (int j = 0; j < NR; j++)
            c[r * ldc + j] = acc[r][j];
}

static void ukr_kahan(ptrdiff_t kc, const float *a, const float *b, float *c, ptrdiff_t ldc,
                      float *e, ptrdiff_t lde)
{
    for (int r = 0; r < MR; r++) {
        for (int j = 0; j < NR; j++) {
            float s = c[r * ldc + j], comp = e[r * lde + j];
            for (ptrdiff_t p = 0; p < kc; p++) {
                float y = a[p * MR + r] * b[p * NR + j] - comp;
                float t = s + y;
                comp = (t - s) - y;
                s = t;
            }
            c[r * ldc + j] = s;
            e[r * lde + j] = comp;
        }
    }
}

#endif

/* ------------------------------------------------------------- driver */

static void *aligned_buf(size_t nfloats)
{
    size_t bytes = (nfloats * sizeof(float) + 63) & ~(size_t)63;
    return aligned_alloc(64, bytes);
}

int tc_gemm_fold(ptrdiff_t m, ptrdiff_t n, ptrdiff_t k,
                 const float *a, ptrdiff_t lda,
                 const float *b, ptrdiff_t ldb,
                 float *c, ptrdiff_t ldc, int mode)
{
    const ptrdiff_t kblock = mode == TC_FOLD_HALF_ACC ? 16 : KC;
    float *apack, *bpack, *comp = NULL;
    float ctile[MR * NR], etile[MR * NR];

    if (m <= 0 || n <= 0 || k <= 0)
        return 0;
    apack = aligned_buf((size_t)MC * KC);
    bpack = aligned_buf((size_t)KC * NC);
    if (mode == TC_FOLD_KAHAN)
        comp = calloc((size_t)m * (size_t)n, sizeof(float));
    if (!apack || !bpack || (mode == TC_FOLD_KAHAN && !comp)) {
        free(apack);
        free(bpack);
        free(comp);
        return -1;
    }

    for (ptrdiff_t jc = 0; jc < n; jc += NC) {
        ptrdiff_t nc = n - jc < NC ? n - jc : NC;
        for (ptrdiff_t pc = 0; pc < k; pc += kblock) {
            ptrdiff_t kc = k - pc < kblock ? k - pc : kblock;
            pack_b(kc, nc, b + pc * ldb + jc, ldb, bpack);
            for (ptrdiff_t ic = 0; ic < m; ic += MC) {
                ptrdiff_t mc = m - ic < MC ? m - ic : MC;
                pack_a(mc, kc, a + ic * lda + pc, lda, apack);
                for (ptrdiff_t jr = 0; jr < nc; jr += NR) {
                    ptrdiff_t nr = nc - jr < NR ? nc - jr : NR;
                    const float *bp = bpack + (jr / NR) * NR * kc;
                    for (ptrdiff_t ir = 0; ir < mc; ir += MR) {
                        ptrdiff_t mr = mc - ir < MR ? mc - ir : MR;
                        const float *ap = apack + (ir / MR) * MR * kc;
                        float *cp = c + (ic + ir) * ldc + jc + jr;
                        float *ep = comp ? comp + (ic + ir) * n + jc + jr : NULL;
                        if (mr == MR && nr == NR) {
                            if (comp)
                                ukr_kahan(kc, ap, bp, cp, ldc, ep, n);
                            else
                                ukr_fma(kc, ap, bp, cp, ldc);
                            continue;
                        }
                        memset(ctile, 0, sizeof ctile);
                        memset(etile, 0, sizeof etile);
                        for (ptrdiff_t r = 0; r < mr; r++) {
                            memcpy(ctile + r * NR, cp + r * ldc, (size_t)nr * sizeof(float));
                            if (comp)
                                memcpy(etile + r * NR, ep + r * n, (size_t)nr * sizeof(float));
                        }
                        if (comp)
                            ukr_kahan(kc, ap, bp, ctile, NR, etile, NR);
                        else
                            ukr_fma(kc, ap, bp, ctile, NR);
                        for (ptrdiff_t r = 0; r < mr; r++) {
                            memcpy(cp + r * ldc, ctile + r * NR, (size_t)nr * sizeof(float));
                            if (comp)
                                memcpy(ep + r * n, etile + r * NR, (size_t)nr * sizeof(float));
                        }
                    }
                }
            }
            if (mode == TC_FOLD_HALF_ACC) {
                for (ptrdiff_t i = 0; i < m; i++) {
                    float *row = c + i * ldc + jc;
                    for (ptrdiff_t j = 0; j < nc; j++)
                        row[j] = f16_to_f32(f32_to_f16(row[j]));
                }
            }
        }
    }
    free(apack);
    free(bpack);
    free(comp);
    return 0;
}

void tc_gemm_batched16(ptrdiff_t count, const float *a, const float *b, float *c)
{
    for (ptrdiff_t t = 0; t < count; t++) {
        const float *at = a + t * 256, *bt = b + t * 256;
        float *ct = c + t * 256;
        for (int i = 0; i < 16; i++) {
            float acc[16];
            for (int j = 0; j < 16; j++)
                acc[j] = ct[i * 16 + j];
            for (int p = 0; p < 16; p++) {
                float ap = at[i * 16 + p];
                for (int j = 0; j < 16; j++)
                    acc[j] = fmaf(ap, bt[p * 16 + j], acc[j]);
            }
            for (int j = 0; j < 16; j++)
                ct[i * 16 + j] = acc[j];
        }
    }
}
