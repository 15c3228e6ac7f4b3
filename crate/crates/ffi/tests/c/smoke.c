#include <stdio.h>
#include <string.h>

#include "mvskip.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                  \
        }                                                              \
    } while (0)

static bool count(void *ctx, const uint8_t *k, size_t kl, const uint8_t *v, size_t vl) {
    (void)k;
    (void)kl;
    (void)v;
    (void)vl;
    ++*(size_t *)ctx;
    return true;
}

int main(void) {
    MvskipIndex *ix = mvskip_index_new();
    CHECK(ix != NULL);
    char key[16];
    for (int i = 0; i < 1000; i++) {
        int n = snprintf(key, sizeof key, "k%04d", i);
        CHECK(mvskip_put(ix, (const uint8_t *)key, n, (const uint8_t *)key, n) == MVSKIP_STATUS_OK);
    }
    MvskipSnapshot *snap = mvskip_snapshot_new(ix);
    CHECK(snap != NULL);

    MvskipBatch *b = mvskip_batch_new();
    for (int i = 0; i < 1000; i += 2) {
        int n = snprintf(key, sizeof key, "k%04d", i);
        CHECK(mvskip_batch_remove(b, (const uint8_t *)key, n) == MVSKIP_STATUS_OK);
    }
    CHECK(mvskip_batch_apply(ix, b) == MVSKIP_STATUS_OK);
    CHECK(mvskip_batch_apply(ix, b) == MVSKIP_STATUS_EMPTY_BATCH);
    mvskip_batch_free(b);

    size_t now = 0, then = 0;
    CHECK(mvskip_scan(ix, NULL, NULL, 0, NULL, 0, count, &now) == MVSKIP_STATUS_OK);
    CHECK(mvskip_scan(ix, snap, NULL, 0, NULL, 0, count, &then) == MVSKIP_STATUS_OK);
    CHECK(now == 500);
    CHECK(then == 1000);

    uint8_t out[2];
    size_t len = 0;
    CHECK(mvskip_get_at(ix, snap, (const uint8_t *)"k0000", 5, out, sizeof out, &len) ==
          MVSKIP_STATUS_BUFFER_TOO_SMALL);
    CHECK(len == 5);
    uint8_t big[8];
    CHECK(mvskip_get_at(ix, snap, (const uint8_t *)"k0000", 5, big, sizeof big, &len) == MVSKIP_STATUS_OK);
    CHECK(memcmp(big, "k0000", 5) == 0);
    CHECK(mvskip_get(ix, (const uint8_t *)"k0000", 5, big, sizeof big, &len) == MVSKIP_STATUS_NOT_FOUND);
    CHECK(mvskip_put(NULL, NULL, 0, NULL, 0) == MVSKIP_STATUS_NULL_ARGUMENT);
    CHECK(strcmp(mvskip_status_str(MVSKIP_STATUS_NOT_FOUND), "not found") == 0);

    mvskip_snapshot_free(snap);
    mvskip_index_free(ix);
    puts("ok");
    return 0;
}
