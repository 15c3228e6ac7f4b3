#ifndef MVSKIP_H
#define MVSKIP_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum MvskipStatus {
  MVSKIP_STATUS_OK = 0,
  /**
   * The key is absent. Not an error.
   */
  MVSKIP_STATUS_NOT_FOUND = 1,
  /**
   * A required pointer was null.
   */
  MVSKIP_STATUS_NULL_ARGUMENT = -1,
  /**
   * The snapshot is older than the collection horizon.
   */
  MVSKIP_STATUS_STALE_SNAPSHOT = -2,
  /**
   * The snapshot handle was released.
   */
  MVSKIP_STATUS_USE_AFTER_UNREGISTER = -3,
  /**
   * Scan start is above the scan end.
   */
  MVSKIP_STATUS_INVALID_RANGE = -4,
  MVSKIP_STATUS_EMPTY_BATCH = -5,
  /**
   * Too many entries for one revision or one batch.
   */
  MVSKIP_STATUS_CAPACITY_EXCEEDED = -6,
  /**
   * The output buffer is too small; the needed size was written.
   */
  MVSKIP_STATUS_BUFFER_TOO_SMALL = -7,
  /**
   * An internal panic was caught.
   */
  MVSKIP_STATUS_INTERNAL = -8,
} MvskipStatus;

/**
 * Operations collected for one atomic update.
 */
typedef struct MvskipBatch MvskipBatch;

/**
 * An index. Safe to share between threads.
 */
typedef struct MvskipIndex MvskipIndex;

/**
 * A registered snapshot. Use from one thread at a time.
 */
typedef struct MvskipSnapshot MvskipSnapshot;

/**
 * Called once per scanned entry. Return `false` to stop the scan.
 */
typedef bool (*MvskipScanFn)(void *ctx,
                             const uint8_t *key,
                             size_t key_len,
                             const uint8_t *value,
                             size_t value_len);

/**
 * Static description of a status. Never null.
 */
const char *mvskip_status_str(enum MvskipStatus status);

/**
 * A new empty index with adaptive node sizes.
 */
struct MvskipIndex *mvskip_index_new(void);

/**
 * Free an index. Null is ignored. No other call on it may be running.
 *
 * # Safety
 * `index` is null or came from [`mvskip_index_new`] and was not freed.
 */
void mvskip_index_free(struct MvskipIndex *index);

/**
 * Insert or overwrite a key.
 *
 * # Safety
 * `index` is live; `key` and `value` point to at least their lengths.
 */
enum MvskipStatus mvskip_put(const struct MvskipIndex *index,
                             const uint8_t *key,
                             size_t key_len,
                             const uint8_t *value,
                             size_t value_len);

/**
 * Remove a key. Removing an absent key succeeds.
 *
 * # Safety
 * As for [`mvskip_put`].
 */
enum MvskipStatus mvskip_remove(const struct MvskipIndex *index,
                                const uint8_t *key,
                                size_t key_len);

/**
 * Latest value of a key, copied into `out`. `*out_len` receives the value
 * length, also when the buffer is too small.
 *
 * # Safety
 * `index` is live, `key` covers `key_len` bytes, `out` covers `out_cap`
 * bytes and `out_len` is writable.
 */
enum MvskipStatus mvskip_get(const struct MvskipIndex *index,
                             const uint8_t *key,
                             size_t key_len,
                             uint8_t *out,
                             size_t out_cap,
                             size_t *out_len);

/**
 * Register a snapshot of the current state.
 *
 * # Safety
 * `index` is live.
 */
struct MvskipSnapshot *mvskip_snapshot_new(const struct MvskipIndex *index);

/**
 * Move a snapshot to the current state.
 *
 * # Safety
 * `snapshot` is live and not used concurrently.
 */
enum MvskipStatus mvskip_snapshot_refresh(struct MvskipSnapshot *snapshot);

/**
 * Release a snapshot. Null is ignored.
 *
 * # Safety
 * `snapshot` is null or live; it may outlive its index.
 */
void mvskip_snapshot_free(struct MvskipSnapshot *snapshot);

/**
 * Value of a key in a snapshot. Output as for [`mvskip_get`].
 *
 * # Safety
 * As for [`mvskip_get`]; `snapshot` is live and registered on `index`.
 */
enum MvskipStatus mvskip_get_at(const struct MvskipIndex *index,
                                const struct MvskipSnapshot *snapshot,
                                const uint8_t *key,
                                size_t key_len,
                                uint8_t *out,
                                size_t out_cap,
                                size_t *out_len);

/**
 * Visit entries with `from <= key < to` in key order. A null `to` scans to
 * the end. A null `snapshot` reads the current state.
 *
 * The pointers passed to `f` are valid only during the callback.
 *
 * # Safety
 * Handles are live, bounds cover their lengths, and `f` is safe to call
 * with `ctx`.
 */
enum MvskipStatus mvskip_scan(const struct MvskipIndex *index,
                              const struct MvskipSnapshot *snapshot,
                              const uint8_t *from,
                              size_t from_len,
                              const uint8_t *to,
                              size_t to_len,
                              MvskipScanFn f,
                              void *ctx);

/**
 * A new empty batch.
 */
struct MvskipBatch *mvskip_batch_new(void);

/**
 * Free a batch. Null is ignored.
 *
 * # Safety
 * `batch` is null or live.
 */
void mvskip_batch_free(struct MvskipBatch *batch);

/**
 * Add a put to the batch. A later operation on the same key replaces it.
 *
 * # Safety
 * `batch` is live; `key` and `value` cover their lengths.
 */
enum MvskipStatus mvskip_batch_put(struct MvskipBatch *batch,
                                   const uint8_t *key,
                                   size_t key_len,
                                   const uint8_t *value,
                                   size_t value_len);

/**
 * Add a remove to the batch.
 *
 * # Safety
 * `batch` is live; `key` covers `key_len` bytes.
 */
enum MvskipStatus mvskip_batch_remove(struct MvskipBatch *batch,
                                      const uint8_t *key,
                                      size_t key_len);

/**
 * Number of distinct keys in the batch.
 *
 * # Safety
 * `batch` is null or live.
 */
size_t mvskip_batch_len(const struct MvskipBatch *batch);

/**
 * Apply every operation of the batch atomically. The batch is left empty
 * and may be reused.
 *
 * # Safety
 * `index` and `batch` are live.
 */
enum MvskipStatus mvskip_batch_apply(const struct MvskipIndex *index, struct MvskipBatch *batch);

#endif  /* MVSKIP_H */
