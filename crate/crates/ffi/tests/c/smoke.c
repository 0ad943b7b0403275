#include <stdio.h>
#include <string.h>
#include "cclhmm.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        CclStatus s_ = (call);                                             \
        if (s_ != CCL_STATUS_OK) {                                         \
            const char *m_ = ccl_last_error_message();                     \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, m_ ? m_ : ""); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    CclDataset *ds = NULL;
    CHECK(ccl_dataset_new(3, 2, &ds));
    uint8_t cells[3 * 40];
    for (int seq = 0; seq < 3; seq++) {
        for (int i = 0; i < 3 * 40; i++) {
            int t = i / 3;
            cells[i] = (uint8_t)(((t / 4) + seq + (i % 3 == 2 ? t : 0)) % 2);
        }
        CHECK(ccl_dataset_push_sequence(ds, cells, 40));
    }
    size_t n = 0;
    CHECK(ccl_dataset_num_sequences(ds, &n));
    if (n != 3) return 1;

    CclFitOptions opt = ccl_fit_options_default(CCL_FAMILY_HMM_CL);
    opt.num_states = 2;
    opt.restarts = 2;
    opt.seed = 7;
    CclModel *model = NULL;
    CHECK(ccl_model_fit(ds, &opt, &model));
    double ll = 0.0;
    CHECK(ccl_model_scaled_log_likelihood(model, ds, &ll));
    if (!(ll < 0.0)) return 1;

    CclDataset *sim = NULL;
    CHECK(ccl_model_simulate(model, 2, 10, 1, &sim));
    uint8_t row[30];
    CHECK(ccl_dataset_copy_sequence(sim, 1, row, sizeof row));
    row[4] = CCL_MISSING;
    CHECK(ccl_dataset_push_sequence(sim, row, 10));
    CclDataset *done = NULL;
    CHECK(ccl_model_impute(model, sim, &done));
    uint8_t filled[30];
    CHECK(ccl_dataset_copy_sequence(done, 2, filled, sizeof filled));
    if (filled[4] == CCL_MISSING) return 1;

    if (ccl_model_fit(NULL, &opt, &model) != CCL_STATUS_NULL_POINTER) return 1;
    if (ccl_last_error_message() == NULL) return 1;

    ccl_dataset_free(done);
    ccl_dataset_free(sim);
    ccl_model_free(model);
    ccl_dataset_free(ds);
    printf("ok %.6f\n", ll);
    return 0;
}
