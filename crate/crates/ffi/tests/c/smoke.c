#include <stdio.h>
#include <string.h>
#include "core_kgt.h"

int main(int argc, char **argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: smoke DATA_DIR CHECKPOINT\n");
        return 2;
    }
    CoreKgtDataset *ds = NULL;
    CoreKgtModel *model = NULL;
    if (core_kgt_dataset_load(argv[1], &ds) != CORE_KGT_STATUS_OK) {
        fprintf(stderr, "dataset: %s\n", core_kgt_last_error());
        return 1;
    }
    if (core_kgt_model_load(argv[2], &model) != CORE_KGT_STATUS_OK) {
        fprintf(stderr, "model: %s\n", core_kgt_last_error());
        return 1;
    }
    uint32_t e = 0;
    if (core_kgt_entity_id(ds, "e0", &e) != CORE_KGT_STATUS_OK) return 1;
    uint32_t types[3];
    double scores[3];
    size_t n = 0;
    if (core_kgt_model_predict_top(model, e, 3, types, scores, &n) != CORE_KGT_STATUS_OK) return 1;
    char name[64];
    size_t needed = 0;
    if (core_kgt_type_name(ds, types[0], name, sizeof name, &needed) != CORE_KGT_STATUS_OK) return 1;
    CoreKgtReport rep;
    if (core_kgt_evaluate(model, ds, CORE_KGT_SPLIT_TEST, &rep) != CORE_KGT_STATUS_OK) return 1;
    if (core_kgt_entity_id(ds, "no-such-entity", &e) != CORE_KGT_STATUS_NOT_FOUND) return 1;
    if (core_kgt_last_error() == NULL) return 1;
    printf("top=%s n=%zu mrr=%.6f queries=%llu\n", name, n, rep.mrr, (unsigned long long)rep.n_queries);
    core_kgt_model_free(model);
    core_kgt_dataset_free(ds);
    return 0;
}
