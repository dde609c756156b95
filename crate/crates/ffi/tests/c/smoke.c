#include <stdio.h>
#include <stdlib.h>

#include "moltr.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        MoltrStatus s_ = (call);                                           \
        if (s_ != MOLTR_STATUS_OK) {                                       \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, moltr_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    MoltrDataset *ds = NULL;
    MoltrModel *teachers[2] = {NULL, NULL};
    MoltrSoftLabels *soft = NULL;
    MoltrModel *student = NULL;
    const char *gen = "{\"num_queries\": 120, \"m\": 5, \"k\": 2, \"label_rates\": [0.5]}";
    const char *train = "{\"epochs\": 2}";
    const char *distill = "{\"alpha\": 0.2, \"train\": {\"epochs\": 2}}";
    double scores[64];
    size_t n = 0, written = 0;
    char *json = NULL;

    CHECK(moltr_dataset_generate(gen, &ds));
    CHECK(moltr_model_train_teacher(ds, 0, train, &teachers[0]));
    CHECK(moltr_model_train_teacher(ds, 1, train, &teachers[1]));
    CHECK(moltr_soft_labels_fuse((const MoltrModel *const *)teachers, NULL, 2, ds, &soft));
    CHECK(moltr_model_train_student(ds, soft, distill, &student));
    CHECK(moltr_dataset_query_len(ds, 0, &n));
    CHECK(moltr_model_score_query(student, ds, 0, scores, 64, &written));
    if (written != n) {
        return 1;
    }
    CHECK(moltr_model_evaluate_json(student, ds, 10, &json));
    printf("%s\n", json);
    moltr_string_free(json);

    if (moltr_model_score_query(student, ds, 0, scores, 1, &written) != MOLTR_STATUS_BUFFER_TOO_SMALL) {
        return 1;
    }

    moltr_model_free(student);
    moltr_soft_labels_free(soft);
    moltr_model_free(teachers[0]);
    moltr_model_free(teachers[1]);
    moltr_dataset_free(ds);
    return 0;
}
