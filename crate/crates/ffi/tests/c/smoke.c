#include <math.h>
#include <stdio.h>
#include <string.h>

#include "mediator.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "check failed line %d: %s (%s)\n",         \
                    __LINE__, #cond, mm_last_error());                 \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    MmInstance *inst = NULL;
    MmMechanism *m = NULL;
    CHECK(mm_instance_example1(&inst) == MM_OK);
    CHECK(mm_solve(inst, &m) == MM_OK);
    mm_instance_free(inst);

    uint8_t a = 9;
    CHECK(mm_allocation(m, 2.0, 1.0, &a) == MM_OK && a == 1);
    CHECK(mm_allocation(m, 1.0, 2.0, &a) == MM_OK && a == 0);
    CHECK(mm_allocation(m, 3.0, 1.0, &a) == MM_DOMAIN);
    CHECK(strlen(mm_last_error()) > 0);

    double pb = 0, ps = 0;
    CHECK(mm_payments(m, 2.0, 1.5, &pb, &ps) == MM_OK);
    CHECK(fabs(pb - 2.375) < 1e-3 && fabs(ps - 2.25) < 1e-3);

    double direct = 0, virt = 0;
    CHECK(mm_revenues(m, &direct, &virt) == MM_OK);
    CHECK(fabs(direct - (0.5625 * log(1.5) - 0.21875)) < 1e-4);

    char *json = NULL;
    CHECK(mm_audit_json(m, 11, &json) == MM_OK);
    CHECK(strstr(json, "\"grid_n\":11") != NULL);
    mm_string_free(json);

    mm_mechanism_free(m);
    printf("ok %.6f\n", direct);
    return 0;
}
