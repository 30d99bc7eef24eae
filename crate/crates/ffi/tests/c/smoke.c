#include <stdio.h>
#include <string.h>

#include "prefattach.h"

#define CHECK(expr)                                                       \
    do {                                                                  \
        if (!(expr)) {                                                    \
            fprintf(stderr, "%s:%d: %s failed: %s\n", __FILE__, __LINE__, \
                    #expr, pa_last_error());                              \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    PaGraph *g = NULL;
    PaTracker *t = NULL;
    CHECK(pa_graph_new(2, -1.5, 42, &g) == PA_STATUS_OK);
    CHECK(pa_graph_grow(g, 20, NULL, 0) == PA_STATUS_OK);
    CHECK(pa_tracker_new(g, 10, 20, &t) == PA_STATUS_OK);
    CHECK(pa_graph_grow(g, 10000, &t, 1) == PA_STATUS_OK);

    uint64_t tracked = 0, truth = 0;
    CHECK(pa_tracker_common_friends(t, &tracked) == PA_STATUS_OK);
    CHECK(pa_graph_common_friends(g, 10, 20, &truth) == PA_STATUS_OK);
    CHECK(tracked == truth);

    PaConstants k;
    CHECK(pa_constants(2, -1.5, &k) == PA_STATUS_OK);
    CHECK(k.regime == PA_REGIME_POWER);

    PaGraph *bad = NULL;
    CHECK(pa_graph_new(2, -3.0, 0, &bad) == PA_STATUS_PARAMETER_DOMAIN);
    CHECK(bad == NULL);
    CHECK(strlen(pa_last_error()) > 0);

    pa_tracker_free(t);
    pa_graph_free(g);
    printf("ok %s %llu\n", pa_version(), (unsigned long long)tracked);
    return 0;
}
