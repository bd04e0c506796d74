#include <stdio.h>
#include <string.h>

#include "valvefit.h"

#define CHECK(call)                                                         \
    do {                                                                    \
        VfStatus st_ = (call);                                              \
        if (st_ != VF_STATUS_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_,              \
                    vf_last_error_message());                               \
            return 1;                                                       \
        }                                                                   \
    } while (0)

int main(void) {
    VfSurface *truth = NULL, *tmpl = NULL, *fit = NULL;
    VfCloud *cloud = NULL;
    VfFitOptions opts = vf_fit_options_default();
    VfLoss loss;
    VfSnndSummary rep;

    CHECK(vf_synth_surface(0.4, 3, &truth));
    CHECK(vf_cloud_sample(truth, 200, 5, &cloud));
    CHECK(vf_template_default(&tmpl));
    opts.t_max = 20;
    CHECK(vf_fit(tmpl, cloud, &opts, &fit, &loss));
    CHECK(vf_evaluate(fit, cloud, &rep));
    if (!(rep.mean > 0.0 && rep.mean <= rep.max)) {
        fprintf(stderr, "bad report\n");
        return 1;
    }
    if (vf_template_new(1.0, 0.8, 3, 6, 0, &fit) != VF_STATUS_INVALID_ARGUMENT) {
        fprintf(stderr, "expected an argument error\n");
        return 1;
    }
    printf("ok %s %zu points mean %.3e\n", vf_version(), rep.points, rep.mean);
    vf_surface_free(truth);
    vf_surface_free(tmpl);
    vf_cloud_free(cloud);
    return 0;
}
