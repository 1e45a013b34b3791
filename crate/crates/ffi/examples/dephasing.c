/* Coherence of a dephasing qubit at λ = 0.2, κ = 1; prints |ρ01(t)|. */
#include <stdio.h>
#include "kinetic.h"

int main(void) {
    const double h[8] = {0.5, 0, 0, 0, 0, 0, -0.5, 0};
    const double t[8] = {1, 0, 0, 0, 0, 0, -1, 0};
    const double a[2] = {1, 0}, z[2] = {1, 0};
    const double rho0[8] = {0.5, 0, 0.5, 0, 0.5, 0, 0.5, 0};
    const double times[3] = {0, 1, 2};
    double out[24];
    KnSystem *sys = NULL;
    KnBath *bath = NULL;
    KnGenerator *gen = NULL;
    int rc = 1;

    if (kn_system_new(2, h, 1, t, &sys) != KN_STATUS_OK) goto done;
    if (kn_bath_new(1, -1.0, &bath) != KN_STATUS_OK) goto done;
    if (kn_bath_set(bath, 0, 0, 1, a, z) != KN_STATUS_OK) goto done;
    if (kn_generator_new(sys, bath, KN_PATH_FAST, 2, 0.2, &gen) != KN_STATUS_OK) goto done;
    if (kn_propagate(gen, rho0, 3, times, out, 24) != KN_STATUS_OK) goto done;
    for (int k = 0; k < 3; k++) {
        double re = out[8 * k + 2], im = out[8 * k + 3];
        printf("%g %.12f\n", times[k], re * re + im * im);
    }
    rc = 0;
done:
    if (rc) fprintf(stderr, "kinetic: %s\n", kn_last_error());
    kn_generator_free(gen);
    kn_bath_free(bath);
    kn_system_free(sys);
    return rc;
}
