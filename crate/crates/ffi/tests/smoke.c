#include <math.h>
#include <stdio.h>

#include "lzforge.h"

int main(void) {
    double p = 0.0;
    if (lz_landau_zener_probability(1.0, 10.0, &p) != LZ_STATUS_OK || fabs(p - 0.14536400084676657) > 1e-15) {
        fprintf(stderr, "lz probability %.17g\n", p);
        return 1;
    }

    LzPulse *pulse = NULL;
    LzStatus s = lz_design_diabatic_pulse(8.0, 50.0, 2.8, 1.0, &pulse);
    if (s != LZ_STATUS_OK) {
        fprintf(stderr, "%s: %s\n", lz_status_name(s), lz_last_error_message());
        return 1;
    }
    LzUnitary u;
    double e = 1.0;
    if (lz_evolve(pulse, 1.0, -100.0, 100.0, &u) != LZ_STATUS_OK || lz_survival_error(&u, &e) != LZ_STATUS_OK) {
        fprintf(stderr, "%s\n", lz_last_error_message());
        return 1;
    }
    lz_pulse_free(pulse);
    if (!(e < 1e-5)) {
        fprintf(stderr, "survival error %g\n", e);
        return 1;
    }

    s = lz_design_diabatic_pulse(8.0, 50.0, 7.0, 1.0, &pulse);
    if (s != LZ_STATUS_DESIGN || lz_last_error_message() == NULL) {
        fprintf(stderr, "expected a design error, got %d\n", (int)s);
        return 1;
    }
    printf("design ok: survival error %.3e, lzforge %s\n", e, lz_version());
    return 0;
}
