#include <math.h>
#include <stdio.h>

#include "ac_diamond.h"

int main(void) {
    AcdConfig *cfg = acd_config_new_default();
    double phi = 0.0;
    if (acd_total_phase(cfg, &phi) != ACD_STATUS_OK || fabs(phi - 16.908058225964933) > 1e-9) {
        fprintf(stderr, "phase %f\n", phi);
        return 1;
    }
    if (acd_config_set(cfg, "r", "-1") != ACD_STATUS_CONFIG_ERROR || acd_last_error() == NULL) {
        return 2;
    }
    AcdStark stark;
    if (acd_stark(cfg, &stark) != ACD_STATUS_OK || !stark.adiabatic) {
        return 3;
    }
    acd_config_free(cfg);
    printf("ok %s\n", acd_version());
    return 0;
}
