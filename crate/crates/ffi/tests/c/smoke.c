#include <stdio.h>
#include <string.h>
#include "thdkit.h"

int main(void) {
    double xs[3] = {0.0, 1.0, 3.0};
    ThdkitCloud *cloud = NULL;
    if (thdkit_cloud_from_points(xs, 3, 1, &cloud) != THDKIT_STATUS_OK) return 1;
    ThdkitThd *thd = NULL;
    if (thdkit_linkage(cloud, THDKIT_LINKAGE_SINGLE, &thd) != THDKIT_STATUS_OK) return 2;
    char *newick = NULL;
    if (thdkit_thd_to_newick(thd, &newick) != THDKIT_STATUS_OK) return 3;
    int ok = strcmp(newick, "((0:1,1:1):1,2:2);") == 0;
    printf("%s\n", newick);
    thdkit_string_free(newick);
    thdkit_thd_free(thd);
    if (thdkit_linkage(NULL, THDKIT_LINKAGE_SINGLE, &thd) != THDKIT_STATUS_NULL_POINTER) return 4;
    if (thdkit_last_error() == NULL) return 5;
    thdkit_cloud_free(cloud);
    return ok ? 0 : 6;
}
