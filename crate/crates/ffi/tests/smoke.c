#include <stdio.h>
#include <string.h>
#include "wisp.h"

static int fail(const char *what) {
    const char *msg = wisp_last_error();
    fprintf(stderr, "%s: %s\n", what, msg ? msg : "(no message)");
    return 1;
}

int main(int argc, char **argv) {
    if (argc < 2) return 2;
    WispSimulation *sim = NULL;
    if (wisp_simulate("four_zone", 7, true, &sim) != WISP_STATUS_OK) return fail("simulate");
    if (wisp_simulation_write(sim, argv[1]) != WISP_STATUS_OK) return fail("write");

    char frames_path[4096], layout_path[4096];
    snprintf(frames_path, sizeof frames_path, "%s/frames.jsonl", argv[1]);
    snprintf(layout_path, sizeof layout_path, "%s/layout.tsv", argv[1]);
    WispFrames *frames = NULL;
    if (wisp_frames_load(frames_path, NULL, &frames) != WISP_STATUS_OK) return fail("load");
    if (wisp_frames_len(frames) != wisp_simulation_frame_count(sim)) return 3;

    WispOptions opts = { 10, NULL, layout_path, NULL, NULL };
    WispAnalysis *a = NULL;
    if (wisp_analyze(frames, &opts, &a) != WISP_STATUS_OK) return fail("analyze");
    char *summary = wisp_analysis_summary(a);
    if (!summary || !strstr(summary, "[devices]")) return 4;
    printf("devices=%zu\n", wisp_analysis_device_count(a));
    wisp_string_free(summary);

    WispFrames *none = NULL;
    if (wisp_frames_load("/nonexistent", NULL, &none) != WISP_STATUS_IO || !wisp_last_error()) return 5;

    wisp_analysis_free(a);
    wisp_frames_free(frames);
    wisp_simulation_free(sim);
    return 0;
}
