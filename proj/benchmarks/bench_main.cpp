#include <benchmark/benchmark.h>

// The distro benchmark_main archive is LTO-only, so main lives here.
BENCHMARK_MAIN();
