#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "rmt/platform.hpp"

int main(int argc, char** argv) {
    rmt::ensure_reliable_blas(argc, argv);
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
