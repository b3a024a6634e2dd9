#include "rmt/platform.hpp"

#include <cstdlib>
#include <cstring>
#include <vector>

#include <unistd.h>

extern "C" char* openblas_get_corename(void);

namespace rmt {

const char* blas_core_name() { return openblas_get_corename(); }

void ensure_reliable_blas(int argc, char** argv) {
    if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
    const char* core = blas_core_name();
    const bool affected = core && (std::strcmp(core, "SkylakeX") == 0 ||
                                   std::strcmp(core, "Cooperlake") == 0 ||
                                   std::strcmp(core, "SapphireRapids") == 0);
    if (!affected) return;
    ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
    std::vector<char*> args(argv, argv + argc);
    args.push_back(nullptr);
    ::execv("/proc/self/exe", args.data());
    // exec failed: carry on with the detected kernel
}

}  // namespace rmt
