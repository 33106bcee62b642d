#pragma once

namespace risekit::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitTransport = 3;
inline constexpr int kExitData = 4;

int Run(int argc, char** argv);

}  // namespace risekit::cli
