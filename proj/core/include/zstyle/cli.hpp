#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zstyle::cli {

// Flat, fully-parsed run description. One process executes one command.
struct RunConfig {
    std::string command;

    // train-toy-denoiser
    int size = 16;
    int count = 8;
    std::string kinds = "stripes,dots";
    int epochs = 200;
    double lr = 0.005;
    int patch = 4;
    int embed_dim = 32;
    int hidden = 64;
    int num_blocks = 4;

    // shared
    std::uint64_t seed = 1;
    int steps = 30;
    std::string schedule = "linear";  // linear | cosine
    double alpha_min = 0.01;
    std::string weights_path;
    std::string out_path;

    // stylize / diagnose / stylize-video
    std::string content_path;
    std::string style_path;  // comma-separated for one-to-many styles
    std::string mask_path;
    std::string diag_path;
    double lambda = 1.2;
    std::string window = "5:30";
    std::string blocks = "2,3";
    std::string sain = "prose";  // off | printed | prose

    // stylize-video
    std::string frames_dir;
    std::string report_path;
    double guidance_weight = 0.05;
};

struct HelpRequested {
    std::string text;
};

// Parses argv (program name excluded). Throws UsageError on unknown flags or
// out-of-range values and HelpRequested when help is asked for. `--config
// file` loads key=value lines (# comments) with command-line flags winning.
RunConfig parse_args(const std::vector<std::string>& args);

// Executes the command; throws zstyle errors on failure, returns 0 on success.
int run(const RunConfig& cfg);

// run() with errors mapped to exit codes: 1 runtime, 2 usage, 3 I/O.
int run_mapped(const RunConfig& cfg) noexcept;

// Full process entry: parse, dispatch, map exit codes, print errors.
int main_entry(int argc, const char* const* argv) noexcept;

}  // namespace zstyle::cli
