#include "zstyle/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "zstyle/errors.hpp"
#include "zstyle/image_io.hpp"
#include "zstyle/pipeline.hpp"
#include "zstyle/textures.hpp"
#include "zstyle/video.hpp"

namespace zstyle::cli {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Expands `--config file` into per-flag arguments. File lines are key=value
// with # comments; keys already given on the command line are skipped so
// explicit flags win.
std::vector<std::string> apply_config_file(const std::vector<std::string>& args) {
    std::string path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file path");
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (path.empty()) return rest;
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);

    std::set<std::string> given;
    for (const std::string& a : rest)
        if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));

    std::vector<std::string> out;
    if (!rest.empty()) out.push_back(rest.front());  // subcommand stays first
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
        if (key.empty())
            throw UsageError("config file line " + std::to_string(lineno) + " is not key=value");
        if (given.count("--" + key) != 0) continue;
        out.push_back("--" + key);
        out.push_back(trim(line.substr(eq + 1)));
    }
    for (std::size_t i = rest.empty() ? 0 : 1; i < rest.size(); ++i) out.push_back(rest[i]);
    return out;
}

std::pair<int, int> parse_window(const std::string& window) {
    int start = 0, end = 0;
    if (std::sscanf(window.c_str(), "%d:%d", &start, &end) != 2)
        throw UsageError("window must be start:end, got '" + window + "'");
    if (start < 0 || start > end)
        throw UsageError("window must satisfy 0 <= start <= end, got '" + window + "'");
    return {start, end};
}

std::set<int> parse_blocks(const std::string& blocks) {
    std::set<int> out;
    if (blocks.empty()) return out;
    for (const std::string& part : split(blocks, ',')) {
        if (part.empty()) throw UsageError("empty entry in block list '" + blocks + "'");
        try {
            out.insert(std::stoi(part));
        } catch (const std::exception&) {
            throw UsageError("bad block index '" + part + "'");
        }
    }
    return out;
}

SainMode parse_sain(const std::string& sain) {
    if (sain == "off") return SainMode::Off;
    if (sain == "printed") return SainMode::PrintedSign;
    if (sain == "prose") return SainMode::ProseSign;
    throw UsageError("sain mode must be off, printed or prose, got '" + sain + "'");
}

NoiseSchedule schedule_from(const RunConfig& cfg) {
    if (cfg.schedule == "linear")
        return make_schedule(cfg.steps, ScheduleKind::LinearAlpha, cfg.alpha_min);
    if (cfg.schedule == "cosine")
        return make_schedule(cfg.steps, ScheduleKind::Cosine, cfg.alpha_min);
    throw UsageError("schedule must be linear or cosine, got '" + cfg.schedule + "'");
}

InjectionConfig injection_from(const RunConfig& cfg, int patch) {
    InjectionConfig inj;
    inj.lambda = cfg.lambda;
    auto [start, end] = parse_window(cfg.window);
    inj.window_start = start;
    inj.window_end = end;
    inj.blocks = parse_blocks(cfg.blocks);
    inj.sain = parse_sain(cfg.sain);
    if (!cfg.mask_path.empty())
        inj.mask = style_mask_from_image(read_image(cfg.mask_path), patch);
    return inj;
}

std::vector<Tensor> load_styles(const std::string& style_arg) {
    std::vector<Tensor> styles;
    for (const std::string& path : split(style_arg, ',')) {
        if (path.empty()) throw UsageError("empty style path in '" + style_arg + "'");
        styles.push_back(read_image(path));
    }
    return styles;
}

int run_train(const RunConfig& cfg) {
    std::vector<TextureKind> kinds;
    for (const std::string& name : split(cfg.kinds, ','))
        kinds.push_back(texture_kind_from_name(name));
    const auto dataset = make_texture_dataset(kinds, static_cast<std::size_t>(cfg.count),
                                              static_cast<std::size_t>(cfg.size), cfg.seed);
    if (dataset.empty()) throw ConfigError("training dataset is empty (count must be > 0)");

    ToyDenoiserConfig mc;
    mc.patch = cfg.patch;
    mc.embed_dim = cfg.embed_dim;
    mc.hidden = cfg.hidden;
    mc.num_blocks = cfg.num_blocks;
    mc.steps = cfg.steps;
    mc.channels = 1;
    ToyDenoiser model = ToyDenoiser::init(mc, cfg.seed);
    const NoiseSchedule sched = schedule_from(cfg);
    const TrainResult stats = train(model, dataset, sched, cfg.epochs, cfg.lr, cfg.seed);
    save_toy_denoiser(cfg.out_path, model);
    if (!stats.epoch_mse.empty())
        std::printf("trained %d epochs, mse %.6f -> %.6f\n", cfg.epochs, stats.epoch_mse.front(),
                    stats.epoch_mse.back());
    std::printf("wrote %s\n", cfg.out_path.c_str());
    return 0;
}

int run_stylize(const RunConfig& cfg, bool diagnose_only) {
    if (diagnose_only && cfg.diag_path.empty()) throw UsageError("diagnose needs --diag <file>");
    const ToyDenoiser model = load_toy_denoiser(cfg.weights_path);
    const Tensor content = read_image(cfg.content_path);
    const std::vector<Tensor> styles = load_styles(cfg.style_path);
    const NoiseSchedule sched = schedule_from(cfg);
    const InjectionConfig inj = injection_from(cfg, model.cfg.patch);

    const StylizeResult result = stylize(content, styles, model, sched, inj);
    if (!cfg.out_path.empty()) write_image(cfg.out_path, result.image);
    if (!cfg.diag_path.empty()) {
        std::ofstream f(cfg.diag_path);
        if (!f) throw IoError("cannot open for writing: " + cfg.diag_path);
        f << diagnostics_csv(result.diags);
    }
    return 0;
}

std::vector<std::string> list_frame_files(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".ppm" || ext == ".pgm") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .ppm/.pgm frames in " + dir);
    return files;
}

int run_video(const RunConfig& cfg) {
    const ToyDenoiser model = load_toy_denoiser(cfg.weights_path);
    const std::vector<Tensor> style = load_styles(cfg.style_path);
    if (style.size() != 1) throw UsageError("stylize-video takes exactly one style image");
    std::vector<Tensor> frames;
    for (const std::string& path : list_frame_files(cfg.frames_dir))
        frames.push_back(read_image(path));
    const NoiseSchedule sched = schedule_from(cfg);
    const InjectionConfig inj = injection_from(cfg, model.cfg.patch);
    GuidanceConfig g;
    g.weight = cfg.guidance_weight;

    const VideoResult result = stylize_video(frames, style.front(), model, sched, inj, g);

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_path, ec);
    if (ec) throw IoError("cannot create directory: " + cfg.out_path);
    char name[32];
    for (std::size_t i = 0; i < result.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "frame_%03zu.ppm", i);
        const std::string path = (fs::path(cfg.out_path) / name).string();
        write_image(path, result.frames[i]);
    }
    if (!cfg.report_path.empty()) {
        std::ofstream f(cfg.report_path);
        if (!f) throw IoError("cannot open for writing: " + cfg.report_path);
        if (result.frames.size() >= 2) f << consistency_csv(result.report);
        else f << "i,diff\n";
    }
    return 0;
}

void build_app(CLI::App& app, RunConfig& cfg) {
    app.require_subcommand(1);

    auto add_schedule_flags = [&cfg](CLI::App* sub) {
        sub->add_option("--steps", cfg.steps, "denoising step count")->check(CLI::PositiveNumber);
        sub->add_option("--schedule", cfg.schedule, "noise schedule: linear | cosine");
        sub->add_option("--alpha-min", cfg.alpha_min, "terminal alpha of the schedule")
            ->check(CLI::Range(1e-9, 0.999999));
        sub->add_option("--seed", cfg.seed, "seed for all randomness");
    };
    auto add_injection_flags = [&cfg](CLI::App* sub) {
        sub->add_option("--lambda", cfg.lambda, "style scaling factor")
            ->check(CLI::PositiveNumber);
        sub->add_option("--window", cfg.window, "injection step window start:end");
        sub->add_option("--blocks", cfg.blocks, "comma-separated attention block indices");
        sub->add_option("--sain", cfg.sain, "global adjustment: off | printed | prose");
        sub->add_option("--mask", cfg.mask_path, "style mask PGM (255 interior, 0 exterior)");
    };

    CLI::App* train = app.add_subcommand("train-toy-denoiser",
                                         "train the toy denoiser on procedural textures");
    train->add_option("--size", cfg.size, "texture side length")->check(CLI::PositiveNumber);
    train->add_option("--count", cfg.count, "number of training textures")
        ->check(CLI::PositiveNumber);
    train->add_option("--kinds", cfg.kinds, "texture kinds: stripes,dots,blobs");
    train->add_option("--epochs", cfg.epochs, "training epochs")->check(CLI::NonNegativeNumber);
    train->add_option("--lr", cfg.lr, "SGD learning rate")->check(CLI::NonNegativeNumber);
    train->add_option("--patch", cfg.patch, "patch size")->check(CLI::PositiveNumber);
    train->add_option("--embed-dim", cfg.embed_dim, "embedding width")
        ->check(CLI::PositiveNumber);
    train->add_option("--hidden", cfg.hidden, "MLP hidden width")->check(CLI::PositiveNumber);
    train->add_option("--num-blocks", cfg.num_blocks, "attention block count")
        ->check(CLI::PositiveNumber);
    train->add_option("--out", cfg.out_path, "output weights file")->required();
    add_schedule_flags(train);

    CLI::App* stylize_cmd = app.add_subcommand("stylize", "stylize one image");
    stylize_cmd->add_option("--content", cfg.content_path, "content image (PPM/PGM)")->required();
    stylize_cmd->add_option("--style", cfg.style_path, "style image(s), comma-separated")
        ->required();
    stylize_cmd->add_option("--weights", cfg.weights_path, "toy denoiser weights")->required();
    stylize_cmd->add_option("--out", cfg.out_path, "output image")->required();
    stylize_cmd->add_option("--diag", cfg.diag_path, "per-step diagnostics CSV");
    add_injection_flags(stylize_cmd);
    add_schedule_flags(stylize_cmd);

    CLI::App* diagnose = app.add_subcommand("diagnose", "emit per-step style-distance CSV");
    diagnose->add_option("--content", cfg.content_path, "content image (PPM/PGM)")->required();
    diagnose->add_option("--style", cfg.style_path, "style image(s), comma-separated")
        ->required();
    diagnose->add_option("--weights", cfg.weights_path, "toy denoiser weights")->required();
    diagnose->add_option("--diag", cfg.diag_path, "diagnostics CSV")->required();
    diagnose->add_option("--out", cfg.out_path, "optional output image");
    add_injection_flags(diagnose);
    add_schedule_flags(diagnose);

    CLI::App* video = app.add_subcommand("stylize-video", "stylize a frame directory");
    video->add_option("--frames", cfg.frames_dir, "input frame directory")->required();
    video->add_option("--style", cfg.style_path, "style image")->required();
    video->add_option("--weights", cfg.weights_path, "toy denoiser weights")->required();
    video->add_option("--out", cfg.out_path, "output frame directory")->required();
    video->add_option("--report", cfg.report_path, "consistency report CSV");
    video->add_option("--guidance-weight", cfg.guidance_weight, "energy guidance step size")
        ->check(CLI::NonNegativeNumber);
    add_injection_flags(video);
    add_schedule_flags(video);
}

}  // namespace

RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig cfg;
    CLI::App app{"dual-path diffusion stylization engine"};
    app.footer("Every subcommand also accepts --config <file> with key=value lines\n"
               "(# comments allowed); explicit command-line flags override file values.");
    build_app(app, cfg);
    const std::vector<std::string> expanded = apply_config_file(args);
    std::vector<const char*> argv;
    argv.push_back("zstyle");
    for (const std::string& a : expanded) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::ostringstream help;
        help << app.help();
        for (const CLI::App* sub : app.get_subcommands({}))
            help << '\n' << sub->help();
        throw HelpRequested{help.str()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(std::string(e.what()) + " (run with --help)");
    }
    CLI::App* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    // Validate composite flags eagerly so bad values fail as usage errors.
    parse_window(cfg.window);
    parse_blocks(cfg.blocks);
    parse_sain(cfg.sain);
    return cfg;
}

int run(const RunConfig& cfg) {
    if (cfg.command == "train-toy-denoiser") return run_train(cfg);
    if (cfg.command == "stylize") return run_stylize(cfg, false);
    if (cfg.command == "diagnose") return run_stylize(cfg, true);
    if (cfg.command == "stylize-video") return run_video(cfg);
    throw UsageError("unknown command: " + cfg.command);
}

int run_mapped(const RunConfig& cfg) noexcept {
    try {
        return run(cfg);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
}

int main_entry(int argc, const char* const* argv) noexcept {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        const RunConfig cfg = parse_args(args);
        return run_mapped(cfg);
    } catch (const HelpRequested& h) {
        std::fputs(h.text.c_str(), stdout);
        return 0;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace zstyle::cli
