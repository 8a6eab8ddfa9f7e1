#include "zstyle/tensor_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace zstyle {

namespace {

void write_le_double(std::ostream& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_le_double(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (in.gcount() != 8) throw IoError("truncated ZTEN payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void write_zten(std::ostream& out, const Tensor& t) {
    out << "ZTEN " << t.rank();
    for (std::size_t e : t.shape()) out << ' ' << e;
    out << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) write_le_double(out, t[i]);
    if (!out) throw IoError("failed writing ZTEN stream");
}

Tensor read_zten(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("missing ZTEN header");
    std::istringstream hdr(line);
    std::string magic;
    std::size_t rank = 0;
    if (!(hdr >> magic >> rank) || magic != "ZTEN") throw IoError("bad ZTEN magic");
    if (rank == 0) throw IoError("ZTEN rank must be positive");
    std::vector<std::size_t> shape(rank);
    for (std::size_t i = 0; i < rank; ++i)
        if (!(hdr >> shape[i]) || shape[i] == 0) throw IoError("bad ZTEN extents");
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = read_le_double(in);
    return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    write_zten(f, t);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    return read_zten(f);
}

void save_trajectory(const std::string& dir, const Trajectory& traj) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);
    std::ofstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw IoError("cannot write trajectory manifest in " + dir);
    manifest << "T=" << traj.steps() << " dir=" << (traj.forward_direction ? "fwd" : "rev") << '\n';
    char name[32];
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        std::snprintf(name, sizeof(name), "state_%03zu.zten", i);
        save_tensor((fs::path(dir) / name).string(), traj.states[i]);
    }
}

Trajectory load_trajectory(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw IoError("cannot read trajectory manifest in " + dir);
    std::string line;
    std::getline(manifest, line);
    int steps = -1;
    char dirtag[8] = {0};
    if (std::sscanf(line.c_str(), "T=%d dir=%3s", &steps, dirtag) != 2 || steps < 0)
        throw IoError("malformed trajectory manifest: " + line);
    Trajectory traj;
    traj.forward_direction = std::string(dirtag) == "fwd";
    char name[32];
    for (int i = 0; i <= steps; ++i) {
        std::snprintf(name, sizeof(name), "state_%03d.zten", i);
        traj.states.push_back(load_tensor((fs::path(dir) / name).string()));
    }
    return traj;
}

}  // namespace zstyle
